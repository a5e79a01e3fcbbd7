//! Spectral density approximations for large transpose-asymmetric random
//! directed networks, and consensus-acceleration filters designed from them.
//!
//! The pipeline is: [`netmodel`] describes a directed block model and its
//! mean/variance structure; [`canonical`] solves Girko's K25 canonical
//! equations and turns the solution into a density on a complex grid;
//! [`filterdesign`] extracts a filtering region from that density and solves a
//! small minimax problem for polynomial filter coefficients; [`consensus`]
//! evaluates filters on sampled networks.

pub mod canonical;
pub mod consensus;
pub mod error;
pub mod filterdesign;
pub mod io;
pub mod linalg;
pub mod netmodel;

pub use error::{Error, Result};

/// Version string embedded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
