use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("model is not node-transitive: {0}")]
    NotTransitive(String),

    #[error("solver did not converge after {iterations} iterations ({context})")]
    NoConvergence { iterations: usize, context: String },

    #[error("empty filtering region: {0}")]
    EmptyRegion(String),

    #[error("reducible iteration matrix: {0}")]
    Reducible(String),

    #[error("periodic iteration matrix (period {0})")]
    Periodic(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for failures caused by bad user input rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::InvalidArgument(_)
                | Error::Degenerate(_)
                | Error::NotTransitive(_)
                | Error::Format(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
