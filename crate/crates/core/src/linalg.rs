//! Small dense linear-algebra helpers shared by the spectral modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// All eigenvalues of a real square matrix (general, non-symmetric).
///
/// Uses faer's Hessenberg QR, which copes with permutation-like matrices that
/// stall an unshifted-restart Schur iteration.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    match m.nrows() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Complex64::new(m[(0, 0)], 0.0)]),
        _ => {
            let n = m.nrows();
            let a = faer::Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
            let values = a.eigenvalues().map_err(|e| Error::NoConvergence {
                iterations: 0,
                context: format!("dense eigensolve: {e:?}"),
            })?;
            Ok(values.into_iter().map(|z| Complex64::new(z.re, z.im)).collect())
        }
    }
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Largest entry of `|A A^T - A^T A|`.
pub fn normality_defect(m: &DMatrix<f64>) -> f64 {
    let mt = m.transpose();
    (m * &mt - &mt * m).amax()
}

/// Groups values closer than `tol` (in modulus) into (representative, count) pairs.
///
/// The representative is the mean of the cluster; the output is sorted by
/// real part then imaginary part so it is independent of input order.
pub fn cluster_values(values: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut sorted: Vec<Complex64> = values.to_vec();
    sorted.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    let mut members: Vec<Vec<Complex64>> = Vec::new();
    for z in sorted {
        match clusters.iter().position(|(c, _)| (*c - z).norm() <= tol) {
            Some(k) => {
                members[k].push(z);
                let n = members[k].len();
                clusters[k] = (members[k].iter().sum::<Complex64>() / n as f64, n);
            }
            None => {
                clusters.push((z, 1));
                members.push(vec![z]);
            }
        }
    }
    clusters.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
    clusters
}

/// SplitMix64 finaliser, used to derive independent per-trial seeds from a master seed.
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
