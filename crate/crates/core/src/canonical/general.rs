//! Full per-node K25 system, for small networks only.
//!
//! No transitivity or normality is assumed: every iteration forms the
//! Hermitian matrices `C₂ + (B − zI)* C₁⁻¹ (B − zI)` and
//! `C₁ + (B − zI) C₂⁻¹ (B − zI)*` and inverts them exactly. It exists to
//! check the scalar reduction, so it favours transparency over speed.

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest network the oracle will accept.
pub const GENERAL_MAX_NODES: usize = 200;

const DAMPING: f64 = 0.5;
const TOL: f64 = 1e-13;
const MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSolution {
    pub c1_diag: DVector<f64>,
    pub c2_diag: DVector<f64>,
    pub m: f64,
    pub iterations: usize,
}

/// Solves for the diagonals of `C₁`, `C₂` given the `N×N` entry variances and mean matrix.
pub fn general_canonical(
    variances: &DMatrix<f64>,
    mean: &DMatrix<f64>,
    u: f64,
    z: Complex64,
) -> Result<GeneralSolution> {
    let n = mean.nrows();
    if n > GENERAL_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "general canonical oracle is limited to {GENERAL_MAX_NODES} nodes, got {n}"
        )));
    }
    if mean.ncols() != n || variances.nrows() != n || variances.ncols() != n || n == 0 {
        return Err(Error::InvalidArgument("mean and variance matrices must be N×N".into()));
    }
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::InvalidArgument(format!("regulariser u = {u} must be positive")));
    }
    if variances.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("entry variances must be finite and nonnegative".into()));
    }

    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let b = Complex64::new(mean[(i, j)], 0.0);
        if i == j {
            b - z
        } else {
            b
        }
    });
    let shifted_h = shifted.adjoint();

    let mut c1 = DVector::from_element(n, u + 1.0);
    let mut c2 = DVector::from_element(n, 2.0);
    let mut prev_step = f64::INFINITY;

    for it in 1..=MAX_ITER {
        let g1 = inverse_diagonal(&c1, &shifted, &shifted_h, &c2)?;
        let g2 = inverse_diagonal(&c2, &shifted_h, &shifted, &c1)?;
        let f1 = variances * &g2 + DVector::from_element(n, u);
        let f2 = variances.transpose() * &g1 + DVector::from_element(n, 1.0);
        let n1 = &c1 * (1.0 - DAMPING) + f1 * DAMPING;
        let n2 = &c2 * (1.0 - DAMPING) + f2 * DAMPING;
        let step = relative_change(&c1, &n1).max(relative_change(&c2, &n2));
        c1 = n1;
        c2 = n2;

        let rate = (step / prev_step).min(0.999_999);
        prev_step = step;
        let remaining = if rate.is_finite() && rate > 0.0 { step * rate / (1.0 - rate) } else { step };
        if step == 0.0 || (it > 2 && remaining.max(step) < TOL) {
            let g1 = inverse_diagonal(&c1, &shifted, &shifted_h, &c2)?;
            return Ok(GeneralSolution {
                m: g1.mean(),
                c1_diag: c1,
                c2_diag: c2,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITER,
        context: format!("general canonical system at u = {u}, z = {z}"),
    })
}

/// Diagonal of `(diag(a) + X diag(b)⁻¹ Y)⁻¹` where `Y = X*`.
fn inverse_diagonal(
    a: &DVector<f64>,
    x: &DMatrix<Complex64>,
    y: &DMatrix<Complex64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = a.len();
    let mut scaled = x.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= Complex64::new(b[j], 0.0);
    }
    let mut m = scaled * y;
    for i in 0..n {
        m[(i, i)] += Complex64::new(a[i], 0.0);
    }
    // Hermitian part only; rounding makes the product very slightly non-Hermitian.
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let inv = Cholesky::new(m)
        .ok_or_else(|| Error::NoConvergence {
            iterations: 0,
            context: "Gram matrix lost positive definiteness".into(),
        })?
        .inverse();
    Ok(DVector::from_fn(n, |i, _| inv[(i, i)].re))
}

fn relative_change(old: &DVector<f64>, new: &DVector<f64>) -> f64 {
    old.iter()
        .zip(new.iter())
        .map(|(a, b)| ((b - a) / b).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::ScalarSystem;
    use crate::netmodel::{build_model, BlockModel, ModelConfig, SpectrumScale};

    #[test]
    fn zero_variance_gives_base_values() {
        let model = build_model(&ModelConfig::cyclic(3, 4, 0.2, 0.1, 1.0)).unwrap();
        let b = model.mean_matrix();
        let sol = general_canonical(&DMatrix::zeros(12, 12), &b, 0.7, Complex64::new(0.1, 0.3)).unwrap();
        assert!(sol.c1_diag.iter().all(|&c| (c - 0.7).abs() < 1e-12));
        assert!(sol.c2_diag.iter().all(|&c| (c - 1.0).abs() < 1e-12));
    }

    #[test]
    fn transitive_miniature_collapses_to_scalar() {
        let model = build_model(&ModelConfig::cyclic(5, 6, 0.05, 0.03, 1.0)).unwrap();
        let gamma = model.expected_row_sum().unwrap();
        let vp = model.variance_profile().unwrap();
        let b = model.mean_matrix() / gamma;
        let spec = model.mean_spectrum(SpectrumScale::Scaled).unwrap();
        let (u, z) = (1e-3, Complex64::new(0.5, 0.2));
        let sol = general_canonical(&vp.entry_variances(6), &b, u, z).unwrap();
        let pair = ScalarSystem::new(vp.row_sum, vp.col_sum, &spec, z).unwrap().solve(u, None).unwrap();
        for k in 0..30 {
            assert!((sol.c1_diag[k] - pair.c1).abs() < 1e-8, "{} vs {}", sol.c1_diag[k], pair.c1);
            assert!((sol.c2_diag[k] - pair.c2).abs() < 1e-8);
        }
    }

    #[test]
    fn unequal_blocks_break_the_collapse() {
        let theta = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.2]);
        let model = BlockModel::new(2, 5, theta, 1.0).unwrap();
        let gamma = model.expected_row_sum().unwrap();
        let vp = model.variance_profile().unwrap();
        let b = model.mean_matrix() / gamma;
        let sol = general_canonical(&vp.entry_variances(5), &b, 0.1, Complex64::new(0.2, 0.1)).unwrap();
        assert!((sol.c1_diag[0] - sol.c1_diag[9]).abs() > 1e-3);
        assert!(!vp.transitive);
    }

    #[test]
    fn refuses_large_networks() {
        let n = GENERAL_MAX_NODES + 1;
        let err = general_canonical(&DMatrix::zeros(n, n), &DMatrix::zeros(n, n), 1.0, Complex64::new(0.0, 0.0));
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
