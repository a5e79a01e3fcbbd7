use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Quadrature, ScalarSystem};
use crate::error::{Error, Result};
use crate::netmodel::MeanSpectrum;

/// Negative densities above this fraction of the field maximum are rounding noise.
const NEGATIVE_NOISE: f64 = 1e-3;
/// A point is treated as lying in the exceptional region when `|∂m/∂u|` at
/// `u = β` exceeds this multiple of `1/β²`.
const SLOPE_FACTOR: f64 = 10.0;
const MIN_PADDING: f64 = 0.1;

/// Uniform rectangular grid over the complex plane (`t` real axis, `s` imaginary axis).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub n_t: usize,
    pub n_s: usize,
}

impl Grid {
    pub fn new(t_min: f64, t_max: f64, s_min: f64, s_max: f64, n_t: usize, n_s: usize) -> Result<Self> {
        let g = Grid { t_min, t_max, s_min, s_max, n_t, n_s };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t < 3 || self.n_s < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid {}x{} too coarse; need at least 3 points per axis",
                self.n_t, self.n_s
            )));
        }
        let finite = [self.t_min, self.t_max, self.s_min, self.s_max].iter().all(|v| v.is_finite());
        if !finite || self.t_min >= self.t_max || self.s_min >= self.s_max {
            return Err(Error::InvalidArgument(format!(
                "grid bounds [{}, {}] x [{}, {}] are not an ordered box",
                self.t_min, self.t_max, self.s_min, self.s_max
            )));
        }
        Ok(())
    }

    /// Bounding box of the spectrum padded by `max(3·√V_row, 0.1)` on every side.
    pub fn around_spectrum(spectrum: &MeanSpectrum, v_row: f64, n_t: usize, n_s: usize) -> Result<Self> {
        let (t0, t1, s0, s1) = spectrum.bounding_box();
        let pad = (3.0 * v_row.max(0.0).sqrt()).max(MIN_PADDING);
        let s_half = s0.abs().max(s1.abs()) + pad;
        Grid::new(t0 - pad, t1 + pad, -s_half, s_half, n_t, n_s)
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.n_t - 1) as f64
    }

    pub fn ds(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n_s - 1) as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dt() * self.ds()
    }

    pub fn len(&self) -> usize {
        self.n_t * self.n_s
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Symmetric about the real axis; `s_at(n_s − 1 − j) == −s_at(j)` exactly.
    pub fn is_conjugate_symmetric(&self) -> bool {
        self.s_min == -self.s_max
    }

    pub fn t_at(&self, i: usize) -> f64 {
        if i + 1 == self.n_t {
            self.t_max
        } else {
            self.t_min + i as f64 * self.dt()
        }
    }

    pub fn s_at(&self, j: usize) -> f64 {
        if self.is_conjugate_symmetric() {
            let centre = 0.5 * (self.n_s - 1) as f64;
            (j as f64 - centre) * self.ds()
        } else if j + 1 == self.n_s {
            self.s_max
        } else {
            self.s_min + j as f64 * self.ds()
        }
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.t_at(i), self.s_at(j))
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_s + j
    }

    /// Nearest grid node to `z`, if `z` lies within half a cell of the grid.
    pub fn locate(&self, z: Complex64) -> Option<(usize, usize)> {
        let fi = ((z.re - self.t_min) / self.dt()).round();
        let fj = ((z.im - self.s_min) / self.ds()).round();
        if fi < 0.0 || fj < 0.0 || fi > (self.n_t - 1) as f64 || fj > (self.n_s - 1) as f64 || !fi.is_finite() {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Same resolution, bounds mapped through `x ↦ 1 + α(x − 1)`, `y ↦ αy`.
    fn affine(&self, alpha: f64) -> Self {
        Grid {
            t_min: 1.0 + alpha * (self.t_min - 1.0),
            t_max: 1.0 + alpha * (self.t_max - 1.0),
            s_min: alpha * self.s_min,
            s_max: alpha * self.s_max,
            ..*self
        }
    }
}

/// Post-processing counters for a computed density field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldDiagnostics {
    /// Points masked out (non-finite value or exceptional-region slope test).
    pub masked: usize,
    /// Negative values within rounding noise, set to zero.
    pub clipped: usize,
    /// Negative values beyond rounding noise (also set to zero).
    pub large_negative: usize,
    /// Most negative raw value before clipping.
    pub min_raw: f64,
}

/// Nonnegative density (per unit area) sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub grid: Grid,
    /// Row-major values, `t` outer and `s` inner.
    pub values: Vec<f64>,
    pub support_mask: Vec<bool>,
    pub beta: Option<f64>,
    pub u_max: Option<f64>,
    pub diagnostics: FieldDiagnostics,
}

impl DensityField {
    pub fn zeros(grid: Grid) -> Self {
        DensityField {
            values: vec![0.0; grid.len()],
            support_mask: vec![true; grid.len()],
            grid,
            beta: None,
            u_max: None,
            diagnostics: FieldDiagnostics::default(),
        }
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Density at the grid node nearest `z`; zero off the grid.
    pub fn value_near(&self, z: Complex64) -> f64 {
        self.grid.locate(z).map_or(0.0, |(i, j)| self.value(i, j))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Riemann sum of the values over the grid.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Mass carried by grid nodes satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(Complex64) -> bool) -> f64 {
        let mut total = 0.0;
        for i in 0..self.grid.n_t {
            for j in 0..self.grid.n_s {
                if pred(self.grid.point(i, j)) {
                    total += self.value(i, j);
                }
            }
        }
        total * self.grid.cell_area()
    }

    /// Largest `|f(t, s) − f(t, −s)|` over mirrored node pairs (symmetric grids only).
    pub fn conjugate_asymmetry(&self) -> Option<f64> {
        if !self.grid.is_conjugate_symmetric() {
            return None;
        }
        let n_s = self.grid.n_s;
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.n_t {
            for j in 0..n_s / 2 {
                worst = worst.max((self.value(i, j) - self.value(i, n_s - 1 - j)).abs());
            }
        }
        Some(worst)
    }
}

/// Riemann-sum mass of a field.
pub fn field_mass(field: &DensityField) -> f64 {
    field.mass()
}

/// Approximate spectral density `−(1/4π) ΔΦ` of `Ξ` on `grid`.
///
/// Rows of constant `t` are independent work items evaluated in parallel;
/// within a row the solver is warm-started from the previous point. On a
/// grid symmetric about the real axis only the upper half is solved and the
/// result mirrored.
pub fn density_field(
    v_row: f64,
    v_col: f64,
    spectrum: &MeanSpectrum,
    grid: &Grid,
    quad: &Quadrature,
) -> Result<DensityField> {
    grid.validate()?;
    quad.validate()?;
    let n_s = grid.n_s;
    let mirror = grid.is_conjugate_symmetric() && is_conjugate_closed(spectrum);
    let first_j = if mirror { n_s / 2 } else { 0 };

    let rows: Vec<Vec<(f64, f64)>> = (0..grid.n_t)
        .into_par_iter()
        .map(|i| -> Result<Vec<(f64, f64)>> {
            let mut row = vec![(0.0, 0.0); n_s];
            let mut warm = None;
            for j in first_j..n_s {
                let sys = ScalarSystem::new(v_row, v_col, spectrum, grid.point(i, j))?;
                let sample = sys.phi(quad, warm)?;
                warm = Some(sample.top_product);
                row[j] = (sample.phi, sample.slope_at_beta);
            }
            if mirror {
                for j in 0..first_j {
                    row[j] = row[n_s - 1 - j];
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;

    let phi = |i: usize, j: usize| rows[i][j].0;
    let (dt, ds) = (grid.dt(), grid.ds());
    let mut values = vec![0.0; grid.len()];
    let mut mask = vec![false; grid.len()];
    let slope_limit = SLOPE_FACTOR / (quad.beta * quad.beta);
    let mut diagnostics = FieldDiagnostics::default();

    for i in 1..grid.n_t - 1 {
        for j in 1..n_s - 1 {
            let lap = (phi(i + 1, j) - 2.0 * phi(i, j) + phi(i - 1, j)) / (dt * dt)
                + (phi(i, j + 1) - 2.0 * phi(i, j) + phi(i, j - 1)) / (ds * ds);
            let f = -lap / (4.0 * PI);
            let k = grid.index(i, j);
            if !f.is_finite() || rows[i][j].1.abs() > slope_limit {
                diagnostics.masked += 1;
                continue;
            }
            mask[k] = true;
            values[k] = f;
        }
    }

    let max = values.iter().copied().fold(0.0, f64::max);
    diagnostics.min_raw = values.iter().copied().fold(0.0, f64::min);
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v >= -NEGATIVE_NOISE * max {
                diagnostics.clipped += 1;
            } else {
                diagnostics.large_negative += 1;
            }
            *v = 0.0;
        }
    }

    Ok(DensityField {
        grid: *grid,
        values,
        support_mask: mask,
        beta: Some(quad.beta),
        u_max: Some(quad.u_max),
        diagnostics,
    })
}

fn is_conjugate_closed(spectrum: &MeanSpectrum) -> bool {
    spectrum.values.iter().all(|&(z, k)| {
        z.im == 0.0 || spectrum.values.iter().any(|&(w, l)| l == k && w == z.conj())
    })
}

/// Pushes a density of `Ξ` forward to `W = I − α(I − Ξ)`:
/// `f_W(x, y) = α⁻² f_Ξ((x − 1)/α + 1, y/α)`.
pub fn transform_to_iteration(field: &DensityField, alpha: f64) -> Result<DensityField> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1]")));
    }
    let scale = 1.0 / (alpha * alpha);
    Ok(DensityField {
        grid: field.grid.affine(alpha),
        values: field.values.iter().map(|v| v * scale).collect(),
        support_mask: field.support_mask.clone(),
        beta: field.beta,
        u_max: field.u_max,
        diagnostics: field.diagnostics,
    })
}
