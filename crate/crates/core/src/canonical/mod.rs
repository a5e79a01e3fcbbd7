//! Girko's K25 canonical equations for matrices with a normal mean.
//!
//! For a node-transitive model the diagonal matrices `C₁`, `C₂` collapse to
//! scalars and the Gram spectra of `B − zI` are `|λ_r − z|²`, so at every
//! `(u, z)` the system is
//!
//! ```text
//! c₁ = u + V_row · mean_r 1 / (c₂ + |λ_r − z|²/c₁)
//! c₂ = 1 + V_col · mean_r 1 / (c₁ + |λ_r − z|²/c₂)
//! m  =             mean_r 1 / (c₁ + |λ_r − z|²/c₂)
//! ```
//!
//! With `p = c₁c₂` and `h(p) = mean_r 1/(p + |λ_r − z|²)` both equations
//! close: `c₁ = u / (1 − V_row h)`, `c₂ = 1 / (1 − V_col h)`, and `p` is the
//! unique root of `p (1 − V_row h(p)) (1 − V_col h(p)) = u` on the branch where
//! both factors are positive. That left-hand side is strictly increasing
//! there, so [`solve_pair`] brackets and polishes the root with safeguarded
//! Newton steps. [`solve_pair_damped`] runs the plain damped fixed-point
//! iteration instead; it is slow inside the spectral bulk for small `u` but
//! is kept as an independent check.

mod field;
mod general;

pub use field::{density_field, field_mass, transform_to_iteration, DensityField, FieldDiagnostics, Grid};
pub use general::{general_canonical, GeneralSolution, GENERAL_MAX_NODES};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{BlockModel, MeanSpectrum, SpectrumScale};

/// Scalar solution of the reduced canonical equations at one `(u, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalPair {
    pub c1: f64,
    pub c2: f64,
    pub u: f64,
    pub z: Complex64,
    pub iterations: usize,
}

impl CanonicalPair {
    pub fn product(&self) -> f64 {
        self.c1 * self.c2
    }
}

/// Integration settings for `Φ(z) = ∫_β^{u_max} m(u, z) du`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub beta: f64,
    pub u_max: f64,
    pub nodes: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { beta: 1e-6, u_max: 1e2, nodes: 200 }
    }
}

impl Quadrature {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < self.u_max && self.u_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs 0 < beta < u_max, got beta = {}, u_max = {}",
                self.beta, self.u_max
            )));
        }
        if self.nodes < 2 {
            return Err(Error::InvalidArgument("quadrature needs at least 2 nodes".into()));
        }
        Ok(())
    }

    /// Log-spaced nodes, ascending from `beta` to `u_max`.
    pub fn nodes(&self) -> Vec<f64> {
        let (a, b) = (self.beta.ln(), self.u_max.ln());
        let n = self.nodes - 1;
        (0..=n)
            .map(|k| {
                if k == 0 {
                    self.beta
                } else if k == n {
                    self.u_max
                } else {
                    (a + (b - a) * k as f64 / n as f64).exp()
                }
            })
            .collect()
    }

    pub fn doubled(&self) -> Self {
        Quadrature { nodes: 2 * self.nodes - 1, ..*self }
    }
}

/// The reduced system at a fixed `z`: variance sums and the squared distances
/// `|λ_r − z|²` with their spectral weights.
#[derive(Debug, Clone)]
pub struct ScalarSystem {
    v_row: f64,
    v_col: f64,
    z: Complex64,
    dist2: Vec<f64>,
    weights: Vec<f64>,
}

const ROOT_MAX_ITER: usize = 500;
const DAMPING: f64 = 0.5;
const DAMPED_MAX_ITER: usize = 10_000;
const DAMPED_TOL: f64 = 1e-10;

impl ScalarSystem {
    pub fn new(v_row: f64, v_col: f64, spectrum: &MeanSpectrum, z: Complex64) -> Result<Self> {
        if !(v_row >= 0.0 && v_col >= 0.0 && v_row.is_finite() && v_col.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "variance sums must be finite and nonnegative (V_row = {v_row}, V_col = {v_col})"
            )));
        }
        if spectrum.dimension() == 0 {
            return Err(Error::InvalidArgument("empty mean spectrum".into()));
        }
        let weighted = spectrum.weighted();
        Ok(ScalarSystem {
            v_row,
            v_col,
            z,
            dist2: weighted.iter().map(|(l, _)| (l - z).norm_sqr()).collect(),
            weights: weighted.iter().map(|(_, w)| *w).collect(),
        })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// `h(p) = mean_r 1/(p + |λ_r − z|²)` and its derivative.
    fn h(&self, p: f64) -> (f64, f64) {
        let mut h = 0.0;
        let mut dh = 0.0;
        for (&w, &d) in self.weights.iter().zip(&self.dist2) {
            let inv = 1.0 / (p + d);
            h += w * inv;
            dh -= w * inv * inv;
        }
        (h, dh)
    }

    /// Left edge of the admissible branch: the root of `max(V) h(p) = 1`, or 0.
    fn branch_start(&self) -> Result<f64> {
        let v = self.v_row.max(self.v_col);
        let at_zero: f64 = self
            .weights
            .iter()
            .zip(&self.dist2)
            .map(|(&w, &d)| if d == 0.0 { f64::INFINITY } else { w / d })
            .sum();
        if v * at_zero <= 1.0 {
            return Ok(0.0);
        }
        // v h(p) - 1 is convex and decreasing; bracket then Newton with bisection fallback.
        let mut lo = 0.0;
        let mut hi = v.max(f64::MIN_POSITIVE);
        while v * self.h(hi).0 > 1.0 {
            lo = hi;
            hi *= 2.0;
        }
        let mut p = hi;
        for _ in 0..ROOT_MAX_ITER {
            let (h, dh) = self.h(p);
            let g = v * h - 1.0;
            if g > 0.0 {
                lo = p;
            } else {
                hi = p;
            }
            let mut next = p - g / (v * dh);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - p).abs() <= 4.0 * f64::EPSILON * p || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            p = next;
        }
        Err(Error::NoConvergence {
            iterations: ROOT_MAX_ITER,
            context: format!("branch edge at z = {}", self.z),
        })
    }

    /// `F(p) = p (1 − V_row h)(1 − V_col h)` and `F'(p)`.
    fn residual(&self, p: f64) -> (f64, f64, f64) {
        let (h, dh) = self.h(p);
        let a = 1.0 - self.v_row * h;
        let b = 1.0 - self.v_col * h;
        let f = p * a * b;
        let df = a * b - p * dh * (self.v_row * b + self.v_col * a);
        (f, df, h)
    }

    /// Solves for `(c₁, c₂)`; `guess` is a previous value of `p = c₁c₂`.
    pub fn solve(&self, u: f64, guess: Option<f64>) -> Result<CanonicalPair> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::InvalidArgument(format!("regulariser u = {u} must be positive")));
        }
        if self.v_row == 0.0 && self.v_col == 0.0 {
            return Ok(CanonicalPair { c1: u, c2: 1.0, u, z: self.z, iterations: 0 });
        }
        let start = self.branch_start()?;
        let mut lo = start;
        let mut hi = start + u + self.v_row + self.v_col + 1.0;
        while self.residual(hi).0 < u {
            lo = hi;
            hi *= 2.0;
        }
        let mut p = match guess {
            Some(g) if g > lo && g < hi => g,
            _ => 0.5 * (lo + hi),
        };
        for it in 1..=ROOT_MAX_ITER {
            let (f, df, _) = self.residual(p);
            let g = f - u;
            if g == 0.0 {
                return Ok(self.pair_from_product(u, p, it));
            }
            if g < 0.0 {
                lo = p;
            } else {
                hi = p;
            }
            let mut next = p - g / df;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - p).abs() <= 2.0 * f64::EPSILON * p || (hi - lo) <= 2.0 * f64::EPSILON * hi {
                return Ok(self.pair_from_product(u, next, it));
            }
            p = next;
        }
        Err(Error::NoConvergence {
            iterations: ROOT_MAX_ITER,
            context: format!("canonical pair at u = {u}, z = {}", self.z),
        })
    }

    fn pair_from_product(&self, u: f64, p: f64, iterations: usize) -> CanonicalPair {
        let (h, _) = self.h(p);
        CanonicalPair {
            c1: u / (1.0 - self.v_row * h),
            c2: 1.0 / (1.0 - self.v_col * h),
            u,
            z: self.z,
            iterations,
        }
    }

    /// One application of the canonical map.
    pub fn apply(&self, u: f64, c1: f64, c2: f64) -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (&w, &d) in self.weights.iter().zip(&self.dist2) {
            s1 += w / (c2 + d / c1);
            s2 += w / (c1 + d / c2);
        }
        (u + self.v_row * s1, 1.0 + self.v_col * s2)
    }

    /// Damped fixed-point iteration `x ← (1−ω)x + ωF(x)`, `ω = 0.5`.
    ///
    /// Stops when the extrapolated distance to the fixed point, estimated from
    /// the observed contraction of successive steps, is below `1e-10` relative.
    pub fn solve_damped(&self, u: f64, init: (f64, f64)) -> Result<CanonicalPair> {
        self.solve_damped_with(u, init, DAMPED_TOL, DAMPED_MAX_ITER)
    }

    pub fn solve_damped_with(&self, u: f64, init: (f64, f64), tol: f64, max_iter: usize) -> Result<CanonicalPair> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::InvalidArgument(format!("regulariser u = {u} must be positive")));
        }
        let (mut c1, mut c2) = init;
        if !(c1 > 0.0 && c2 > 0.0) {
            return Err(Error::InvalidArgument("initial (c1, c2) must be positive".into()));
        }
        let mut prev_step = f64::INFINITY;
        for it in 1..=max_iter {
            let (f1, f2) = self.apply(u, c1, c2);
            let n1 = (1.0 - DAMPING) * c1 + DAMPING * f1;
            let n2 = (1.0 - DAMPING) * c2 + DAMPING * f2;
            let step = ((n1 - c1) / n1).abs().max(((n2 - c2) / n2).abs());
            c1 = n1;
            c2 = n2;
            let rate = (step / prev_step).min(0.999_999);
            prev_step = step;
            let remaining = if rate.is_finite() && rate > 0.0 { step * rate / (1.0 - rate) } else { step };
            if step == 0.0 || (it > 2 && remaining.max(step) < tol) {
                return Ok(CanonicalPair { c1, c2, u, z: self.z, iterations: it });
            }
        }
        Err(Error::NoConvergence {
            iterations: max_iter,
            context: format!("damped canonical iteration at u = {u}, z = {}", self.z),
        })
    }

    /// `m = mean_r 1/(c₁ + |λ_r − z|²/c₂)`.
    pub fn m(&self, pair: &CanonicalPair) -> f64 {
        self.weights
            .iter()
            .zip(&self.dist2)
            .map(|(&w, &d)| w / (pair.c1 + d / pair.c2))
            .sum()
    }

    /// `Φ(z)` by the endpoint-corrected trapezoid rule in `ln u` on the log-spaced nodes, solving
    /// from `u_max` down to `β` and warm-starting each node from the last.
    ///
    /// `start` seeds the solve at `u_max` (e.g. from a neighbouring grid point);
    /// the returned [`PhiSample`] carries the `p` found there for the next caller.
    pub fn phi(&self, quad: &Quadrature, start: Option<f64>) -> Result<PhiSample> {
        quad.validate()?;
        let nodes = quad.nodes();
        let mut guess = start;
        let mut integrand = vec![0.0; nodes.len()];
        let mut m_values = vec![0.0; nodes.len()];
        let mut top_product = None;
        for (k, &u) in nodes.iter().enumerate().rev() {
            let pair = self.solve(u, guess)?;
            guess = Some(pair.product());
            if top_product.is_none() {
                top_product = guess;
            }
            let m = self.m(&pair);
            m_values[k] = m;
            integrand[k] = u * m;
        }
        let mut phi = 0.0;
        for k in 0..nodes.len() - 1 {
            let dx = nodes[k + 1].ln() - nodes[k].ln();
            phi += 0.5 * dx * (integrand[k] + integrand[k + 1]);
        }
        // Euler-Maclaurin endpoint correction: the nodes are uniform in ln u,
        // so removing the h²/12 term with one-sided slopes makes the rule O(h⁴).
        let n = nodes.len();
        if n >= 3 {
            let h = (quad.u_max.ln() - quad.beta.ln()) / (n - 1) as f64;
            let f = &integrand;
            let left = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
            let right = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
            phi -= h * h / 12.0 * (right - left);
        }
        let slope_at_beta = (m_values[1] - m_values[0]) / (nodes[1] - nodes[0]);
        Ok(PhiSample {
            phi,
            slope_at_beta,
            top_product: top_product.unwrap_or(1.0),
        })
    }
}

/// Result of one `Φ(z)` evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSample {
    pub phi: f64,
    /// Finite-difference `∂m/∂u` between the two smallest nodes.
    pub slope_at_beta: f64,
    /// `p = c₁c₂` at `u_max`, usable as a warm start for a neighbouring `z`.
    pub top_product: f64,
}

/// Solves the reduced canonical equations at `(u, z)`.
pub fn solve_pair(u: f64, z: Complex64, v_row: f64, v_col: f64, spectrum: &MeanSpectrum) -> Result<CanonicalPair> {
    ScalarSystem::new(v_row, v_col, spectrum, z)?.solve(u, None)
}

/// Damped fixed-point route to the same pair, from the initial point `(u + 1, 2)`.
pub fn solve_pair_damped(
    u: f64,
    z: Complex64,
    v_row: f64,
    v_col: f64,
    spectrum: &MeanSpectrum,
) -> Result<CanonicalPair> {
    ScalarSystem::new(v_row, v_col, spectrum, z)?.solve_damped(u, (u + 1.0, 2.0))
}

/// `m(u, z)` for a solved pair.
pub fn m_value(pair: &CanonicalPair, z: Complex64, spectrum: &MeanSpectrum) -> f64 {
    spectrum
        .weighted()
        .iter()
        .map(|&(l, w)| w / (pair.c1 + (l - z).norm_sqr() / pair.c2))
        .sum()
}

/// `Φ(z) = ∫_β^{u_max} m(u, z) du`.
pub fn phi_integral(
    z: Complex64,
    v_row: f64,
    v_col: f64,
    spectrum: &MeanSpectrum,
    quad: &Quadrature,
) -> Result<f64> {
    Ok(ScalarSystem::new(v_row, v_col, spectrum, z)?.phi(quad, None)?.phi)
}

/// Grid bounds `(t_min, t_max, s_min, s_max)`.
pub type Bounds = (f64, f64, f64, f64);

/// Density of `Ξ = A/γ` and its push-forward to the iteration matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDensity {
    pub xi: DensityField,
    pub iteration: DensityField,
}

/// Runs the full density pipeline for a validated model.
///
/// `iteration_bounds` are in the iteration-matrix plane; by default the grid
/// is the padded bounding box of the scaled mean spectrum.
pub fn model_density(
    model: &BlockModel,
    n_t: usize,
    n_s: usize,
    iteration_bounds: Option<Bounds>,
    quad: &Quadrature,
) -> Result<ModelDensity> {
    model.require_scalar_path()?;
    quad.validate()?;
    let vp = model.variance_profile()?;
    let spectrum = model.mean_spectrum(SpectrumScale::Scaled)?;
    let alpha = model.alpha();
    let grid = match iteration_bounds {
        // Pull W-plane bounds back through x_W = 1 + α(x_Ξ − 1), y_W = α y_Ξ.
        Some((t0, t1, s0, s1)) => Grid::new(
            1.0 + (t0 - 1.0) / alpha,
            1.0 + (t1 - 1.0) / alpha,
            s0 / alpha,
            s1 / alpha,
            n_t,
            n_s,
        )?,
        None => Grid::around_spectrum(&spectrum, vp.row_sum, n_t, n_s)?,
    };
    let xi = density_field(vp.row_sum, vp.col_sum, &spectrum, &grid, quad)?;
    let iteration = transform_to_iteration(&xi, alpha)?;
    Ok(ModelDensity { xi, iteration })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GOLDEN: f64 = 1.618_033_988_749_895;

    fn zeros() -> MeanSpectrum {
        MeanSpectrum::atom(Complex64::new(0.0, 0.0), 1000)
    }

    fn paper_spectrum(s: usize) -> (MeanSpectrum, f64) {
        use crate::netmodel::{build_model, ModelConfig};
        let m = build_model(&ModelConfig::cyclic(5, s, 0.05, 0.03, 1.0)).unwrap();
        (m.mean_spectrum(SpectrumScale::Scaled).unwrap(), m.variance_profile().unwrap().row_sum)
    }

    #[test]
    fn zero_variance_base_case() {
        let (spec, _) = paper_spectrum(20);
        for z in [Complex64::new(0.3, 0.1), Complex64::new(-2.0, 5.0)] {
            let pair = solve_pair(1.0, z, 0.0, 0.0, &spec).unwrap();
            assert_eq!((pair.c1, pair.c2), (1.0, 1.0));
        }
    }

    #[test]
    fn circular_law_golden_ratio() {
        let pair = solve_pair(1.0, Complex64::new(0.0, 0.0), 1.0, 1.0, &zeros()).unwrap();
        assert!((pair.c1 - GOLDEN).abs() < 1e-12, "{pair:?}");
        assert!((pair.c2 - GOLDEN).abs() < 1e-12);
        let m = m_value(&pair, Complex64::new(0.0, 0.0), &zeros());
        assert!((m - 1.0 / GOLDEN).abs() < 1e-12);
    }

    #[test]
    fn damped_iteration_agrees_with_root_from_random_starts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = ScalarSystem::new(1.0, 1.0, &zeros(), Complex64::new(0.0, 0.0)).unwrap();
        for _ in 0..5 {
            let init = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
            let pair = sys.solve_damped(1.0, init).unwrap();
            assert!((pair.c1 - GOLDEN).abs() < 1e-9);
            assert!((pair.c2 - GOLDEN).abs() < 1e-9);
        }
    }

    #[test]
    fn root_is_independent_of_warm_start() {
        let (spec, v) = paper_spectrum(30);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let z = Complex64::new(rng.random_range(-0.6..1.2), rng.random_range(-0.6..0.6));
            let u = 10f64.powf(rng.random_range(-6.0..2.0));
            let sys = ScalarSystem::new(v, v, &spec, z).unwrap();
            let base = sys.solve(u, None).unwrap();
            assert!(base.c1 > u && base.c2 > 1.0);
            for _ in 0..5 {
                let g = 10f64.powf(rng.random_range(-8.0..3.0));
                let other = sys.solve(u, Some(g)).unwrap();
                assert!(((other.c1 - base.c1) / base.c1).abs() < 1e-8);
                assert!(((other.c2 - base.c2) / base.c2).abs() < 1e-8);
            }
            // The pair is a fixed point of the original map.
            let (f1, f2) = sys.apply(u, base.c1, base.c2);
            assert!(((f1 - base.c1) / base.c1).abs() < 1e-10, "u={u} z={z} {base:?} {f1} {f2}");
            assert!(((f2 - base.c2) / base.c2).abs() < 1e-10);
        }
    }

    #[test]
    fn unequal_variance_sums_still_satisfy_the_map() {
        let (spec, _) = paper_spectrum(10);
        let sys = ScalarSystem::new(0.3, 0.7, &spec, Complex64::new(0.1, 0.2)).unwrap();
        for u in [1e-6, 1e-3, 1.0, 50.0] {
            let pair = sys.solve(u, None).unwrap();
            let (f1, f2) = sys.apply(u, pair.c1, pair.c2);
            assert!(((f1 - pair.c1) / pair.c1).abs() < 1e-10);
            assert!(((f2 - pair.c2) / pair.c2).abs() < 1e-10);
        }
    }

    #[test]
    fn m_examples() {
        let atom = MeanSpectrum::atom(Complex64::new(0.4, -0.2), 10);
        let z = Complex64::new(-0.1, 0.3);
        let pair = solve_pair(0.25, z, 0.0, 0.0, &atom).unwrap();
        let r2 = (Complex64::new(0.4, -0.2) - z).norm_sqr();
        assert!((m_value(&pair, z, &atom) - 1.0 / (0.25 + r2)).abs() < 1e-15);

        let far = Complex64::new(1e4, 0.0);
        let pair = solve_pair(1.0, far, 1.0, 1.0, &zeros()).unwrap();
        assert!(m_value(&pair, far, &zeros()) < 1e-7);
    }

    #[test]
    fn m_is_bounded_and_decreasing_in_u() {
        let (spec, v) = paper_spectrum(50);
        for z in [Complex64::new(0.0, 0.0), Complex64::new(0.3, 0.25), Complex64::new(0.9, 0.0)] {
            let sys = ScalarSystem::new(v, v, &spec, z).unwrap();
            let mut last = f64::INFINITY;
            for u in Quadrature::default().nodes() {
                let m = sys.m(&sys.solve(u, None).unwrap());
                assert!(m > 0.0 && m <= 1.0 / u * (1.0 + 1e-12));
                assert!(m < last);
                last = m;
            }
        }
    }

    #[test]
    fn phi_matches_zero_variance_closed_form() {
        let q = Quadrature::default();
        let l0 = Complex64::new(0.2, 0.1);
        for z in [Complex64::new(0.5, -0.3), Complex64::new(0.2, 0.15), Complex64::new(-1.0, 2.0)] {
            let r2 = (l0 - z).norm_sqr();
            let exact = ((q.u_max + r2) / (q.beta + r2)).ln();
            let phi = phi_integral(z, 0.0, 0.0, &MeanSpectrum::atom(l0, 5), &q).unwrap();
            assert!(((phi - exact) / exact).abs() < 1e-4, "z={z}: {phi} vs {exact}");
        }
        let on_atom = phi_integral(l0, 0.0, 0.0, &MeanSpectrum::atom(l0, 5), &q).unwrap();
        assert!((on_atom - (1e8f64).ln()).abs() < 1e-10);
    }

    #[test]
    fn phi_decreases_away_from_atom() {
        let q = Quadrature::default();
        let atom = MeanSpectrum::atom(Complex64::new(0.0, 0.0), 3);
        let mut last = f64::INFINITY;
        for r in [0.0, 0.01, 0.1, 0.5, 1.0, 3.0] {
            let phi = phi_integral(Complex64::new(r, 0.0), 0.0, 0.0, &atom, &q).unwrap();
            assert!(phi < last);
            last = phi;
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            solve_pair(0.0, Complex64::new(0.0, 0.0), 1.0, 1.0, &zeros()),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            solve_pair(1.0, Complex64::new(0.0, 0.0), -1.0, 1.0, &zeros()),
            Err(Error::InvalidArgument(_))
        ));
        let bad = Quadrature { beta: 1.0, u_max: 0.5, nodes: 10 };
        assert!(phi_integral(Complex64::new(0.0, 0.0), 1.0, 1.0, &zeros(), &bad).is_err());
    }

    #[test]
    fn damped_iteration_reports_nonconvergence() {
        let sys = ScalarSystem::new(1.0, 1.0, &zeros(), Complex64::new(0.0, 0.0)).unwrap();
        let err = sys.solve_damped_with(1e-6, (2.0, 2.0), 1e-14, 50).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 50, .. }));
    }
}
