//! Polynomial consensus filters designed against a sampled spectral region.
//!
//! A filter `p(λ) = Σ a_k λ^k` with `p(1) = 1` is chosen to minimise
//! `max_i |p(λ_i)|²` over sample points `λ_i`. Each `|p(λ)|²` is the
//! quadratic form `aᵀQ(λ)a` with `Q = r rᵀ + s sᵀ`, `r`, `s` the real and
//! imaginary parts of `(1, λ, …, λ^d)`. The minimax problem is solved by a
//! log-barrier interior-point method on the affine slice `Σa = 1`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::canonical::DensityField;
use crate::error::{Error, Result};
use crate::netmodel::MeanSpectrum;

/// Default cap on the number of design points.
pub const DEFAULT_MAX_POINTS: usize = 400;
/// Seed of the random perturbations used to certify local optimality.
pub const CERTIFY_SEED: u64 = 0x5eed_f11e;
const CERTIFY_TRIALS: usize = 200;
const CERTIFY_STEP: f64 = 1e-4;
const CERTIFY_SLACK: f64 = 1e-10;

/// Density threshold, absolute or as a fraction of the field maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Threshold {
    Absolute(f64),
    Relative(f64),
}

impl Threshold {
    pub fn resolve(&self, field_max: f64) -> f64 {
        match *self {
            Threshold::Absolute(t) => t,
            Threshold::Relative(f) => f * field_max,
        }
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Relative(0.02)
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Absolute(t) => write!(f, "{t}"),
            Threshold::Relative(r) => write!(f, "rel:{r}"),
        }
    }
}

impl From<Threshold> for String {
    fn from(t: Threshold) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for Threshold {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Threshold {
    type Err = Error;

    /// Accepts `rel:0.02`, `abs:0.5` or a bare number (absolute).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (rel, num) = if let Some(rest) = s.strip_prefix("rel:") {
            (true, rest)
        } else if let Some(rest) = s.strip_prefix("abs:") {
            (false, rest)
        } else {
            (false, s)
        };
        let v: f64 = num
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("cannot parse threshold '{s}'")))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold must be finite and nonnegative, got {v}")));
        }
        Ok(if rel { Threshold::Relative(v) } else { Threshold::Absolute(v) })
    }
}

/// Design points drawn from a thresholded density field.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRegion {
    pub kappa: f64,
    pub tau: Threshold,
    /// Threshold after resolving a relative value.
    pub tau_absolute: f64,
    /// Upper half-plane representatives (imaginary part ≥ 0).
    pub points: Vec<Complex64>,
    /// Number of grid points in the thresholded set before deduplication.
    pub candidates: usize,
    /// Number of boundary points kept.
    pub boundary: usize,
}

impl SampleRegion {
    /// A region from explicit points, deduplicated to the upper half-plane.
    pub fn from_points(points: &[Complex64], kappa: f64) -> Result<Self> {
        let points = dedup_conjugates(points);
        if points.is_empty() {
            return Err(Error::EmptyRegion("no design points supplied".into()));
        }
        Ok(SampleRegion {
            kappa,
            tau: Threshold::Absolute(0.0),
            tau_absolute: 0.0,
            candidates: points.len(),
            boundary: points.len(),
            points,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Folds points onto the closed upper half-plane and drops exact repeats.
/// Order of first appearance is kept.
pub fn dedup_conjugates(points: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(points.len());
    for p in points {
        let q = Complex64::new(p.re, p.im.abs());
        if !out.iter().any(|o| (o - q).norm() <= 1e-14 * (1.0 + q.norm())) {
            out.push(q);
        }
    }
    out
}

/// Grid points with density above `tau` and `|λ − 1| > kappa`.
///
/// Boundary points of the thresholded set come first; the rest are chosen by
/// farthest-point selection until `max_points` is reached.
pub fn extract_region(field: &DensityField, kappa: f64, tau: Threshold, max_points: usize) -> Result<SampleRegion> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    if max_points == 0 {
        return Err(Error::InvalidArgument("max_points must be at least 1".into()));
    }
    let grid = &field.grid;
    let tau_absolute = tau.resolve(field.max());
    let one = Complex64::new(1.0, 0.0);
    let inside = |i: usize, j: usize| {
        let k = grid.index(i, j);
        field.support_mask[k] && field.values[k] > tau_absolute && (grid.point(i, j) - one).norm() > kappa
    };

    let mut boundary = Vec::new();
    let mut interior = Vec::new();
    let mut candidates = 0;
    for i in 0..grid.n_t {
        for j in 0..grid.n_s {
            if !inside(i, j) {
                continue;
            }
            candidates += 1;
            let edge = i == 0
                || j == 0
                || i + 1 == grid.n_t
                || j + 1 == grid.n_s
                || !inside(i - 1, j)
                || !inside(i + 1, j)
                || !inside(i, j - 1)
                || !inside(i, j + 1);
            if edge {
                boundary.push(grid.point(i, j));
            } else {
                interior.push(grid.point(i, j));
            }
        }
    }
    if candidates == 0 {
        return Err(Error::EmptyRegion(format!(
            "no grid point has density above {tau_absolute:e} outside the {kappa} disk around 1"
        )));
    }

    let boundary = dedup_conjugates(&boundary);
    let interior: Vec<Complex64> = dedup_conjugates(&interior)
        .into_iter()
        .filter(|p| !boundary.iter().any(|b| (b - p).norm() <= 1e-14))
        .collect();

    let points = if boundary.len() >= max_points {
        farthest_points(&[], &boundary, max_points)
    } else {
        let extra = farthest_points(&boundary, &interior, max_points - boundary.len());
        boundary.iter().copied().chain(extra).collect()
    };
    let kept_boundary = boundary.len().min(max_points);
    Ok(SampleRegion {
        kappa,
        tau,
        tau_absolute,
        points,
        candidates,
        boundary: kept_boundary,
    })
}

/// Greedy farthest-point selection of `k` points from `pool`, given already chosen `seeds`.
fn farthest_points(seeds: &[Complex64], pool: &[Complex64], k: usize) -> Vec<Complex64> {
    if k >= pool.len() {
        return pool.to_vec();
    }
    let mut dist: Vec<f64> = pool
        .iter()
        .map(|p| seeds.iter().map(|s| (s - p).norm()).fold(f64::INFINITY, f64::min))
        .collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        // First maximum wins, so ties resolve deterministically.
        let (best, _) = dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        let p = pool[best];
        chosen.push(p);
        for (d, q) in dist.iter_mut().zip(pool) {
            *d = d.min((q - p).norm());
        }
    }
    chosen
}

/// Real PSD form with `aᵀ Q a = |Σ a_k λ^k|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticForm {
    pub matrix: DMatrix<f64>,
    pub lambda: Complex64,
}

/// Real and imaginary parts of `(1, λ, …, λ^d)`.
fn power_parts(lambda: Complex64, d: usize) -> (DVector<f64>, DVector<f64>) {
    let mut r = DVector::zeros(d + 1);
    let mut s = DVector::zeros(d + 1);
    let mut pw = Complex64::new(1.0, 0.0);
    for k in 0..=d {
        r[k] = pw.re;
        s[k] = pw.im;
        pw *= lambda;
    }
    (r, s)
}

pub fn build_quadratic(lambda: Complex64, d: usize) -> QuadraticForm {
    let (r, s) = power_parts(lambda, d);
    QuadraticForm {
        matrix: &r * r.transpose() + &s * s.transpose(),
        lambda,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Trivial,
    Mean,
    Proposed,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Trivial, Method::Mean, Method::Proposed, Method::Oracle];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Trivial => "trivial",
            Method::Mean => "mean",
            Method::Proposed => "proposed",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "trivial" => Ok(Method::Trivial),
            "mean" => Ok(Method::Mean),
            "proposed" => Ok(Method::Proposed),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub degree: usize,
    pub coefficients: Vec<f64>,
    pub epsilon: f64,
    pub method: Method,
    /// Whether ε* = 0 because the points can be interpolated exactly.
    #[serde(default)]
    pub exact: bool,
    /// Whether random feasible perturbations failed to improve the objective.
    #[serde(default)]
    pub certified: bool,
}

impl FilterSpec {
    /// `p(λ) = λ^d`.
    pub fn trivial(degree: usize) -> Result<Self> {
        check_degree(degree)?;
        let mut coefficients = vec![0.0; degree + 1];
        coefficients[degree] = 1.0;
        Ok(FilterSpec {
            degree,
            coefficients,
            epsilon: f64::NAN,
            method: Method::Trivial,
            exact: false,
            certified: false,
        })
    }

    pub fn response(&self, lambda: Complex64) -> Complex64 {
        response(&self.coefficients, lambda)
    }
}

/// Horner evaluation of `Σ a_k λ^k`.
pub fn response(coefficients: &[f64], lambda: Complex64) -> Complex64 {
    coefficients
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &a| acc * lambda + a)
}

/// `max_i |p(λ_i)|²`.
pub fn max_response_sq(coefficients: &[f64], points: &[Complex64]) -> f64 {
    points
        .iter()
        .map(|&l| response(coefficients, l).norm_sqr())
        .fold(0.0, f64::max)
}

fn check_degree(degree: usize) -> Result<()> {
    if degree == 0 {
        return Err(Error::InvalidArgument("filter degree must be at least 1".into()));
    }
    Ok(())
}

/// Solves `min_a max_i aᵀQ(λ_i)a` subject to `Σa = 1`.
pub fn design_filter(region: &SampleRegion, degree: usize) -> Result<FilterSpec> {
    design_on_points(&region.points, degree, Method::Proposed)
}

/// As [`design_filter`] on raw points, tagging the result with `method`.
pub fn design_on_points(points: &[Complex64], degree: usize, method: Method) -> Result<FilterSpec> {
    check_degree(degree)?;
    let points = dedup_conjugates(points);
    if points.is_empty() {
        return Err(Error::EmptyRegion("design needs at least one point".into()));
    }
    let n = degree + 1;
    let parts: Vec<(DVector<f64>, DVector<f64>)> = points.iter().map(|&l| power_parts(l, degree)).collect();

    let (coefficients, exact) = match exact_interpolant(&parts, n)? {
        Some(a) => (a, true),
        None => (barrier_minimax(&parts, n)?, false),
    };
    let epsilon = max_response_sq(&coefficients, &points);
    let certified = certify(&coefficients, &points, epsilon);
    Ok(FilterSpec {
        degree,
        coefficients,
        epsilon,
        method,
        exact,
        certified,
    })
}

/// Minimum-norm `a` with `p(λ_i) = 0` for every point and `p(1) = 1`, if one exists.
///
/// A polynomial of degree `d` vanishing on all points exists iff the stacked
/// real/imaginary power rows have rank below `d + 1`; it cannot vanish at 1
/// as well unless 1 is itself a design point.
fn exact_interpolant(parts: &[(DVector<f64>, DVector<f64>)], n: usize) -> Result<Option<Vec<f64>>> {
    let rows: Vec<&DVector<f64>> = parts
        .iter()
        .flat_map(|(r, s)| [r, s])
        .filter(|v| v.amax() > 0.0)
        .collect();
    if rows.is_empty() {
        return Ok(None);
    }
    let mut c = DMatrix::zeros(rows.len().max(n), n);
    for (i, row) in rows.iter().enumerate() {
        c.set_row(i, &row.transpose());
    }
    let svd = c.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed in filter design".into()))?;
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1.0);
    // Right singular vectors belonging to (numerically) zero singular values span the kernel.
    let kernel: Vec<DVector<f64>> = (0..n)
        .filter(|&k| svd.singular_values[k] <= tol)
        .map(|k| v_t.row(k).transpose())
        .collect();
    if kernel.is_empty() {
        return Ok(None);
    }
    let k = DMatrix::from_columns(&kernel);
    let ones = DVector::from_element(n, 1.0);
    let w = k.transpose() * &ones;
    let norm2 = w.norm_squared();
    if norm2 < 1e-20 {
        return Ok(None);
    }
    let a = k * (w / norm2);
    Ok(Some(a.iter().copied().collect()))
}

/// Orthonormal basis of `{x : Σx = 0}` as the columns of an `n × (n−1)` matrix.
fn null_basis(n: usize) -> DMatrix<f64> {
    // Householder reflector mapping 1/√n to e_0; its other columns span 1⊥.
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    v[0] -= 1.0;
    let vn = v.norm_squared();
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vn);
    h.columns(1, n - 1).into_owned()
}

/// Log-barrier interior point on the epigraph `(y, t)` with `a = a₀ + N y`.
fn barrier_minimax(parts: &[(DVector<f64>, DVector<f64>)], n: usize) -> Result<Vec<f64>> {
    let basis = null_basis(n);
    let dim = n - 1;
    let mut a0 = DVector::zeros(n);
    a0[n - 1] = 1.0;
    let m = parts.len() as f64;

    // Reduced forms: f_i(y) = |R_i y + ρ_i|² + |S_i y + σ_i|² with scalar rows.
    let reduced: Vec<(DVector<f64>, f64, DVector<f64>, f64)> = parts
        .iter()
        .map(|(r, s)| (basis.transpose() * r, r.dot(&a0), basis.transpose() * s, s.dot(&a0)))
        .collect();
    let eval = |y: &DVector<f64>| -> Vec<(f64, f64)> {
        reduced
            .iter()
            .map(|(rr, r0, ss, s0)| (rr.dot(y) + r0, ss.dot(y) + s0))
            .collect()
    };
    let objective = |vals: &[(f64, f64)]| vals.iter().map(|(x, z)| x * x + z * z).fold(0.0, f64::max);

    let mut y = DVector::zeros(dim);
    let mut t = objective(&eval(&y)) * 1.5 + 1e-3;
    let mut mu = m / t.max(1e-300);

    for _outer in 0..200 {
        for _newton in 0..200 {
            let vals = eval(&y);
            let mut grad = DVector::zeros(dim + 1);
            let mut hess = DMatrix::zeros(dim + 1, dim + 1);
            grad[dim] = mu;
            for ((rr, _, ss, _), &(x, z)) in reduced.iter().zip(&vals) {
                let g = t - (x * x + z * z);
                // ∇_y f = 2(x rr + z ss); ∇ g = (−∇_y f, 1).
                let mut dg = (rr * (-2.0 * x)) + (ss * (-2.0 * z));
                dg = dg.insert_row(dim, 1.0);
                grad -= &dg / g;
                hess += (&dg * dg.transpose()) / (g * g);
                let mut block = hess.view_mut((0, 0), (dim, dim));
                block += (rr * rr.transpose() + ss * ss.transpose()) * (2.0 / g);
            }
            let scale = hess.diagonal().amax().max(1e-300);
            for k in 0..=dim {
                hess[(k, k)] += 1e-14 * scale;
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess
                    .lu()
                    .solve(&(-&grad))
                    .ok_or_else(|| Error::Degenerate("singular barrier Hessian".into()))?,
            };
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() {
                return Err(Error::NoConvergence {
                    iterations: 0,
                    context: "barrier Newton step is not finite".into(),
                });
            }
            if decrement / 2.0 <= 1e-13 {
                break;
            }
            // Backtracking that keeps every constraint strictly feasible.
            let phi = |y: &DVector<f64>, t: f64| -> f64 {
                let vals = eval(y);
                let mut acc = mu * t;
                for (x, z) in vals {
                    let g = t - (x * x + z * z);
                    if g <= 0.0 {
                        return f64::INFINITY;
                    }
                    acc -= g.ln();
                }
                acc
            };
            let base = phi(&y, t);
            let mut lr = 1.0;
            let dy = step.rows(0, dim).into_owned();
            let dt = step[dim];
            loop {
                let y_new = &y + &dy * lr;
                let t_new = t + dt * lr;
                let val = phi(&y_new, t_new);
                if val.is_finite() && val <= base - 0.25 * lr * decrement {
                    y = y_new;
                    t = t_new;
                    break;
                }
                lr *= 0.5;
                if lr < 1e-20 {
                    break;
                }
            }
            if lr < 1e-20 {
                break;
            }
        }
        let current = objective(&eval(&y));
        // Duality gap of the centred point is m / μ.
        if m / mu <= 1e-13 * current.max(1e-300) || m / mu < 1e-300 {
            break;
        }
        mu *= 8.0;
        t = t.max(current * (1.0 + 1e-12));
    }
    let a = &a0 + &basis * y;
    Ok(a.iter().copied().collect())
}

/// Random feasible perturbations of size `1e-4` must not lower the objective.
fn certify(coefficients: &[f64], points: &[Complex64], epsilon: f64) -> bool {
    let n = coefficients.len();
    let basis = null_basis(n);
    let mut rng = ChaCha8Rng::seed_from_u64(CERTIFY_SEED);
    let a = DVector::from_column_slice(coefficients);
    (0..CERTIFY_TRIALS).all(|_| {
        let dir = DVector::from_fn(n - 1, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let norm = dir.norm();
        if norm == 0.0 {
            return true;
        }
        let moved = &a + &basis * (dir * (CERTIFY_STEP / norm));
        max_response_sq(moved.as_slice(), points) >= epsilon - CERTIFY_SLACK
    })
}

/// Independent solver: projected subgradient with a Polyak-type step on the
/// same problem. Slow; intended for cross-checking.
pub fn design_subgradient(points: &[Complex64], degree: usize, iterations: usize) -> Result<Vec<f64>> {
    check_degree(degree)?;
    let points = dedup_conjugates(points);
    if points.is_empty() {
        return Err(Error::EmptyRegion("design needs at least one point".into()));
    }
    let n = degree + 1;
    let mut a = vec![0.0; n];
    a[degree] = 1.0;
    let mut best = a.clone();
    let mut best_val = max_response_sq(&a, &points);
    let mut target_gap = best_val.max(1e-3);
    for k in 0..iterations {
        let (idx, val) = points
            .iter()
            .enumerate()
            .map(|(i, &l)| (i, response(&a, l).norm_sqr()))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let l = points[idx];
        let p = response(&a, l);
        // ∂|p(λ)|²/∂a_k = 2 Re(conj(p) λ^k).
        let mut g: Vec<f64> = Vec::with_capacity(n);
        let mut pw = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            g.push(2.0 * (p.conj() * pw).re);
            pw *= l;
        }
        let mean = g.iter().sum::<f64>() / n as f64;
        g.iter_mut().for_each(|x| *x -= mean);
        let g2: f64 = g.iter().map(|x| x * x).sum();
        if g2 == 0.0 {
            break;
        }
        // Polyak step toward an estimated optimum that tightens as progress stalls.
        let target = best_val - target_gap;
        let step = (val - target) / g2;
        for (ak, gk) in a.iter_mut().zip(&g) {
            *ak -= step * gk;
        }
        let v = max_response_sq(&a, &points);
        if v < best_val {
            best_val = v;
            best.clone_from(&a);
        }
        if k % 50 == 49 {
            target_gap *= 0.5;
        }
    }
    Ok(best)
}

/// Spectrum source for a baseline design.
#[derive(Debug, Clone, Copy)]
pub enum Baseline<'a> {
    Trivial,
    /// Mean iteration-matrix spectrum.
    Mean(&'a MeanSpectrum),
    /// Realised eigenvalues of an iteration matrix.
    Oracle(&'a [Complex64]),
}

/// Distinct values of a spectrum outside the `kappa` disk around 1.
pub fn design_points_outside(values: &[Complex64], kappa: f64) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let kept: Vec<Complex64> = values.iter().copied().filter(|l| (l - one).norm() > kappa).collect();
    dedup_conjugates(&kept)
}

pub fn baseline_filter(kind: Baseline<'_>, degree: usize, kappa: f64) -> Result<FilterSpec> {
    match kind {
        Baseline::Trivial => FilterSpec::trivial(degree),
        Baseline::Mean(spectrum) => {
            let values: Vec<Complex64> = spectrum.values.iter().map(|(v, _)| *v).collect();
            design_on_points(&design_points_outside(&values, kappa), degree, Method::Mean)
        }
        Baseline::Oracle(eigs) => design_on_points(&design_points_outside(eigs, kappa), degree, Method::Oracle),
    }
}
