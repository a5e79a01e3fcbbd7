//! Consensus on sampled networks: Perron vectors, exact filter convergence
//! rates, the Monte-Carlo comparison harness and empirical spectra.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{DensityField, Grid};
use crate::error::{Error, Result};
use crate::filterdesign::{baseline_filter, design_points_outside, Baseline, FilterSpec, Method};
use crate::linalg::{eigenvalues, split_seed};
use crate::netmodel::{iteration_matrix, BlockModel, IterationMatrix, SpectrumScale};

/// Spectral radii below this are reported as an exact annihilation.
pub const RHO_FLOOR: f64 = 1e-15;
const PERRON_TOL: f64 = 1e-12;
const PERRON_MAX_ITER: usize = 2_000_000;

/// Compressed rows of the positive entries of a square matrix.
struct SparseRows {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut start = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        start.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            start.push(cols.len());
        }
        SparseRows { start, cols, vals }
    }

    fn n(&self) -> usize {
        self.start.len() - 1
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.start[i]..self.start[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Members of the unique closed class, or a reducibility/periodicity error.
///
/// The consensus limit is unique iff exactly one strongly connected component
/// has no edges leaving it, and convergence needs that class to be aperiodic.
fn closed_class(g: &SparseRows) -> Result<Vec<usize>> {
    let n = g.n();
    let graph: DiGraph<(), ()> = DiGraph::from_edges((0..n).flat_map(|v| g.row(v).map(move |(w, _)| (v as u32, w as u32))));
    let mut comp = vec![0; n];
    let components = tarjan_scc(&graph);
    let ncomp = components.len();
    for (c, members) in components.iter().enumerate() {
        for v in members {
            comp[v.index()] = c;
        }
    }
    let mut leaks = vec![false; ncomp];
    for v in 0..n {
        for (w, _) in g.row(v) {
            if comp[w] != comp[v] {
                leaks[comp[v]] = true;
            }
        }
    }
    let sinks: Vec<usize> = (0..ncomp).filter(|&c| !leaks[c]).collect();
    if sinks.len() != 1 {
        return Err(Error::Reducible(format!("{} closed classes", sinks.len())));
    }
    let class: Vec<usize> = (0..n).filter(|&v| comp[v] == sinks[0]).collect();

    // Period = gcd over class edges of level(v) + 1 − level(w), from a BFS.
    let mut level = vec![usize::MAX; n];
    level[class[0]] = 0;
    let mut queue = std::collections::VecDeque::from([class[0]]);
    let mut period = 0;
    while let Some(v) = queue.pop_front() {
        for (w, _) in g.row(v) {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            } else {
                period = gcd(period, (level[v] + 1).abs_diff(level[w]));
            }
        }
    }
    if period > 1 {
        return Err(Error::Periodic(period));
    }
    Ok(class)
}

/// Normalised left eigenvector of `W` for eigenvalue 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronVector {
    pub ell: DVector<f64>,
    pub iterations: usize,
    /// Nodes outside the closed class carry zero weight.
    pub support: usize,
}

/// Power iteration on the lazy transpose `½(I + Wᵀ)`, which shares the fixed
/// point of `Wᵀ` but is aperiodic.
pub fn left_perron(w: &IterationMatrix) -> Result<PerronVector> {
    let n = w.size();
    let g = SparseRows::new(&w.entries);
    let class = closed_class(&g)?;
    let mut ell = DVector::from_element(n, 1.0 / n as f64);
    let mut next = DVector::zeros(n);
    let mut prev_step = f64::INFINITY;
    for it in 1..=PERRON_MAX_ITER {
        next.copy_from(&ell);
        next *= 0.5;
        for i in 0..n {
            let li = 0.5 * ell[i];
            for (j, v) in g.row(i) {
                next[j] += li * v;
            }
        }
        let total: f64 = next.sum();
        next /= total;
        let step = (&next - &ell).abs().max();
        std::mem::swap(&mut ell, &mut next);
        let rate = (step / prev_step).min(1.0 - 1e-9);
        prev_step = step;
        let remaining = if rate > 0.0 { step * rate / (1.0 - rate) } else { step };
        if it > 2 && remaining.max(step) < PERRON_TOL {
            polish(&w.entries, &mut ell);
            ell.iter_mut().for_each(|x| *x = x.max(0.0));
            let total = ell.sum();
            ell /= total;
            return Ok(PerronVector {
                ell,
                iterations: it,
                support: class.len(),
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: PERRON_MAX_ITER,
        context: "left Perron vector".into(),
    })
}

/// Replaces `ell` by the direct solution of `(Wᵀ − I)ℓ = 0, 1ᵀℓ = 1` when
/// that has the smaller residual. Power iteration stalls near 1e-13, which
/// would hide exact annihilation behind the `RHO_FLOOR` sentinel.
fn polish(w: &DMatrix<f64>, ell: &mut DVector<f64>) {
    let n = w.nrows();
    let mut a = w.transpose() - DMatrix::identity(n, n);
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let Some(direct) = a.lu().solve(&rhs) else { return };
    let residual = |v: &DVector<f64>| (w.transpose() * v - v).amax();
    if direct.iter().all(|x| x.is_finite() && *x >= -1e-12) && residual(&direct) <= residual(ell) {
        *ell = direct;
    }
}

/// `J = 1 ℓᵀ`.
pub fn projector(ell: &DVector<f64>) -> DMatrix<f64> {
    let n = ell.len();
    DMatrix::from_fn(n, n, |_, j| ell[j])
}

/// `p(W)` by Horner's scheme.
pub fn apply_polynomial(w: &DMatrix<f64>, coefficients: &[f64]) -> DMatrix<f64> {
    let n = w.nrows();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for (k, &a) in coefficients.iter().rev().enumerate() {
        if k > 0 {
            acc = &acc * w;
        }
        for i in 0..n {
            acc[(i, i)] += a;
        }
    }
    acc
}

/// `(1/d) ln ρ(p(W) − J)`, or `-∞` when `ρ < RHO_FLOOR`.
pub fn convergence_rate(w: &IterationMatrix, ell: &DVector<f64>, filter: &FilterSpec) -> Result<f64> {
    if filter.degree == 0 || filter.coefficients.len() != filter.degree + 1 {
        return Err(Error::InvalidArgument("filter degree and coefficient count disagree".into()));
    }
    let mut m = apply_polynomial(&w.entries, &filter.coefficients);
    m -= projector(ell);
    let rho = eigenvalues(&m)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(rate_from_radius(rho, filter.degree))
}

pub fn rate_from_radius(rho: f64, degree: usize) -> f64 {
    if rho < RHO_FLOOR {
        f64::NEG_INFINITY
    } else {
        rho.ln() / degree as f64
    }
}

/// Harness parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub methods: Vec<Method>,
    pub degrees: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub kappa: f64,
    /// Network-independent filters from the density field, keyed by degree.
    pub proposed: BTreeMap<usize, FilterSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub degree: usize,
    /// NaN when the combination was skipped.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub degree: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub excluded_trials: usize,
    /// Trials whose rate for this combination was skipped.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub trial: usize,
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOutcome {
    pub rows: Vec<RateRow>,
    pub summary: Vec<SummaryRow>,
    pub exclusions: Vec<Exclusion>,
    /// Degrees for which the mean design has no more points than free coefficients.
    pub mean_skipped: Vec<usize>,
}

impl ConsensusOutcome {
    pub fn summary_for(&self, method: Method, degree: usize) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.method == method && r.degree == degree)
    }

    pub fn rates(&self, method: Method, degree: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.degree == degree)
            .map(|r| r.rate)
            .collect()
    }
}

/// Linear-interpolation quantile of sorted values; tolerant of `-∞`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    if frac == 0.0 || a == b {
        a
    } else if a == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + (b - a) * frac
    }
}

enum TrialResult {
    Rates(Vec<RateRow>),
    Excluded(Exclusion),
}

/// Samples `trials` networks and evaluates every requested filter on each.
pub fn monte_carlo(model: &BlockModel, config: &SimulationConfig) -> Result<ConsensusOutcome> {
    if config.degrees.is_empty() || config.degrees.contains(&0) {
        return Err(Error::InvalidArgument("degrees must be a nonempty list of positive integers".into()));
    }
    if config.methods.is_empty() {
        return Err(Error::InvalidArgument("no methods requested".into()));
    }
    if config.methods.contains(&Method::Proposed) {
        if let Some(d) = config.degrees.iter().find(|d| !config.proposed.contains_key(d)) {
            return Err(Error::InvalidArgument(format!("no proposed filter supplied for degree {d}")));
        }
    }

    let mut fixed: BTreeMap<(Method, usize), FilterSpec> = BTreeMap::new();
    let mut mean_skipped = Vec::new();
    for &d in &config.degrees {
        fixed.insert((Method::Trivial, d), FilterSpec::trivial(d)?);
        if let Some(f) = config.proposed.get(&d) {
            fixed.insert((Method::Proposed, d), f.clone());
        }
    }
    if config.methods.contains(&Method::Mean) {
        let spectrum = model.mean_spectrum(SpectrumScale::Iteration)?;
        let values: Vec<Complex64> = spectrum.values.iter().map(|(v, _)| *v).collect();
        let one = Complex64::new(1.0, 0.0);
        let available = values.iter().filter(|v| (*v - one).norm() > config.kappa).count();
        for &d in &config.degrees {
            if available == 0 || d > available {
                mean_skipped.push(d);
            } else {
                fixed.insert((Method::Mean, d), baseline_filter(Baseline::Mean(&spectrum), d, config.kappa)?);
            }
        }
    }

    let results: Vec<Result<TrialResult>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(model, config, &fixed, trial))
        .collect();

    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    for r in results {
        match r? {
            TrialResult::Rates(mut r) => rows.append(&mut r),
            TrialResult::Excluded(e) => exclusions.push(e),
        }
    }

    let mut summary = Vec::new();
    for &method in &config.methods {
        for &degree in &config.degrees {
            let all: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method && r.degree == degree)
                .map(|r| r.rate)
                .collect();
            let mut vals: Vec<f64> = all.iter().copied().filter(|v| !v.is_nan()).collect();
            vals.sort_by(f64::total_cmp);
            summary.push(SummaryRow {
                method,
                degree,
                median: quantile(&vals, 0.5),
                q25: quantile(&vals, 0.25),
                q75: quantile(&vals, 0.75),
                excluded_trials: exclusions.len(),
                skipped: all.len() - vals.len(),
            });
        }
    }
    Ok(ConsensusOutcome {
        rows,
        summary,
        exclusions,
        mean_skipped,
    })
}

fn run_trial(
    model: &BlockModel,
    config: &SimulationConfig,
    fixed: &BTreeMap<(Method, usize), FilterSpec>,
    trial: usize,
) -> Result<TrialResult> {
    let seed = split_seed(config.master_seed, trial as u64);
    let adj = model.sample_adjacency(seed);
    let w = iteration_matrix(&adj, model.alpha())?;
    let perron = match left_perron(&w) {
        Ok(p) => p,
        Err(e @ (Error::Reducible(_) | Error::Periodic(_) | Error::NoConvergence { .. })) => {
            return Ok(TrialResult::Excluded(Exclusion {
                trial,
                seed,
                reason: e.to_string(),
            }))
        }
        Err(e) => return Err(e),
    };
    let realised = if config.methods.contains(&Method::Oracle) {
        design_points_outside(&eigenvalues(&w.entries)?, config.kappa)
    } else {
        Vec::new()
    };

    let mut rows = Vec::with_capacity(config.methods.len() * config.degrees.len());
    for &method in &config.methods {
        for &degree in &config.degrees {
            let filter = match method {
                Method::Oracle if realised.is_empty() => None,
                Method::Oracle => Some(baseline_filter(Baseline::Oracle(&realised), degree, config.kappa)?),
                _ => fixed.get(&(method, degree)).cloned(),
            };
            let rate = match filter {
                Some(f) => convergence_rate(&w, &perron.ell, &f)?,
                None => f64::NAN,
            };
            rows.push(RateRow {
                trial,
                seed,
                method,
                degree,
                rate,
            });
        }
    }
    Ok(TrialResult::Rates(rows))
}

/// Realised eigenvalues of `W` for each trial, in trial order.
pub fn sample_spectra(model: &BlockModel, trials: usize, master_seed: u64) -> Result<Vec<Vec<Complex64>>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let adj = model.sample_adjacency(split_seed(master_seed, trial as u64));
            let w = iteration_matrix(&adj, model.alpha())?;
            eigenvalues(&w.entries)
        })
        .collect()
}

/// Drops the Perron eigenvalues: the one closest to 1, plus any others within
/// `1e-8` of 1. A sampled matrix with several closed classes (absorbing nodes
/// included) has one unit eigenvalue per class, each the Perron root of that class.
pub fn without_perron(eigs: &[Complex64]) -> Vec<Complex64> {
    const UNIT_TOL: f64 = 1e-8;
    let one = Complex64::new(1.0, 0.0);
    let idx = eigs
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - one).norm().total_cmp(&(b.1 - one).norm()))
        .map(|(i, _)| i);
    eigs.iter()
        .enumerate()
        .filter(|(i, z)| Some(*i) != idx && (*z - one).norm() > UNIT_TOL)
        .map(|(_, z)| *z)
        .collect()
}

/// Default histogram box: the closed unit disk with a small margin.
pub fn unit_disk_grid(n_t: usize, n_s: usize) -> Result<Grid> {
    Grid::new(-1.05, 1.05, -1.05, 1.05, n_t, n_s)
}

/// Histogram of realised eigenvalues, normalised to unit mass over the values
/// that land on the grid.
pub fn empirical_spectrum(model: &BlockModel, trials: usize, grid: &Grid, master_seed: u64) -> Result<DensityField> {
    grid.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("at least one trial is required".into()));
    }
    let spectra = sample_spectra(model, trials, master_seed)?;
    histogram(spectra.iter().flatten().copied(), grid)
}

/// Nearest-node counting density; points off the grid are counted in the
/// diagnostics and left out of the normalisation.
pub fn histogram(values: impl IntoIterator<Item = Complex64>, grid: &Grid) -> Result<DensityField> {
    let mut field = DensityField::zeros(*grid);
    let mut counts = vec![0usize; grid.len()];
    let mut total = 0usize;
    let mut outside = 0usize;
    for z in values {
        match grid.locate(z) {
            Some((i, j)) => {
                counts[grid.index(i, j)] += 1;
                total += 1;
            }
            None => outside += 1,
        }
    }
    if total == 0 {
        return Err(Error::EmptyRegion("no eigenvalue fell inside the histogram grid".into()));
    }
    let norm = 1.0 / (total as f64 * grid.cell_area());
    for (v, c) in field.values.iter_mut().zip(&counts) {
        *v = *c as f64 * norm;
    }
    field.diagnostics.masked = outside;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Adjacency, ModelConfig};
    use crate::netmodel::build_model;

    #[test]
    fn perron_removal_drops_every_unit_eigenvalue() {
        let c = |re, im| Complex64::new(re, im);
        let eigs = [c(1.0, 0.0), c(0.5, 0.1), c(1.0 + 1e-12, 0.0), c(0.5, -0.1)];
        assert_eq!(without_perron(&eigs), vec![c(0.5, 0.1), c(0.5, -0.1)]);
        let near = [c(0.999, 0.0), c(0.2, 0.0)];
        assert_eq!(without_perron(&near), vec![c(0.2, 0.0)]);
    }

    fn w2() -> IterationMatrix {
        IterationMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.5, 0.5])).unwrap()
    }

    fn cycle(n: usize) -> IterationMatrix {
        IterationMatrix::from_matrix(DMatrix::from_fn(n, n, |i, j| if j == (i + 1) % n { 1.0 } else { 0.0 })).unwrap()
    }

    #[test]
    fn perron_examples() {
        let p = left_perron(&w2()).unwrap();
        assert!((p.ell[0] - 2.0 / 3.0).abs() < 1e-11 && (p.ell[1] - 1.0 / 3.0).abs() < 1e-11);

        let ds = IterationMatrix::from_matrix(DMatrix::from_row_slice(3, 3, &[0.5, 0.25, 0.25, 0.25, 0.5, 0.25, 0.25, 0.25, 0.5])).unwrap();
        let p = left_perron(&ds).unwrap();
        assert!(p.ell.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-11));
    }

    #[test]
    fn three_cycle_is_periodic_but_lazy_cycle_is_fine() {
        assert!(matches!(left_perron(&cycle(3)), Err(Error::Periodic(3))));
        let lazy = IterationMatrix::from_matrix(cycle(3).entries * 0.5 + DMatrix::identity(3, 3) * 0.5).unwrap();
        let p = left_perron(&lazy).unwrap();
        assert!(p.ell.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-11));
    }

    #[test]
    fn two_sinks_are_reducible() {
        let w = IterationMatrix::from_matrix(DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 1.0])).unwrap();
        assert!(matches!(left_perron(&w), Err(Error::Reducible(_))));
        // One absorbing node with transient feeders: unique limit.
        let w = IterationMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.5])).unwrap();
        let p = left_perron(&w).unwrap();
        assert!((p.ell[0] - 1.0).abs() < 1e-11 && p.ell[1].abs() < 1e-11);
        assert_eq!(p.support, 1);
    }

    #[test]
    fn projector_examples() {
        let j = projector(&DVector::from_vec(vec![0.5, 0.5]));
        assert_eq!(j, DMatrix::from_element(2, 2, 0.5));
        let ell = DVector::from_vec(vec![2.0 / 3.0, 1.0 / 3.0]);
        let j = projector(&ell);
        assert!((&j * &j - &j).amax() < 1e-12);
        assert!((&j * &w2().entries - &j).amax() < 1e-12);
        assert!((&w2().entries * &j - &j).amax() < 1e-12);
    }

    #[test]
    fn rate_examples() {
        let w = w2();
        let ell = left_perron(&w).unwrap().ell;
        let r = convergence_rate(&w, &ell, &FilterSpec::trivial(1).unwrap()).unwrap();
        assert!((r - 0.25f64.ln()).abs() < 1e-10, "{r}");
        let mut f = FilterSpec::trivial(1).unwrap();
        f.coefficients = vec![-1.0 / 3.0, 4.0 / 3.0];
        assert_eq!(convergence_rate(&w, &ell, &f).unwrap(), f64::NEG_INFINITY);
        for d in 1..=6 {
            let r = convergence_rate(&w, &ell, &FilterSpec::trivial(d).unwrap()).unwrap();
            assert!((r - 0.25f64.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn horner_matches_powers() {
        let w = w2().entries;
        let p = apply_polynomial(&w, &[0.2, -0.5, 1.3]);
        let direct = DMatrix::identity(2, 2) * 0.2 - &w * 0.5 + &w * &w * 1.3;
        assert!((p - direct).amax() < 1e-14);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        let v = [f64::NEG_INFINITY, f64::NEG_INFINITY, -1.0];
        assert_eq!(quantile(&v, 0.5), f64::NEG_INFINITY);
        assert_eq!(quantile(&v, 0.75), f64::NEG_INFINITY);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn deterministic_model_has_no_spread() {
        let model = build_model(&ModelConfig::cyclic(3, 4, 1.0, 1.0, 0.5)).unwrap();
        let config = SimulationConfig {
            methods: vec![Method::Trivial, Method::Oracle],
            degrees: vec![1, 2],
            trials: 4,
            master_seed: 9,
            kappa: 0.1,
            proposed: BTreeMap::new(),
        };
        let out = monte_carlo(&model, &config).unwrap();
        assert!(out.exclusions.is_empty());
        for s in &out.summary {
            let rates = out.rates(s.method, s.degree);
            assert!(rates.iter().all(|r| r.to_bits() == rates[0].to_bits()));
        }
    }

    #[test]
    fn harness_is_reproducible_and_ordered() {
        let model = build_model(&ModelConfig::cyclic(3, 8, 0.4, 0.3, 0.8)).unwrap();
        let config = SimulationConfig {
            methods: vec![Method::Trivial, Method::Mean, Method::Oracle],
            degrees: vec![1, 2, 3],
            trials: 6,
            master_seed: 42,
            kappa: 0.1,
            proposed: BTreeMap::new(),
        };
        let a = monte_carlo(&model, &config).unwrap();
        let b = monte_carlo(&model, &config).unwrap();
        assert_eq!(format!("{:?}", a.rows), format!("{:?}", b.rows));
        let trials: Vec<usize> = a.rows.iter().map(|r| r.trial).collect();
        assert!(trials.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.rows.iter().filter(|r| !r.rate.is_nan()).all(|r| r.rate < 0.0));
    }

    #[test]
    fn proposed_requires_filters() {
        let model = build_model(&ModelConfig::cyclic(3, 4, 0.5, 0.5, 1.0)).unwrap();
        let config = SimulationConfig {
            methods: vec![Method::Proposed],
            degrees: vec![1],
            trials: 1,
            master_seed: 0,
            kappa: 0.1,
            proposed: BTreeMap::new(),
        };
        assert!(matches!(monte_carlo(&model, &config), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn histogram_of_a_cycle() {
        let rows: Vec<Vec<u8>> = (0..6).map(|i| (0..6).map(|j| u8::from(j == (i + 1) % 6)).collect()).collect();
        let adj = Adjacency::from_rows(&rows).unwrap();
        let w = iteration_matrix(&adj, 1.0).unwrap();
        let grid = unit_disk_grid(211, 211).unwrap();
        let field = histogram(eigenvalues(&w.entries).unwrap(), &grid).unwrap();
        assert!((field.mass() - 1.0).abs() < 1e-12);
        for k in 0..6 {
            let root = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 6.0);
            let (i, j) = grid.locate(root).unwrap();
            assert!((field.value(i, j) * grid.cell_area() - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_node_histogram() {
        let grid = unit_disk_grid(21, 21).unwrap();
        let field = histogram([Complex64::new(1.0, 0.0)], &grid).unwrap();
        assert!((field.mass() - 1.0).abs() < 1e-12);
        assert_eq!(field.values.iter().filter(|v| **v > 0.0).count(), 1);
    }
}
