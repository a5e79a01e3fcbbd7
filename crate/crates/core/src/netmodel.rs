//! Directed stochastic block models: parameters, mean matrix, variance
//! profile, analytic mean spectrum, and sampled consensus iteration matrices.
//!
//! A model has `M` populations of `S` nodes each. A node of population `a`
//! links to a node of population `b` independently with probability
//! `theta[a][b]`; self-loops are never drawn, so the mean adjacency is
//! `theta ⊗ 1_{S×S}` with its diagonal removed.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

const NORMALITY_TOL: f64 = 1e-12;
const TRANSITIVITY_TOL: f64 = 1e-12;

/// Link-probability matrix as it appears in a model config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Matrix(Vec<Vec<f64>>),
    /// Populations arranged in a directed cycle: `diag` inside a population,
    /// `next` from population `i` to population `i + 1 (mod M)`.
    Cyclic { diag: f64, next: f64 },
}

/// On-disk model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(rename = "M")]
    pub populations: usize,
    #[serde(rename = "S")]
    pub population_size: usize,
    pub theta: ThetaSpec,
    pub alpha: f64,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("model config: {e}")))
    }

    pub fn cyclic(populations: usize, population_size: usize, diag: f64, next: f64, alpha: f64) -> Self {
        ModelConfig {
            populations,
            population_size,
            theta: ThetaSpec::Cyclic { diag, next },
            alpha,
        }
    }
}

/// Structural checks required by the scalar canonical solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelDiagnostics {
    /// Theta is invariant under simultaneous cyclic shifts of rows and columns.
    pub transitive: bool,
    /// Largest entry of `|Θ Θᵀ − Θᵀ Θ|`.
    pub normality_defect: f64,
    pub normal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockModel {
    populations: usize,
    population_size: usize,
    theta: DMatrix<f64>,
    alpha: f64,
    diagnostics: ModelDiagnostics,
}

/// Validates a config and builds the model.
pub fn build_model(config: &ModelConfig) -> Result<BlockModel> {
    let m = config.populations;
    let theta = match &config.theta {
        ThetaSpec::Matrix(rows) => {
            if rows.len() != m || rows.iter().any(|r| r.len() != m) {
                return Err(Error::InvalidModel(format!(
                    "theta must be {m}x{m} (square, one row per population)"
                )));
            }
            DMatrix::from_fn(m, m, |i, j| rows[i][j])
        }
        ThetaSpec::Cyclic { diag, next } => {
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, (i + 1) % m)] += *next;
                t[(i, i)] = *diag;
            }
            if m == 1 {
                t[(0, 0)] = *diag;
            }
            t
        }
    };
    BlockModel::new(m, config.population_size, theta, config.alpha)
}

impl BlockModel {
    pub fn new(populations: usize, population_size: usize, theta: DMatrix<f64>, alpha: f64) -> Result<Self> {
        if populations == 0 || population_size == 0 {
            return Err(Error::InvalidModel("M and S must be positive".into()));
        }
        if theta.nrows() != populations || theta.ncols() != populations {
            return Err(Error::InvalidModel(format!(
                "theta is {}x{}, expected {populations}x{populations}",
                theta.nrows(),
                theta.ncols()
            )));
        }
        if populations * population_size < 2 {
            return Err(Error::InvalidModel("network needs at least two nodes (M*S >= 2)".into()));
        }
        if let Some(bad) = theta.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidModel(format!("link probability {bad} outside [0, 1]")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidModel(format!("step size alpha = {alpha} outside (0, 1]")));
        }
        let transitive = is_circulant(&theta);
        let normality_defect = linalg::normality_defect(&theta);
        Ok(BlockModel {
            populations,
            population_size,
            theta,
            alpha,
            diagnostics: ModelDiagnostics {
                transitive,
                normality_defect,
                normal: normality_defect <= NORMALITY_TOL,
            },
        })
    }

    pub fn populations(&self) -> usize {
        self.populations
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    pub fn node_count(&self) -> usize {
        self.populations * self.population_size
    }

    pub fn theta(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn diagnostics(&self) -> &ModelDiagnostics {
        &self.diagnostics
    }

    /// Checks everything the scalar canonical solver relies on.
    pub fn validate(&self) -> ValidationReport {
        let mut reasons = Vec::new();
        if !self.diagnostics.transitive {
            reasons.push("theta is not invariant under simultaneous cyclic shifts (nodes are distinguishable)".to_string());
        }
        if !self.diagnostics.normal {
            reasons.push(format!(
                "theta is not normal: max |ΘΘᵀ − ΘᵀΘ| = {:e}",
                self.diagnostics.normality_defect
            ));
        }
        let gamma = self.expected_row_sum();
        let profile = self.variance_profile();
        match (&gamma, &profile) {
            (Err(e), _) | (_, Err(e)) => reasons.push(e.to_string()),
            (Ok(_), Ok(vp)) if !vp.transitive => {
                reasons.push("entry-variance row and column sums differ across populations".to_string())
            }
            _ => {}
        }
        ValidationReport {
            transitive: self.diagnostics.transitive,
            normal: self.diagnostics.normal,
            normality_defect: self.diagnostics.normality_defect,
            gamma: gamma.ok(),
            row_sum: profile.as_ref().ok().map(|v| v.row_sum),
            col_sum: profile.as_ref().ok().map(|v| v.col_sum),
            pass: reasons.is_empty(),
            reasons,
        }
    }

    /// `Err(NotTransitive)` unless [`validate`](Self::validate) passes.
    pub fn require_scalar_path(&self) -> Result<()> {
        let report = self.validate();
        if report.pass {
            Ok(())
        } else {
            Err(Error::NotTransitive(report.reasons.join("; ")))
        }
    }

    /// Population index of a node.
    pub fn population_of(&self, node: usize) -> usize {
        node / self.population_size
    }

    /// Link probability between two nodes (zero on the diagonal).
    pub fn link_probability(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.theta[(self.population_of(i), self.population_of(j))]
        }
    }

    /// True when every entry of theta is 0 or 1, i.e. sampling is deterministic.
    pub fn is_deterministic(&self) -> bool {
        self.theta.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    /// Expected out-degree `γ` of a node in the first population.
    pub fn expected_row_sum(&self) -> Result<f64> {
        let s = self.population_size as f64;
        let gamma = s * self.theta.row(0).sum() - self.theta[(0, 0)];
        if gamma > 0.0 {
            Ok(gamma)
        } else {
            Err(Error::Degenerate(format!(
                "expected row sum is {gamma}; the network has no links"
            )))
        }
    }

    /// `B = Θ ⊗ 1_{S×S}` with a zero diagonal.
    pub fn mean_matrix(&self) -> DMatrix<f64> {
        let n = self.node_count();
        DMatrix::from_fn(n, n, |i, j| self.link_probability(i, j))
    }

    /// Eigenvalues of the mean matrix, optionally rescaled.
    ///
    /// Circulant theta uses the closed form `S·λ_k(Θ) − Θ₁₁` (simple) plus
    /// `−Θ₁₁` with multiplicity `M(S−1)`. A non-circulant theta with constant
    /// diagonal is lifted from a dense eigensolve of theta; anything else falls
    /// back to a dense eigensolve of `B`.
    pub fn mean_spectrum(&self, scale: SpectrumScale) -> Result<MeanSpectrum> {
        let gamma = self.expected_row_sum()?;
        let m = self.populations;
        let s = self.population_size as f64;
        let d = self.theta[(0, 0)];
        let constant_diag = (0..m).all(|i| self.theta[(i, i)] == d);

        let raw: Vec<Complex64> = if self.diagnostics.transitive || constant_diag {
            let theta_eigs = if self.diagnostics.transitive {
                circulant_eigenvalues(self.theta.row(0).iter().copied())
            } else {
                linalg::eigenvalues(&self.theta)?
            };
            let mut v: Vec<Complex64> = theta_eigs.iter().map(|l| l * s - d).collect();
            v.extend(std::iter::repeat_n(
                Complex64::new(-d, 0.0),
                m * (self.population_size - 1),
            ));
            v
        } else {
            linalg::eigenvalues(&self.mean_matrix())?
        };

        let mapped: Vec<Complex64> = raw
            .into_iter()
            .map(|l| match scale {
                SpectrumScale::Raw => l,
                SpectrumScale::Scaled => l / gamma,
                SpectrumScale::Iteration => 1.0 + self.alpha * (l / gamma - 1.0),
            })
            .collect();
        let magnitude = mapped.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut values = linalg::cluster_values(&mapped, 1e-12 * magnitude);
        // Exact conjugate pairing; the closed form is only conjugate-symmetric up to rounding.
        symmetrize_conjugates(&mut values, 1e-9 * magnitude);
        Ok(MeanSpectrum { values, gamma, scale })
    }

    /// Entry variances of `Ξ = A/γ` and their common row/column sums.
    pub fn variance_profile(&self) -> Result<VarianceProfile> {
        let gamma = self.expected_row_sum()?;
        let g2 = gamma * gamma;
        let m = self.populations;
        let s = self.population_size as f64;
        let block = self.theta.map(|p| p * (1.0 - p) / g2);
        let row_sums: Vec<f64> = (0..m).map(|a| s * block.row(a).sum() - block[(a, a)]).collect();
        let col_sums: Vec<f64> = (0..m).map(|b| s * block.column(b).sum() - block[(b, b)]).collect();
        let scale = row_sums.iter().chain(&col_sums).fold(f64::MIN_POSITIVE, |a, &b| a.max(b.abs()));
        let spread = row_sums
            .iter()
            .chain(&col_sums)
            .map(|v| (v - row_sums[0]).abs())
            .fold(0.0, f64::max);
        Ok(VarianceProfile {
            row_sum: row_sums[0],
            col_sum: col_sums[0],
            block_variances: block,
            transitive: spread <= TRANSITIVITY_TOL * scale.max(1.0),
            population_row_sums: row_sums,
            population_col_sums: col_sums,
        })
    }

    /// Draws one adjacency matrix; identical seeds give identical graphs.
    pub fn sample_adjacency(&self, seed: u64) -> Adjacency {
        let n = self.node_count();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = vec![0u8; n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let p = self.link_probability(i, j);
                // Always consume one draw so the stream layout does not depend on theta.
                let x: f64 = rng.random();
                if x < p {
                    entries[i * n + j] = 1;
                }
            }
        }
        Adjacency { n, entries, seed }
    }
}

fn is_circulant(theta: &DMatrix<f64>) -> bool {
    let m = theta.nrows();
    (0..m).all(|i| (0..m).all(|j| theta[(i, j)] == theta[(0, (j + m - i) % m)]))
}

/// Eigenvalues of the circulant matrix with the given first row:
/// `λ_k = Σ_j c_j ω^{jk}`, `ω = e^{2πi/M}`.
pub fn circulant_eigenvalues(first_row: impl IntoIterator<Item = f64>) -> Vec<Complex64> {
    let c: Vec<f64> = first_row.into_iter().collect();
    let m = c.len();
    (0..m)
        .map(|k| {
            c.iter()
                .enumerate()
                .map(|(j, &cj)| {
                    let angle = 2.0 * PI * ((j * k) % m) as f64 / m as f64;
                    Complex64::from_polar(cj, angle)
                })
                .sum()
        })
        .collect()
}

fn symmetrize_conjugates(values: &mut [(Complex64, usize)], tol: f64) {
    for (z, _) in values.iter_mut() {
        if z.im.abs() <= tol {
            z.im = 0.0;
        }
    }
    for i in 0..values.len() {
        if values[i].0.im <= 0.0 {
            continue;
        }
        let (z, mult) = values[i];
        if let Some(j) = (0..values.len())
            .find(|&j| values[j].1 == mult && values[j].0.im < 0.0 && (values[j].0.conj() - z).norm() <= tol)
        {
            let avg = Complex64::new(0.5 * (z.re + values[j].0.re), 0.5 * (z.im - values[j].0.im));
            values[i].0 = avg;
            values[j].0 = avg.conj();
        }
    }
}

/// Which matrix a [`MeanSpectrum`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumScale {
    /// Eigenvalues of `B`.
    Raw,
    /// Eigenvalues of `B/γ`, the mean of `Ξ = A/γ`.
    Scaled,
    /// Eigenvalues of the mean iteration matrix `I − α(I − B/γ)`.
    Iteration,
}

/// Eigenvalues of a normal mean matrix, as distinct values with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSpectrum {
    pub values: Vec<(Complex64, usize)>,
    pub gamma: f64,
    pub scale: SpectrumScale,
}

impl MeanSpectrum {
    /// A spectrum given directly by eigenvalues (duplicates allowed).
    pub fn from_values(values: Vec<(Complex64, usize)>, gamma: f64, scale: SpectrumScale) -> Self {
        MeanSpectrum { values, gamma, scale }
    }

    /// A single eigenvalue repeated `n` times.
    pub fn atom(at: Complex64, n: usize) -> Self {
        MeanSpectrum {
            values: vec![(at, n)],
            gamma: 1.0,
            scale: SpectrumScale::Scaled,
        }
    }

    pub fn dimension(&self) -> usize {
        self.values.iter().map(|(_, k)| k).sum()
    }

    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    /// `(value, weight)` pairs with weights summing to one.
    pub fn weighted(&self) -> Vec<(Complex64, f64)> {
        let n = self.dimension() as f64;
        self.values.iter().map(|&(z, k)| (z, k as f64 / n)).collect()
    }

    /// Every eigenvalue listed with its multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.values
            .iter()
            .flat_map(|&(z, k)| std::iter::repeat_n(z, k))
            .collect()
    }

    /// Axis-aligned bounding box `(t_min, t_max, s_min, s_max)` of the values.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        self.values.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), (z, _)| (a.min(z.re), b.max(z.re), c.min(z.im), d.max(z.im)),
        )
    }
}

/// Second moments of the centred scaled adjacency `Ξ − E[Ξ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceProfile {
    /// Row sum of entry variances for a node of the first population.
    pub row_sum: f64,
    /// Column sum of entry variances for a node of the first population.
    pub col_sum: f64,
    /// Per-entry variance between populations (`M×M`).
    pub block_variances: DMatrix<f64>,
    pub population_row_sums: Vec<f64>,
    pub population_col_sums: Vec<f64>,
    /// All row and column sums agree.
    pub transitive: bool,
}

impl VarianceProfile {
    /// Dense `N×N` variance matrix with zero diagonal.
    pub fn entry_variances(&self, population_size: usize) -> DMatrix<f64> {
        let n = self.block_variances.nrows() * population_size;
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                self.block_variances[(i / population_size, j / population_size)]
            }
        })
    }
}

/// A sampled 0/1 adjacency matrix (row-major, zero diagonal).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    entries: Vec<u8>,
    pub seed: u64,
}

impl Adjacency {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("adjacency must be square".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v > 1 || (i == j && v != 0) {
                    return Err(Error::InvalidArgument(format!(
                        "adjacency entry ({i},{j}) = {v}; expected 0/1 with zero diagonal"
                    )));
                }
                entries.push(v);
            }
        }
        Ok(Adjacency { n, entries, seed: 0 })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j] != 0
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.entries[i * self.n..(i + 1) * self.n].iter().filter(|&&v| v != 0).count()
    }

    pub fn edge_count(&self) -> usize {
        self.entries.iter().filter(|&&v| v != 0).count()
    }
}

/// Consensus iteration matrix `W = (1−α)I + αD⁻¹A`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationMatrix {
    pub entries: DMatrix<f64>,
    pub alpha: f64,
    /// Nodes with no out-links, given a pure self-loop row.
    pub repaired: Vec<usize>,
}

impl IterationMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    /// Wraps an explicit matrix; rows must sum to one.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::InvalidArgument("iteration matrix must be square".into()));
        }
        for (i, row) in entries.row_iter().enumerate() {
            let s: f64 = row.sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(IterationMatrix { entries, alpha: 1.0, repaired: Vec::new() })
    }
}

/// Row-normalised directed Laplacian step. Rows with zero out-degree become `e_i`.
pub fn iteration_matrix(adj: &Adjacency, alpha: f64) -> Result<IterationMatrix> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1]")));
    }
    let n = adj.size();
    let mut w = DMatrix::zeros(n, n);
    let mut repaired = Vec::new();
    for i in 0..n {
        let deg = adj.out_degree(i);
        if deg == 0 {
            w[(i, i)] = 1.0;
            repaired.push(i);
            continue;
        }
        let step = alpha / deg as f64;
        for j in 0..n {
            if adj.get(i, j) {
                w[(i, j)] = step;
            }
        }
        w[(i, i)] += 1.0 - alpha;
    }
    Ok(IterationMatrix { entries: w, alpha, repaired })
}

/// Outcome of [`BlockModel::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub transitive: bool,
    pub normal: bool,
    pub normality_defect: f64,
    pub gamma: Option<f64>,
    pub row_sum: Option<f64>,
    pub col_sum: Option<f64>,
    pub pass: bool,
    pub reasons: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_model(s: usize) -> BlockModel {
        build_model(&ModelConfig::cyclic(5, s, 0.05, 0.03, 1.0)).unwrap()
    }

    #[test]
    fn cyclic_shorthand_builds_the_directed_cycle() {
        let m = paper_model(200);
        assert_eq!(m.node_count(), 1000);
        assert_eq!(m.theta()[(0, 0)], 0.05);
        assert_eq!(m.theta()[(0, 1)], 0.03);
        assert_eq!(m.theta()[(4, 0)], 0.03);
        assert_eq!(m.theta()[(1, 0)], 0.0);
        assert!(m.diagnostics().transitive);
        assert!(m.diagnostics().normal);
    }

    #[test]
    fn single_population_erdos_renyi() {
        let cfg = ModelConfig {
            populations: 1,
            population_size: 10,
            theta: ThetaSpec::Matrix(vec![vec![0.5]]),
            alpha: 1.0,
        };
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.node_count(), 10);
        assert!((m.expected_row_sum().unwrap() - 4.5).abs() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        let bad_p = ModelConfig {
            populations: 1,
            population_size: 10,
            theta: ThetaSpec::Matrix(vec![vec![1.2]]),
            alpha: 1.0,
        };
        assert!(matches!(build_model(&bad_p), Err(Error::InvalidModel(_))));

        let tiny = ModelConfig {
            populations: 1,
            population_size: 1,
            theta: ThetaSpec::Matrix(vec![vec![0.5]]),
            alpha: 1.0,
        };
        assert!(matches!(build_model(&tiny), Err(Error::InvalidModel(_))));

        let ragged = ModelConfig {
            populations: 2,
            population_size: 3,
            theta: ThetaSpec::Matrix(vec![vec![0.5, 0.1], vec![0.5]]),
            alpha: 1.0,
        };
        assert!(matches!(build_model(&ragged), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn config_json_accepts_both_theta_forms() {
        let a = ModelConfig::from_json(r#"{"M":5,"S":200,"theta":{"diag":0.05,"next":0.03},"alpha":1.0}"#)
            .unwrap();
        assert_eq!(a.theta, ThetaSpec::Cyclic { diag: 0.05, next: 0.03 });
        let b = ModelConfig::from_json(r#"{"M":2,"S":3,"theta":[[0.1,0.2],[0.2,0.1]],"alpha":0.5}"#).unwrap();
        assert_eq!(b.theta, ThetaSpec::Matrix(vec![vec![0.1, 0.2], vec![0.2, 0.1]]));
        assert!(ModelConfig::from_json("{").is_err());
    }

    #[test]
    fn expected_row_sum_examples() {
        assert!((paper_model(200).expected_row_sum().unwrap() - 15.95).abs() < 1e-12);
        let empty = BlockModel::new(2, 3, DMatrix::zeros(2, 2), 1.0).unwrap();
        assert!(matches!(empty.expected_row_sum(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn mean_matrix_examples() {
        let swap = BlockModel::new(2, 1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), 1.0).unwrap();
        assert_eq!(swap.mean_matrix(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let p = 0.3;
        let single = BlockModel::new(1, 3, DMatrix::from_element(1, 1, p), 1.0).unwrap();
        let expect = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { p });
        assert_eq!(single.mean_matrix(), expect);

        let b = paper_model(200).mean_matrix();
        assert!(linalg::normality_defect(&b) < 1e-10);
        assert!(b.diagonal().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn mean_spectrum_closed_form_for_paper_model() {
        let spec = paper_model(200).mean_spectrum(SpectrumScale::Raw).unwrap();
        assert_eq!(spec.dimension(), 1000);
        assert_eq!(spec.distinct(), 6);
        let bulk = spec.values.iter().find(|(_, k)| *k == 995).unwrap();
        assert!((bulk.0 - Complex64::new(-0.05, 0.0)).norm() < 1e-12);
        for k in 0..5 {
            let expect = Complex64::new(9.95, 0.0) + Complex64::from_polar(6.0, 2.0 * PI * k as f64 / 5.0);
            assert!(spec.values.iter().any(|(z, m)| *m == 1 && (z - expect).norm() < 1e-12));
        }
        let largest = spec.values.iter().map(|(z, _)| z.re).fold(f64::MIN, f64::max);
        assert!((largest - 15.95).abs() < 1e-12);
    }

    #[test]
    fn mean_spectrum_iteration_scale_has_six_values() {
        let spec = paper_model(200).mean_spectrum(SpectrumScale::Iteration).unwrap();
        assert_eq!(spec.distinct(), 6);
        assert!(spec.values.iter().any(|(z, _)| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        assert!(spec
            .values
            .iter()
            .any(|(z, k)| *k == 995 && (z.re + 0.05 / 15.95).abs() < 1e-12 && (z.re + 0.003135).abs() < 1e-6));
    }

    #[test]
    fn mean_spectrum_single_block() {
        let p = 0.4;
        let m = BlockModel::new(1, 3, DMatrix::from_element(1, 1, p), 1.0).unwrap();
        let spec = m.mean_spectrum(SpectrumScale::Raw).unwrap();
        assert_eq!(spec.values.len(), 2);
        assert!((spec.values[0].0.re + p).abs() < 1e-15 && spec.values[0].1 == 2);
        assert!((spec.values[1].0.re - 2.0 * p).abs() < 1e-15 && spec.values[1].1 == 1);
    }

    #[test]
    fn variance_profile_examples() {
        let vp = paper_model(200).variance_profile().unwrap();
        let expect = (200.0 * (0.05 * 0.95 + 0.03 * 0.97) - 0.05 * 0.95) / (15.95 * 15.95);
        assert!((vp.row_sum - expect).abs() < 1e-14);
        assert!((vp.col_sum - expect).abs() < 1e-14);
        assert!(vp.transitive);

        let det = build_model(&ModelConfig::cyclic(3, 4, 1.0, 1.0, 1.0)).unwrap();
        let vp = det.variance_profile().unwrap();
        assert_eq!(vp.row_sum, 0.0);
        assert_eq!(vp.col_sum, 0.0);

        let er = BlockModel::new(1, 10, DMatrix::from_element(1, 1, 0.5), 1.0).unwrap();
        let vp = er.variance_profile().unwrap();
        assert!((vp.row_sum - 9.0 * 0.25 / (4.5 * 4.5)).abs() < 1e-15);
    }

    #[test]
    fn unequal_blocks_are_not_transitive() {
        let theta = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.2]);
        let m = BlockModel::new(2, 5, theta, 1.0).unwrap();
        assert!(!m.diagnostics().transitive);
        assert!(!m.variance_profile().unwrap().transitive);
    }

    #[test]
    fn sampling_extremes() {
        let full = BlockModel::new(2, 3, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), 1.0).unwrap();
        let a = full.sample_adjacency(7);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a.get(i, j), full.population_of(i) != full.population_of(j));
            }
        }
        let none = BlockModel::new(2, 3, DMatrix::zeros(2, 2), 1.0).unwrap();
        assert_eq!(none.sample_adjacency(7).edge_count(), 0);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let m = paper_model(20);
        assert_eq!(m.sample_adjacency(11), m.sample_adjacency(11));
        assert_ne!(m.sample_adjacency(11), m.sample_adjacency(12));
    }

    #[test]
    fn iteration_matrix_examples() {
        let cycle = Adjacency::from_rows(&[vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        let w = iteration_matrix(&cycle, 1.0).unwrap();
        assert_eq!(w.entries, DMatrix::from_row_slice(3, 3, &[0., 1., 0., 0., 0., 1., 1., 0., 0.]));

        let k2 = Adjacency::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        let w = iteration_matrix(&k2, 0.5).unwrap();
        assert_eq!(w.entries, DMatrix::from_element(2, 2, 0.5));

        let isolated = Adjacency::from_rows(&[vec![0, 1], vec![0, 0]]).unwrap();
        let w = iteration_matrix(&isolated, 1.0).unwrap();
        assert_eq!(w.repaired, vec![1]);
        assert_eq!(w.entries[(1, 1)], 1.0);
    }

    #[test]
    fn validation_reports() {
        let ok = build_model(&ModelConfig::cyclic(5, 10, 0.05, 0.03, 1.0)).unwrap();
        assert!(ok.validate().pass);
        assert!(ok.require_scalar_path().is_ok());

        let theta = DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.2]);
        let unequal = BlockModel::new(2, 5, theta, 1.0).unwrap();
        let r = unequal.validate();
        assert!(!r.pass && !r.transitive && !r.reasons.is_empty());
        assert!(matches!(unequal.require_scalar_path(), Err(Error::NotTransitive(_))));

        let theta = DMatrix::from_row_slice(3, 3, &[0.1, 0.5, 0.0, 0.0, 0.1, 0.2, 0.3, 0.0, 0.1]);
        let skew = BlockModel::new(3, 4, theta, 1.0).unwrap();
        let r = skew.validate();
        assert!(!r.normal && !r.pass);
    }
}
