use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::json;

use spectral_consensus::canonical::{model_density, Bounds, Grid, Quadrature};
use spectral_consensus::consensus::{empirical_spectrum, monte_carlo, unit_disk_grid, SimulationConfig};
use spectral_consensus::filterdesign::{
    design_filter, extract_region, FilterSpec, Method, SampleRegion, Threshold, DEFAULT_MAX_POINTS,
};
use spectral_consensus::io::{self, FilterRecord, GridMeta, SimulationMeta};
use spectral_consensus::netmodel::{build_model, BlockModel, ModelConfig};
use spectral_consensus::{Error, Result};

#[derive(Parser)]
#[command(name = "spectral-consensus", version, about = "Spectral densities and consensus filters for directed block-model networks")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SPECTRAL_CONSENSUS_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Approximate spectral density of the iteration matrix from the canonical equations.
    Density(DensityArgs),
    /// Histogram of realised iteration-matrix eigenvalues.
    Empirical(EmpiricalArgs),
    /// Design minimax filters on a thresholded density (or explicit points).
    Design(DesignArgs),
    /// Monte-Carlo comparison of filter designs.
    Simulate(SimulateArgs),
    /// Check that a model fits the scalar solver's assumptions.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model description (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Grid resolution: `N` or `NTxNS`.
    #[arg(long, default_value = "201")]
    grid: String,
    /// Grid bounds in the iteration-matrix plane: `tmin,tmax,smin,smax`.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
}

#[derive(Args, Clone)]
struct QuadArgs {
    #[arg(long, default_value_t = 1e-6)]
    beta: f64,
    #[arg(long, default_value_t = 1e2)]
    umax: f64,
    /// Quadrature nodes in u.
    #[arg(long, default_value_t = 200)]
    nodes: usize,
}

#[derive(Args, Clone)]
struct RegionArgs {
    /// Exclusion radius around 1.
    #[arg(long, default_value_t = 0.1)]
    kappa: f64,
    /// Density threshold: `rel:F` (fraction of max) or an absolute value.
    #[arg(long, default_value = "rel:0.02")]
    tau: String,
    /// Cap on design points.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    max_points: usize,
    /// Filter degrees: `D`, `A..B` (inclusive) or `A,B,C`.
    #[arg(long, default_value = "1..6")]
    degrees: String,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    quad: QuadArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EmpiricalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct DesignArgs {
    /// Density CSV as written by `density`.
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    density: Option<PathBuf>,
    /// Explicit design points, e.g. `0.2`, `0.1+0.3i` (repeatable).
    #[arg(long, allow_hyphen_values = true, value_delimiter = ';')]
    points: Vec<String>,
    #[command(flatten)]
    region: RegionArgs,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    region: RegionArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    quad: QuadArgs,
    /// Methods to compare.
    #[arg(long, default_value = "trivial,mean,proposed,oracle", value_delimiter = ',')]
    methods: Vec<String>,
    /// Pre-designed proposed filters (JSON from `design`); otherwise designed here.
    #[arg(long)]
    filters: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Also write `validate.json` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Density(a) => cmd_density(a),
        Command::Empirical(a) => cmd_empirical(a),
        Command::Design(a) => cmd_design(a),
        Command::Simulate(a) => cmd_simulate(a),
        // A failed validation exits with the configuration-error code.
        Command::Validate(a) => cmd_validate(a),
    }
}

fn load_model(path: &Path) -> Result<(ModelConfig, BlockModel)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let config = ModelConfig::from_json(&text)?;
    let model = build_model(&config)?;
    Ok((config, model))
}

fn parse_resolution(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidArgument(format!("grid '{s}' is not N or NTxNS"));
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match nums.as_slice() {
        [n] => Ok((*n, *n)),
        [a, b] => Ok((*a, *b)),
        _ => Err(bad()),
    }
}

fn parse_bounds(s: &str) -> Result<Bounds> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bounds '{s}' must be tmin,tmax,smin,smax")))?;
    match v.as_slice() {
        [a, b, c, d] => Ok((*a, *b, *c, *d)),
        _ => Err(Error::InvalidArgument(format!("bounds '{s}' must have four values"))),
    }
}

fn parse_degrees(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("degrees '{s}' must be D, A..B or a comma list"));
    let mut out: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    out.sort_unstable();
    out.dedup();
    if out.is_empty() || out.contains(&0) {
        return Err(bad());
    }
    Ok(out)
}

fn quadrature(q: &QuadArgs) -> Result<Quadrature> {
    let quad = Quadrature {
        beta: q.beta,
        u_max: q.umax,
        nodes: q.nodes,
    };
    quad.validate()?;
    Ok(quad)
}

fn write_grid(out: &Path, stem: &str, kind: &str, field: &spectral_consensus::canonical::DensityField, seed: Option<u64>, parameters: serde_json::Value) -> Result<()> {
    io::write_file(&out.join(format!("{stem}.csv")), &io::density_csv(field))?;
    let meta = GridMeta::new(kind, field, seed, parameters);
    io::write_file(&out.join(format!("{stem}.json")), &io::to_json(&meta)?)
}

fn cmd_density(a: DensityArgs) -> Result<()> {
    let (config, model) = load_model(&a.model.config)?;
    let (n_t, n_s) = parse_resolution(&a.grid.grid)?;
    let bounds = a.grid.bounds.as_deref().map(parse_bounds).transpose()?;
    let quad = quadrature(&a.quad)?;
    let density = model_density(&model, n_t, n_s, bounds, &quad)?;
    let params = json!({
        "model": config,
        "grid": [n_t, n_s],
        "bounds": bounds.map(|b| [b.0, b.1, b.2, b.3]),
        "beta": quad.beta,
        "umax": quad.u_max,
        "nodes": quad.nodes,
    });
    write_grid(&a.out, "density_xi", "density-xi", &density.xi, None, params.clone())?;
    write_grid(&a.out, "density", "density", &density.iteration, None, params)?;
    eprintln!(
        "density: mass {:.4}, {} masked, {} clipped ({} large negatives)",
        density.iteration.mass(),
        density.iteration.diagnostics.masked,
        density.iteration.diagnostics.clipped,
        density.iteration.diagnostics.large_negative
    );
    Ok(())
}

fn cmd_empirical(a: EmpiricalArgs) -> Result<()> {
    let (config, model) = load_model(&a.model.config)?;
    let (n_t, n_s) = parse_resolution(&a.grid.grid)?;
    let grid = match a.grid.bounds.as_deref().map(parse_bounds).transpose()? {
        Some((t0, t1, s0, s1)) => Grid::new(t0, t1, s0, s1, n_t, n_s)?,
        None => unit_disk_grid(n_t, n_s)?,
    };
    let field = empirical_spectrum(&model, a.trials, &grid, a.seed)?;
    let params = json!({ "model": config, "grid": [n_t, n_s], "trials": a.trials });
    write_grid(&a.out, "empirical", "empirical", &field, Some(a.seed), params)
}

fn design_records(region: &SampleRegion, degrees: &[usize], args: &RegionArgs, source: serde_json::Value) -> Result<Vec<FilterRecord>> {
    degrees
        .iter()
        .map(|&d| {
            let filter = design_filter(region, d)?;
            Ok(FilterRecord {
                filter,
                kappa: args.kappa,
                tau: region.tau,
                points: region.len(),
                version: spectral_consensus::VERSION.into(),
                parameters: json!({ "source": source, "max_points": args.max_points }),
            })
        })
        .collect()
}

fn write_filters(path: &Path, records: &[FilterRecord]) -> Result<()> {
    let text = match records {
        [one] => io::to_json(one)?,
        many => io::to_json(&many)?,
    };
    io::write_file(path, &text)
}

fn cmd_design(a: DesignArgs) -> Result<()> {
    let degrees = parse_degrees(&a.region.degrees)?;
    let tau: Threshold = a.region.tau.parse()?;
    let (region, source) = match &a.density {
        Some(path) => {
            let field = io::read_density(path)?;
            let region = extract_region(&field, a.region.kappa, tau, a.region.max_points)?;
            (region, json!({ "density": path.display().to_string() }))
        }
        None => {
            let points: Vec<Complex64> = a
                .points
                .iter()
                .map(|p| {
                    p.trim()
                        .parse::<Complex64>()
                        .map_err(|_| Error::InvalidArgument(format!("cannot parse point '{p}'")))
                })
                .collect::<Result<_>>()?;
            let region = SampleRegion::from_points(&points, a.region.kappa)?;
            (region, json!({ "points": a.points }))
        }
    };
    let records = design_records(&region, &degrees, &a.region, source)?;
    for r in &records {
        eprintln!("degree {}: epsilon {:e} over {} points", r.filter.degree, r.filter.epsilon, r.points);
    }
    write_filters(&a.out.join("filter.json"), &records)
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let (config, model) = load_model(&a.model.config)?;
    let degrees = parse_degrees(&a.region.degrees)?;
    let tau: Threshold = a.region.tau.parse()?;
    let methods: Vec<Method> = a.methods.iter().map(|m| m.parse()).collect::<Result<_>>()?;

    let mut proposed: BTreeMap<usize, FilterSpec> = BTreeMap::new();
    if methods.contains(&Method::Proposed) {
        let records = match &a.filters {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                io::parse_filters(&text)?
            }
            None => {
                let (n_t, n_s) = parse_resolution(&a.grid.grid)?;
                let bounds = a.grid.bounds.as_deref().map(parse_bounds).transpose()?;
                let quad = quadrature(&a.quad)?;
                let density = model_density(&model, n_t, n_s, bounds, &quad)?;
                let region = extract_region(&density.iteration, a.region.kappa, tau, a.region.max_points)?;
                let source = json!({ "grid": [n_t, n_s], "beta": quad.beta, "umax": quad.u_max, "nodes": quad.nodes });
                let records = design_records(&region, &degrees, &a.region, source)?;
                write_filters(&a.out.join("proposed_filters.json"), &records)?;
                records
            }
        };
        for r in records {
            proposed.insert(r.filter.degree, r.filter);
        }
    }

    let sim = SimulationConfig {
        methods: methods.clone(),
        degrees: degrees.clone(),
        trials: a.trials,
        master_seed: a.seed,
        kappa: a.region.kappa,
        proposed,
    };
    let outcome = monte_carlo(&model, &sim)?;
    io::write_file(&a.out.join("rates.csv"), &io::rates_csv(&outcome.rows))?;
    io::write_file(&a.out.join("summary.csv"), &io::summary_csv(&outcome.summary))?;
    let params = json!({
        "model": config,
        "methods": methods,
        "degrees": degrees,
        "kappa": a.region.kappa,
        "tau": tau.to_string(),
        "filters": a.filters.as_ref().map(|p| p.display().to_string()),
    });
    let meta = SimulationMeta::new(&outcome, a.trials, a.seed, params);
    io::write_file(&a.out.join("simulation.json"), &io::to_json(&meta)?)?;
    eprintln!(
        "simulate: {} of {} trials accepted",
        a.trials - outcome.exclusions.len(),
        a.trials
    );
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> Result<()> {
    let (config, model) = load_model(&a.model.config)?;
    let report = model.validate();
    let doc = json!({
        "version": spectral_consensus::VERSION,
        "model": config,
        "report": report,
    });
    let text = io::to_json(&doc)?;
    print!("{text}");
    if let Some(out) = &a.out {
        io::write_file(&out.join("validate.json"), &text)?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(Error::NotTransitive(report.reasons.join("; ")))
    }
}
