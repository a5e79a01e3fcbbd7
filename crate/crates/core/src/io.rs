//! Plain-text file formats: density grids, filters and simulation tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so writing
//! is deterministic and reading recovers the exact values.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canonical::{DensityField, FieldDiagnostics, Grid};
use crate::consensus::{ConsensusOutcome, RateRow, SummaryRow};
use crate::error::{Error, Result};
use crate::filterdesign::{FilterSpec, Threshold};

pub const DENSITY_HEADER: &str = "t,s,density";
pub const RATES_HEADER: &str = "trial,method,degree,rate";
pub const SUMMARY_HEADER: &str = "method,degree,median,q25,q75,excluded_trials";

/// Float text used in every CSV: `nan`, `inf`, `-inf` or a round-trip decimal.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    match s.trim() {
        "nan" | "NaN" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Format(format!("not a number: '{t}'"))),
    }
}

pub fn density_csv(field: &DensityField) -> String {
    let g = &field.grid;
    let mut out = String::with_capacity(g.len() * 32);
    out.push_str(DENSITY_HEADER);
    out.push('\n');
    for i in 0..g.n_t {
        let t = fmt_f64(g.t_at(i));
        for j in 0..g.n_s {
            let _ = writeln!(out, "{t},{},{}", fmt_f64(g.s_at(j)), fmt_f64(field.value(i, j)));
        }
    }
    out
}

/// Reads a density CSV. The grid is recovered from the distinct coordinates,
/// which must form a full row-major `t`-outer lattice.
pub fn parse_density_csv(text: &str) -> Result<DensityField> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == DENSITY_HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "expected header '{DENSITY_HEADER}', found {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Format(format!("density row {} has {} columns", k + 2, cols.len())));
        }
        rows.push((parse_f64(cols[0])?, parse_f64(cols[1])?, parse_f64(cols[2])?));
    }
    if rows.is_empty() {
        return Err(Error::Format("density file has no rows".into()));
    }
    let n_s = rows.iter().take_while(|r| r.0 == rows[0].0).count();
    if rows.len() % n_s != 0 {
        return Err(Error::Format("density rows do not form a rectangular grid".into()));
    }
    let n_t = rows.len() / n_s;
    let grid = Grid::new(rows[0].0, rows[rows.len() - 1].0, rows[0].1, rows[n_s - 1].1, n_t, n_s)
        .map_err(|e| Error::Format(format!("density grid: {e}")))?;
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k / n_s, k % n_s);
        let tol = 1e-9 * (grid.dt() + grid.ds());
        if (r.0 - grid.t_at(i)).abs() > tol || (r.1 - grid.s_at(j)).abs() > tol {
            return Err(Error::Format(format!("density row {} is off the uniform grid", k + 2)));
        }
        if !(r.2.is_finite() && r.2 >= 0.0) {
            return Err(Error::Format(format!("density row {} has an invalid value", k + 2)));
        }
    }
    let mut field = DensityField::zeros(grid);
    field.values = rows.iter().map(|r| r.2).collect();
    Ok(field)
}

pub fn read_density(path: &Path) -> Result<DensityField> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_density_csv(&text)
}

/// JSON sidecar written next to every density or histogram grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub kind: String,
    pub version: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
    pub t_min: f64,
    pub t_max: f64,
    pub s_min: f64,
    pub s_max: f64,
    pub n_t: usize,
    pub n_s: usize,
    pub beta: Option<f64>,
    pub u_max: Option<f64>,
    pub mass: f64,
    pub masked: usize,
    pub clipped: usize,
    pub large_negative: usize,
    pub min_raw: f64,
}

impl GridMeta {
    pub fn new(kind: &str, field: &DensityField, seed: Option<u64>, parameters: serde_json::Value) -> Self {
        let g = &field.grid;
        let FieldDiagnostics {
            masked,
            clipped,
            large_negative,
            min_raw,
        } = field.diagnostics;
        GridMeta {
            kind: kind.into(),
            version: crate::VERSION.into(),
            seed,
            parameters,
            t_min: g.t_min,
            t_max: g.t_max,
            s_min: g.s_min,
            s_max: g.s_max,
            n_t: g.n_t,
            n_s: g.n_s,
            beta: field.beta,
            u_max: field.u_max,
            mass: field.mass(),
            masked,
            clipped,
            large_negative,
            min_raw: if min_raw.is_finite() { min_raw } else { 0.0 },
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// On-disk filter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRecord {
    #[serde(flatten)]
    pub filter: FilterSpec,
    pub kappa: f64,
    pub tau: Threshold,
    pub points: usize,
    pub version: String,
    pub parameters: serde_json::Value,
}

/// A file holds either one filter object or an array of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterFile {
    One(FilterRecord),
    Many(Vec<FilterRecord>),
}

impl FilterFile {
    pub fn into_records(self) -> Vec<FilterRecord> {
        match self {
            FilterFile::One(r) => vec![r],
            FilterFile::Many(v) => v,
        }
    }
}

pub fn parse_filters(text: &str) -> Result<Vec<FilterRecord>> {
    let file: FilterFile = serde_json::from_str(text).map_err(|e| Error::Format(format!("filter file: {e}")))?;
    let records = file.into_records();
    for r in &records {
        let f = &r.filter;
        if f.degree == 0 || f.coefficients.len() != f.degree + 1 {
            return Err(Error::Format(format!("filter of degree {} has {} coefficients", f.degree, f.coefficients.len())));
        }
        if (f.coefficients.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Format("filter coefficients must sum to 1".into()));
        }
    }
    Ok(records)
}

pub fn rates_csv(rows: &[RateRow]) -> String {
    let mut out = String::from(RATES_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.trial, r.method, r.degree, fmt_f64(r.rate));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.method,
            r.degree,
            fmt_f64(r.median),
            fmt_f64(r.q25),
            fmt_f64(r.q75),
            r.excluded_trials
        );
    }
    out
}

/// Sidecar for the simulation tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMeta {
    pub version: String,
    pub seed: u64,
    pub parameters: serde_json::Value,
    pub trials: usize,
    pub accepted_trials: usize,
    pub exclusions: Vec<crate::consensus::Exclusion>,
    pub mean_skipped_degrees: Vec<usize>,
    pub skipped: Vec<SkipCount>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipCount {
    pub method: String,
    pub degree: usize,
    pub trials: usize,
}

impl SimulationMeta {
    pub fn new(outcome: &ConsensusOutcome, trials: usize, seed: u64, parameters: serde_json::Value) -> Self {
        SimulationMeta {
            version: crate::VERSION.into(),
            seed,
            parameters,
            trials,
            accepted_trials: trials - outcome.exclusions.len(),
            exclusions: outcome.exclusions.clone(),
            mean_skipped_degrees: outcome.mean_skipped.clone(),
            skipped: outcome
                .summary
                .iter()
                .filter(|s| s.skipped > 0)
                .map(|s| SkipCount {
                    method: s.method.to_string(),
                    degree: s.degree,
                    trials: s.skipped,
                })
                .collect(),
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterdesign::Method;

    #[test]
    fn density_round_trip() {
        let grid = Grid::new(-0.7, 1.3, -0.9, 0.9, 7, 5).unwrap();
        let mut field = DensityField::zeros(grid);
        for (k, v) in field.values.iter_mut().enumerate() {
            *v = (k as f64 * 0.37).sin().abs() / 3.0;
        }
        let text = density_csv(&field);
        assert!(text.starts_with("t,s,density\n"));
        assert_eq!(text.lines().count(), 36);
        let back = parse_density_csv(&text).unwrap();
        assert_eq!(back.grid, field.grid);
        assert_eq!(back.values, field.values);
        assert_eq!(density_csv(&back), text);
    }

    #[test]
    fn density_rejects_garbage() {
        assert!(matches!(parse_density_csv("a,b\n1,2\n"), Err(Error::Format(_))));
        assert!(parse_density_csv("t,s,density\n0,0,1\n0,1,1\n1,0,1\n").is_err());
        assert!(parse_density_csv("t,s,density\n").is_err());
    }

    #[test]
    fn special_floats() {
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(parse_f64("-inf").unwrap(), f64::NEG_INFINITY);
        assert_eq!(parse_f64(&fmt_f64(0.1 + 0.2)).unwrap(), 0.1 + 0.2);
    }

    #[test]
    fn filter_json_shape() {
        let rec = FilterRecord {
            filter: FilterSpec {
                degree: 1,
                coefficients: vec![-1.0, 2.0],
                epsilon: 0.36,
                method: Method::Proposed,
                exact: false,
                certified: true,
            },
            kappa: 0.1,
            tau: Threshold::Relative(0.02),
            points: 2,
            version: "x".into(),
            parameters: serde_json::json!({}),
        };
        let text = to_json(&rec).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["degree", "coefficients", "epsilon", "method", "kappa", "tau"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["method"], "proposed");
        assert_eq!(parse_filters(&text).unwrap(), vec![rec.clone()]);
        let many = to_json(&vec![rec.clone(), rec]).unwrap();
        assert_eq!(parse_filters(&many).unwrap().len(), 2);
    }

    #[test]
    fn rate_tables() {
        let rows = vec![RateRow {
            trial: 0,
            seed: 1,
            method: Method::Trivial,
            degree: 2,
            rate: f64::NEG_INFINITY,
        }];
        assert_eq!(rates_csv(&rows), "trial,method,degree,rate\n0,trivial,2,-inf\n");
    }
}
