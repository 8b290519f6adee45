//! Trajectory CSV and JSON report formats.
//!
//! CSV columns are fixed: `t,f,grad_norm,step_norm,err_norm,perturbed,inner_iters,event`.
//! Floats are written with 17 significant digits so replays can be compared
//! byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use psca::certify::Certificate;
use psca::drivers::{DiagnosticScales, IterateRecord, PscaParams, RunResult};

use crate::config::ExperimentConfig;
use crate::{BenchError, Result};

pub const CSV_HEADER: &str = "t,f,grad_norm,step_norm,err_norm,perturbed,inner_iters,event";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub step_norm: f64,
    pub err_norm: f64,
    pub perturbed: u8,
    pub inner_iters: usize,
    pub event: String,
}

impl From<&IterateRecord> for TrajectoryRow {
    fn from(r: &IterateRecord) -> Self {
        Self {
            t: r.t,
            f: r.f,
            grad_norm: r.grad_norm,
            step_norm: r.step_norm,
            err_norm: r.err_norm,
            perturbed: r.perturbed as u8,
            inner_iters: r.inner_iters,
            event: r.event.tag().to_string(),
        }
    }
}

/// 17 significant digits, round-trippable.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(result: &RunResult) -> String {
    let mut out = String::with_capacity(64 * (result.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in result.records.iter().map(TrajectoryRow::from) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.t,
            fmt_float(r.f),
            fmt_float(r.grad_norm),
            fmt_float(r.step_norm),
            fmt_float(r.err_norm),
            r.perturbed,
            r.inner_iters,
            r.event
        );
    }
    out
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(BenchError::InvalidArgument("trajectory CSV header mismatch".into()));
    }
    lines
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 8 {
                return Err(BenchError::InvalidArgument(format!("bad CSV row `{line}`")));
            }
            let bad = |c: &str| BenchError::InvalidArgument(format!("bad CSV field `{c}` in `{line}`"));
            let f = |i: usize| cols[i].parse::<f64>().map_err(|_| bad(cols[i]));
            let u = |i: usize| cols[i].parse::<usize>().map_err(|_| bad(cols[i]));
            Ok(TrajectoryRow {
                t: u(0)?,
                f: f(1)?,
                grad_norm: f(2)?,
                step_norm: f(3)?,
                err_norm: f(4)?,
                perturbed: cols[5].parse().map_err(|_| bad(cols[5]))?,
                inner_iters: u(6)?,
                event: cols[7].to_string(),
            })
        })
        .collect()
}

/// Per-run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub run_seed: u64,
    pub termination: Option<String>,
    pub iterations: usize,
    pub perturbation_count: usize,
    /// `U` at the returned point.
    pub f_out: Option<f64>,
    /// `U` at the last iterate (last CSV row).
    pub final_objective: Option<f64>,
    pub x_out: Option<Vec<f64>>,
    pub certificate: Option<Certificate>,
    pub params: Option<PscaParams>,
    pub scales: Option<DiagnosticScales>,
    pub descent_checked: usize,
    pub descent_pass_count: usize,
    pub max_err_norm: f64,
    pub eigen_log: Vec<(usize, f64)>,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

/// Summary of a seed sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub config: ExperimentConfig,
    pub runs: usize,
    pub failed_runs: usize,
    /// Runs certified as ε-second-order stationary.
    pub sosp_count: usize,
    pub sosp_rate: f64,
    /// Exact (Clopper-Pearson) 95% interval for the success rate.
    pub sosp_rate_ci95: (f64, f64),
    pub terminations: std::collections::BTreeMap<String, usize>,
    pub median_iterations: f64,
    pub mean_f_out: Option<f64>,
    pub wall_time_ms: u64,
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| BenchError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_report(path: &Path) -> Result<Report> {
    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
