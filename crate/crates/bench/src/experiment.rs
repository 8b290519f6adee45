//! Single runs and seeded sweeps.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;

use psca::certify::{certify_run, min_eigenvalue, Classification, DEFAULT_MAX_ITERS};
use psca::drivers::{
    derive_params, derive_scales, run_gd_with, run_pgd_with, run_psca_with, run_sca_with, PscaInputs, PscaParams,
    RunOptions, RunResult, Termination,
};
use psca::numerics::sample_uniform_ball;
use psca::problems::ProblemInstance;
use psca::{RngStream, Vector};

use crate::config::{Algo, ExperimentConfig};
use crate::report::{trajectory_csv, write_file, AggregateReport, Report};
use crate::stats::{clopper_pearson, median};
use crate::{BenchError, Result};

/// ChaCha stream id used for initial-point offsets, kept apart from the
/// driver's perturbation stream.
const INIT_STREAM: u64 = 1;

/// Floor on the default `Δ_U`, so a start at the optimum still gives finite parameters.
const MIN_DELTA_U: f64 = 1e-12;

/// Outcome of one seeded run.
#[derive(Debug, Clone)]
pub struct SingleRun {
    pub seed: u64,
    pub x0: Vector,
    /// `None` when the driver returned an error (see `report.error`).
    pub result: Option<RunResult>,
    pub report: Report,
    /// Trajectory CSV; header only when the run failed before producing records.
    pub csv: String,
}

impl SingleRun {
    pub fn ok(&self) -> bool {
        self.report.error.is_none()
    }
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<SingleRun>,
    pub csv_paths: Vec<PathBuf>,
    pub report_paths: Vec<PathBuf>,
    pub aggregate: Option<AggregateReport>,
    pub aggregate_path: Option<PathBuf>,
}

impl ExperimentOutput {
    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(SingleRun::ok)
    }
}

/// Initial point for `seed`: the canonical start plus a uniform offset of
/// radius `init_radius`, drawn from a side stream.
pub fn initial_point(problem: &ProblemInstance, init_radius: f64, seed: u64) -> Result<Vector> {
    let mut x0 = problem.canonical_start.clone();
    if init_radius > 0.0 {
        let mut rng = RngStream::new(seed).side_stream(INIT_STREAM);
        x0 += sample_uniform_ball(problem.dim(), init_radius, &mut rng)?;
    }
    Ok(x0)
}

/// Perturbed-driver parameters for a start `x0`. `Δ_U` defaults to
/// `U(x0) − U*` when the optimum is known.
pub fn params_for(cfg: &ExperimentConfig, problem: &ProblemInstance, x0: &Vector) -> Result<Option<PscaParams>> {
    let obj = problem.objective.as_ref();
    let delta_u = match (cfg.delta_u, obj.f_star()) {
        (Some(du), _) => du,
        (None, Some(f_star)) => (obj.value(x0) - f_star).max(MIN_DELTA_U),
        (None, None) => return Ok(None),
    };
    let inputs = PscaInputs {
        c: cfg.c,
        s: cfg.s,
        max_iters: cfg.max_iters,
        window: cfg.window,
        ..PscaInputs::new(cfg.eps, cfg.delta, delta_u)
    };
    Ok(Some(derive_params(&inputs, obj)?))
}

/// Runs one seed with an optional early stop at `‖∇U‖ ≤ stop_at_grad`
/// (perturbed algorithms only; the unperturbed ones always stop at `eps`).
pub fn run_single_with(
    cfg: &ExperimentConfig,
    problem: &ProblemInstance,
    seed: u64,
    stop_at_grad: Option<f64>,
) -> SingleRun {
    let started = Instant::now();
    let obj = problem.objective.as_ref();
    let mut report = Report {
        config: ExperimentConfig { seed, ..cfg.clone() },
        run_seed: seed,
        termination: None,
        iterations: 0,
        perturbation_count: 0,
        f_out: None,
        final_objective: None,
        x_out: None,
        certificate: None,
        params: None,
        scales: None,
        descent_checked: 0,
        descent_pass_count: 0,
        max_err_norm: 0.0,
        eigen_log: Vec::new(),
        wall_time_ms: 0,
        error: None,
    };
    let mut x0 = problem.canonical_start.clone();
    let outcome = (|| -> Result<RunResult> {
        x0 = initial_point(problem, cfg.init_radius, seed)?;
        let params = params_for(cfg, problem, &x0)?;
        if let Some(p) = &params {
            report.scales = Some(derive_scales(p, obj, cfg.effective_modulus()));
        }
        report.params = params.clone();
        let opts = RunOptions {
            record_iterates: cfg.record_eigen_every.is_some(),
            stop_at_grad,
        };
        let spec = cfg.surrogate_spec()?;
        let mut rng = RngStream::new(seed);
        let l1 = obj.constants().l1;
        let need = |p: Option<PscaParams>| {
            p.ok_or_else(|| BenchError::InvalidArgument("delta_U is required for perturbed algorithms".into()))
        };
        let result = match cfg.algo {
            Algo::Sca => run_sca_with(obj, &spec, cfg.step_size(l1), cfg.eps, cfg.max_iters, &x0, &opts)?,
            Algo::Gd => run_gd_with(obj, cfg.step_size(l1), cfg.eps, cfg.max_iters, &x0, &opts)?,
            Algo::Psca => run_psca_with(obj, &spec, &need(params)?, &x0, &mut rng, &opts)?,
            Algo::Pgd => run_pgd_with(obj, &need(params)?, &x0, &mut rng, &opts)?,
        };
        Ok(result)
    })();

    let (result, csv) = match outcome {
        Ok(result) => {
            fill_from_result(&mut report, cfg, problem, &result);
            let csv = trajectory_csv(&result);
            (Some(result), csv)
        }
        Err(e) => {
            warn!("seed {seed}: {e}");
            report.error = Some(e.to_string());
            (None, format!("{}\n", crate::report::CSV_HEADER))
        }
    };
    report.wall_time_ms = started.elapsed().as_millis() as u64;
    SingleRun {
        seed,
        x0,
        result,
        report,
        csv,
    }
}

pub fn run_single(cfg: &ExperimentConfig, problem: &ProblemInstance, seed: u64) -> SingleRun {
    run_single_with(cfg, problem, seed, None)
}

fn fill_from_result(report: &mut Report, cfg: &ExperimentConfig, problem: &ProblemInstance, result: &RunResult) {
    let obj = problem.objective.as_ref();
    report.termination = Some(result.termination.as_str().to_string());
    report.iterations = result.iterations();
    report.perturbation_count = result.perturbation_count;
    report.f_out = Some(result.f_out);
    report.final_objective = Some(result.final_objective());
    report.x_out = Some(result.x_out.iter().copied().collect());
    report.descent_checked = result.records.iter().filter(|r| r.descent.is_some()).count();
    report.descent_pass_count = result.descent_pass_count();
    report.max_err_norm = result.records.iter().map(|r| r.err_norm).fold(0.0, f64::max);
    if result.termination != Termination::LeftValidRegion {
        match certify_run(obj, result, cfg.eps) {
            Ok(c) => report.certificate = Some(c),
            Err(e) => report.error = Some(format!("certification failed: {e}")),
        }
    } else {
        report.error = Some("iterate left the valid region".into());
    }
    if let (Some(every), Some(iterates)) = (cfg.record_eigen_every, result.iterates.as_ref()) {
        let tol = psca::certify::default_tol(obj);
        for (t, x) in iterates.iter().enumerate().step_by(every) {
            match min_eigenvalue(obj, x, tol, DEFAULT_MAX_ITERS) {
                Ok(est) => report.eigen_log.push((t, est.lambda)),
                Err(e) => {
                    report.error = Some(format!("eigenvalue logging failed at t = {t}: {e}"));
                    break;
                }
            }
        }
    }
}

/// Problem address reduced to characters safe in file names.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

pub fn run_stem(cfg: &ExperimentConfig, seed: u64) -> String {
    format!("{}_{}_seed{}", cfg.algo.as_str(), sanitize(&cfg.problem), seed)
}

/// Validates `cfg`, runs every seed in parallel, and writes one CSV and one
/// JSON report per seed (plus `aggregate.json` for sweeps) under `cfg.out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let problem = cfg.validate().map_err(|e| BenchError::Config(e.violations))?;
    let started = Instant::now();
    let seeds: Vec<u64> = (0..cfg.seeds.unwrap_or(1) as u64).map(|k| cfg.seed + k).collect();
    info!(
        "running {} seed(s) of {} on {}",
        seeds.len(),
        cfg.algo.as_str(),
        cfg.problem
    );
    let runs: Vec<SingleRun> = seeds.par_iter().map(|&s| run_single(cfg, &problem, s)).collect();

    let mut csv_paths = Vec::with_capacity(runs.len());
    let mut report_paths = Vec::with_capacity(runs.len());
    for run in &runs {
        let stem = run_stem(cfg, run.seed);
        let csv_path = cfg.out_dir.join(format!("{stem}.csv"));
        let report_path = cfg.out_dir.join(format!("{stem}.json"));
        write_file(&csv_path, &run.csv)?;
        write_file(&report_path, &serde_json::to_string_pretty(&run.report)?)?;
        csv_paths.push(csv_path);
        report_paths.push(report_path);
    }

    let (aggregate, aggregate_path) = if cfg.seeds.is_some() {
        let agg = aggregate(cfg, &runs, started.elapsed().as_millis() as u64);
        let path = aggregate_path(&cfg.out_dir, cfg);
        write_file(&path, &serde_json::to_string_pretty(&agg)?)?;
        (Some(agg), Some(path))
    } else {
        (None, None)
    };
    Ok(ExperimentOutput {
        runs,
        csv_paths,
        report_paths,
        aggregate,
        aggregate_path,
    })
}

fn aggregate_path(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    dir.join(format!(
        "{}_{}_aggregate.json",
        cfg.algo.as_str(),
        sanitize(&cfg.problem)
    ))
}

pub fn aggregate(cfg: &ExperimentConfig, runs: &[SingleRun], wall_time_ms: u64) -> AggregateReport {
    let n = runs.len();
    let sosp_count = runs
        .iter()
        .filter(|r| {
            r.report
                .certificate
                .as_ref()
                .is_some_and(|c| c.classification == Classification::EpsSosp)
        })
        .count();
    let mut terminations = BTreeMap::new();
    for r in runs {
        let key = r.report.termination.clone().unwrap_or_else(|| "error".into());
        *terminations.entry(key).or_insert(0) += 1;
    }
    let mut iters: Vec<f64> = runs.iter().map(|r| r.report.iterations as f64).collect();
    let f_outs: Vec<f64> = runs.iter().filter_map(|r| r.report.f_out).collect();
    AggregateReport {
        config: cfg.clone(),
        runs: n,
        failed_runs: runs.iter().filter(|r| !r.ok()).count(),
        sosp_count,
        sosp_rate: sosp_count as f64 / n as f64,
        sosp_rate_ci95: clopper_pearson(sosp_count, n, 0.95),
        terminations,
        median_iterations: median(&mut iters),
        mean_f_out: (!f_outs.is_empty()).then(|| f_outs.iter().sum::<f64>() / f_outs.len() as f64),
        wall_time_ms,
    }
}
