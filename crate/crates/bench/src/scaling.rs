//! Empirical iteration-count scaling in `1/ε`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use psca::drivers::Termination;
use psca::problems::ProblemInstance;

use crate::config::ExperimentConfig;
use crate::experiment::run_single_with;
use crate::stats::{fit_line, median, LineFit};
use crate::{BenchError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub eps: f64,
    /// Iterations to the first `‖∇U(x_t)‖ ≤ ε`, per seed; `None` if never reached.
    pub iterations: Vec<Option<usize>>,
    pub median_iterations: Option<f64>,
    /// Set when any seed hit `max_iters` or failed; flagged rows are excluded from the fit.
    pub flagged: bool,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub problem: String,
    pub algo: String,
    pub seeds: usize,
    pub rows: Vec<ScalingRow>,
    /// Fit of `ln(iterations)` against `ln(1/ε)` over unflagged rows.
    pub fit: Option<LineFit>,
}

impl ScalingTable {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

fn check_eps_list(eps_list: &[f64]) -> Result<()> {
    if eps_list.len() < 3 {
        return Err(BenchError::InvalidArgument(format!(
            "eps_list needs at least 3 values, got {}",
            eps_list.len()
        )));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(BenchError::InvalidArgument("eps_list values must be positive".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(BenchError::InvalidArgument(
            "eps_list must be strictly decreasing".into(),
        ));
    }
    Ok(())
}

/// Median iterations to reach `‖∇U‖ ≤ ε` for each `ε`, over seeds
/// `base.seed .. base.seed + seeds`, and the fitted power law.
pub fn scaling_study(base: &ExperimentConfig, eps_list: &[f64], seeds: usize) -> Result<ScalingTable> {
    check_eps_list(eps_list)?;
    let problem = base.problem_instance()?;
    for &eps in eps_list {
        ExperimentConfig { eps, ..base.clone() }
            .validate()
            .map_err(|e| BenchError::Config(e.violations))?;
    }
    scaling_study_on(&problem, base, eps_list, seeds)
}

/// [`scaling_study`] on an explicit problem instance (the config's problem
/// string is used only for labels).
pub fn scaling_study_on(
    problem: &ProblemInstance,
    base: &ExperimentConfig,
    eps_list: &[f64],
    seeds: usize,
) -> Result<ScalingTable> {
    check_eps_list(eps_list)?;
    if seeds == 0 {
        return Err(BenchError::InvalidArgument("seeds must be at least 1".into()));
    }
    let rows: Vec<ScalingRow> = eps_list
        .iter()
        .map(|&eps| {
            let cfg = ExperimentConfig { eps, ..base.clone() };
            let runs: Vec<_> = (0..seeds as u64)
                .into_par_iter()
                .map(|k| run_single_with(&cfg, problem, base.seed + k, Some(eps)))
                .collect();
            let mut flagged = false;
            let mut errors = Vec::new();
            let iterations: Vec<Option<usize>> = runs
                .iter()
                .map(|run| match &run.result {
                    Some(r) if r.termination == Termination::GradientBelowThreshold => Some(r.iterations()),
                    Some(r) => {
                        flagged = true;
                        errors.push(format!("seed {}: terminated with {}", run.seed, r.termination.as_str()));
                        r.first_hit(eps)
                    }
                    None => {
                        flagged = true;
                        errors.push(format!(
                            "seed {}: {}",
                            run.seed,
                            run.report.error.clone().unwrap_or_default()
                        ));
                        None
                    }
                })
                .collect();
            let mut reached: Vec<f64> = iterations.iter().flatten().map(|&n| n as f64).collect();
            let median_iterations = (!reached.is_empty()).then(|| median(&mut reached));
            if flagged {
                log::warn!("eps = {eps:e} flagged: {}", errors.join("; "));
            }
            ScalingRow {
                eps,
                iterations,
                median_iterations,
                flagged,
                errors,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| !r.flagged)
        .filter_map(|r| {
            r.median_iterations
                .filter(|m| *m > 0.0)
                .map(|m| ((1.0 / r.eps).ln(), m.ln()))
        })
        .unzip();
    Ok(ScalingTable {
        problem: base.problem.clone(),
        algo: base.algo.as_str().to_string(),
        seeds,
        rows,
        fit: fit_line(&xs, &ys),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use nalgebra::DMatrix;
    use psca::problems::make_quadratic;
    use psca::Vector;

    #[test]
    fn rejects_short_or_unsorted_eps_list() {
        let cfg = parse_config(["--algo", "gd"]).unwrap();
        assert!(matches!(
            scaling_study(&cfg, &[1e-1, 1e-2], 1),
            Err(BenchError::InvalidArgument(_))
        ));
        assert!(matches!(
            scaling_study(&cfg, &[1e-2, 1e-1, 1e-3], 1),
            Err(BenchError::InvalidArgument(_))
        ));
    }

    #[test]
    fn gd_on_diagonal_quadratic_matches_geometric_decay() {
        // With eta = 1/L1 = 1 the unit-curvature coordinate is solved in one
        // step; afterwards ‖∇U‖ = 0.1·0.9^t.
        let p = make_quadratic(
            DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.1])),
            Vector::zeros(2),
        )
        .unwrap();
        let cfg = parse_config(["--algo", "gd", "--problem", "quadratic:d=2", "--max-iters", "10000"]).unwrap();
        let eps_list = [1e-2, 1e-4, 1e-6, 1e-8];
        let table = scaling_study_on(&p, &cfg, &eps_list, 2).unwrap();
        for row in &table.rows {
            let closed = (0.1 / row.eps).ln() / (0.9f64).ln().abs();
            let got = row.median_iterations.unwrap();
            assert!(!row.flagged);
            assert!((got - closed).abs() <= 1.0, "eps {}: {got} vs {closed}", row.eps);
        }
        // Linear convergence: iterations grow like ln(1/ε), far below slope 1.
        assert!(table.slope().unwrap() < 1.0);
    }

    #[test]
    fn max_iters_rows_are_flagged_and_excluded() {
        let p = make_quadratic(
            DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 0.1])),
            Vector::zeros(2),
        )
        .unwrap();
        let cfg = parse_config(["--algo", "gd", "--problem", "quadratic:d=2", "--max-iters", "100"]).unwrap();
        let table = scaling_study_on(&p, &cfg, &[1e-2, 1e-6, 1e-8], 1).unwrap();
        assert!(!table.rows[0].flagged);
        assert!(table.rows[1].flagged && table.rows[2].flagged);
        assert!(table.fit.is_none());
    }
}
