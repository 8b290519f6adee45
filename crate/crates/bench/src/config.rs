use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use psca::drivers::{effective_l2, WindowRule};
use psca::problems::{ProblemInstance, ProblemSpec};
use psca::surrogates::{SurrogateKind, SurrogateSpec};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "PSCA_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "psca-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    Sca,
    Psca,
    Gd,
    Pgd,
}

impl Algo {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Sca => "sca",
            Algo::Psca => "psca",
            Algo::Gd => "gd",
            Algo::Pgd => "pgd",
        }
    }

    pub fn perturbed(&self) -> bool {
        matches!(self, Algo::Psca | Algo::Pgd)
    }

    pub fn uses_surrogate(&self) -> bool {
        matches!(self, Algo::Sca | Algo::Psca)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowArg {
    Proof,
    Listing,
}

/// Command-line flags for a run.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Problem address, e.g. `saddle_quartic:d=10`.
    #[arg(long, default_value = "saddle_quartic:d=2")]
    pub problem: String,
    #[arg(long, value_enum, default_value = "psca")]
    pub algo: Algo,
    /// Surrogate family: proximal_linear or quadratic_split.
    #[arg(long, default_value = "proximal_linear")]
    pub surrogate: String,
    /// Strong-convexity modulus C of the surrogate.
    #[arg(long = "modulus", default_value_t = 1.0)]
    pub modulus: f64,
    /// Inner tolerance, relative to max(1, |grad U|).
    #[arg(long, default_value_t = 1e-10)]
    pub inner_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub inner_max_iters: usize,
    /// Solve quadratic surrogates by Cholesky instead of inner descent.
    #[arg(long)]
    pub dense_solve: bool,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub s: f64,
    /// Upper bound on U(x0) - U*. Required when U* is unknown.
    #[arg(long = "delta-u", allow_negative_numbers = true)]
    pub delta_u: Option<f64>,
    /// Step size for sca/gd; defaults to c/L1.
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweep width: runs seeds seed, seed+1, ..., seed+seeds-1.
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: usize,
    /// Radius of the random offset added to the canonical start.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub init_radius: f64,
    #[arg(long, value_enum, default_value = "proof")]
    pub window: WindowArg,
    /// Output directory (default: $PSCA_OUT_DIR or ./psca-out).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Log lambda_min of the Hessian every k iterations.
    #[arg(long)]
    pub record_eigen_every: Option<usize>,
}

/// Validated experiment configuration, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub algo: Algo,
    pub surrogate: String,
    pub modulus: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub dense_solve: bool,
    pub eps: f64,
    pub delta: f64,
    pub c: f64,
    pub s: f64,
    pub delta_u: Option<f64>,
    pub eta: Option<f64>,
    pub seed: u64,
    pub seeds: Option<usize>,
    pub max_iters: usize,
    pub init_radius: f64,
    pub window: WindowRule,
    pub out_dir: PathBuf,
    pub record_eigen_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl ExperimentConfig {
    pub fn problem_instance(&self) -> psca::Result<ProblemInstance> {
        self.problem.parse::<ProblemSpec>()?.build()
    }

    pub fn surrogate_spec(&self) -> psca::Result<SurrogateSpec> {
        Ok(SurrogateSpec {
            kind: self.surrogate.parse::<SurrogateKind>()?,
            c: self.modulus,
            inner_tol: self.inner_tol,
            relative_tol: true,
            inner_max_iters: self.inner_max_iters,
            dense_solve: self.dense_solve,
        })
    }

    /// Step size for the unperturbed algorithms.
    pub fn step_size(&self, l1: f64) -> f64 {
        self.eta.unwrap_or(self.c / l1)
    }

    /// Modulus governing the descent monitor (`C = 1` for gradient steps).
    pub fn effective_modulus(&self) -> f64 {
        if self.algo.uses_surrogate() {
            self.modulus
        } else {
            1.0
        }
    }

    /// Checks every precondition and reports all violations at once.
    pub fn validate(&self) -> std::result::Result<ProblemInstance, ConfigError> {
        let mut v = Vec::new();
        let problem = match self.problem_instance() {
            Ok(p) => Some(p),
            Err(e) => {
                v.push(format!("problem `{}`: {e}", self.problem));
                None
            }
        };
        if let Err(e) = self.surrogate.parse::<SurrogateKind>() {
            v.push(e.to_string());
        }
        if !(self.modulus > 0.0) {
            v.push(format!("modulus C must satisfy C > 0, got {}", self.modulus));
        }
        if !(self.inner_tol > 0.0) {
            v.push(format!("inner_tol must satisfy inner_tol > 0, got {}", self.inner_tol));
        }
        if self.inner_max_iters == 0 {
            v.push("inner_max_iters must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            v.push(format!("delta must satisfy 0 < delta < 1, got {}", self.delta));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            v.push(format!("c must satisfy 0 < c <= 1, got {}", self.c));
        } else if !(self.c < 2.0 * self.effective_modulus()) {
            v.push(format!(
                "c must satisfy c < 2C = {} so that eta = c/L1 < 2C/L1",
                2.0 * self.effective_modulus()
            ));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            v.push(format!("s must satisfy 0 < s < 1, got {}", self.s));
        }
        if self.max_iters == 0 {
            v.push("max_iters must be positive".into());
        }
        if self.seeds == Some(0) {
            v.push("seeds must be at least 1".into());
        }
        if self.record_eigen_every == Some(0) {
            v.push("record_eigen_every must be positive".into());
        }
        if !(self.init_radius >= 0.0) || !self.init_radius.is_finite() {
            v.push(format!(
                "init_radius must satisfy init_radius >= 0, got {}",
                self.init_radius
            ));
        }
        if let Some(eta) = self.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                v.push(format!("eta must satisfy 0 < eta <= 1, got {eta}"));
            }
        }
        if let Some(du) = self.delta_u {
            if !(du > 0.0) {
                v.push(format!("delta_U must satisfy delta_U > 0, got {du}"));
            }
        }
        match &problem {
            Some(p) => {
                let obj = p.objective.as_ref();
                let l1 = obj.constants().l1;
                let bound = l1 * l1 / effective_l2(obj);
                if !(self.eps > 0.0 && self.eps <= bound) {
                    v.push(format!(
                        "eps must satisfy 0 < eps <= L1^2/L2 (= {bound:.6e}), got {}",
                        self.eps
                    ));
                }
                if self.algo.perturbed() && self.delta_u.is_none() && obj.f_star().is_none() {
                    v.push(format!(
                        "delta_U (--delta-u) is required for {}: problem `{}` has no known U*",
                        self.algo.as_str(),
                        self.problem
                    ));
                }
                if self.algo == Algo::Sca || self.algo == Algo::Gd {
                    let eta = self.step_size(l1);
                    if !(eta > 0.0 && eta <= 1.0) {
                        v.push(format!("eta = c/L1 must satisfy 0 < eta <= 1, got {eta}"));
                    }
                }
                if self.init_radius == 0.0 && !obj.region().contains(&p.canonical_start) {
                    v.push("canonical start lies outside the valid region".into());
                }
            }
            None => {
                if !(self.eps > 0.0) {
                    v.push(format!("eps must satisfy 0 < eps <= L1^2/L2, got {}", self.eps));
                }
            }
        }
        if v.is_empty() {
            Ok(problem.expect("no violations implies problem resolved"))
        } else {
            Err(ConfigError { violations: v })
        }
    }
}

impl From<RunArgs> for ExperimentConfig {
    fn from(a: RunArgs) -> Self {
        let out_dir = a
            .out_dir
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Self {
            problem: a.problem,
            algo: a.algo,
            surrogate: a.surrogate,
            modulus: a.modulus,
            inner_tol: a.inner_tol,
            inner_max_iters: a.inner_max_iters,
            dense_solve: a.dense_solve,
            eps: a.eps,
            delta: a.delta,
            c: a.c,
            s: a.s,
            delta_u: a.delta_u,
            eta: a.eta,
            seed: a.seed,
            seeds: a.seeds,
            max_iters: a.max_iters,
            init_radius: a.init_radius,
            window: match a.window {
                WindowArg::Proof => WindowRule::Proof,
                WindowArg::Listing => WindowRule::Listing,
            },
            out_dir,
            record_eigen_every: a.record_eigen_every,
        }
    }
}

#[derive(clap::Parser)]
struct Wrapper {
    #[command(flatten)]
    args: RunArgs,
}

/// Parses run flags (without the program name) into a validated config.
pub fn parse_config<I, S>(flags: I) -> std::result::Result<ExperimentConfig, ConfigError>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let argv = std::iter::once(std::ffi::OsString::from("psca-bench")).chain(flags.into_iter().map(Into::into));
    let w = Wrapper::try_parse_from(argv).map_err(|e| ConfigError {
        violations: vec![e.to_string().trim().to_string()],
    })?;
    let cfg = ExperimentConfig::from(w.args);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn happy_path_defaults() {
        let cfg = parse_config(split(
            "--problem saddle_quartic:d=10 --algo psca --eps 0.01 --delta 0.1 --seed 7",
        ))
        .unwrap();
        assert_eq!(cfg.c, 1.0);
        assert_eq!(cfg.s, 0.5);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.algo, Algo::Psca);
    }

    #[test]
    fn eps_zero_names_inequality() {
        let err = parse_config(split("--eps 0")).unwrap_err();
        assert!(
            err.violations
                .iter()
                .any(|v| v.starts_with("eps must satisfy 0 < eps <= L1^2/L2")),
            "{:?}",
            err.violations
        );
    }

    #[test]
    fn missing_delta_u_for_unknown_optimum() {
        let err = parse_config(split("--problem quadratic:d=4,spectrum=saddle --algo psca")).unwrap_err();
        assert!(
            err.violations.iter().any(|v| v.contains("delta_U")),
            "{:?}",
            err.violations
        );
        assert!(parse_config(split("--problem quadratic:d=4,spectrum=saddle --algo psca --delta-u 1")).is_ok());
        assert!(parse_config(split("--problem quadratic:d=4,spectrum=saddle --algo sca")).is_ok());
    }

    #[test]
    fn all_violations_reported() {
        let err = parse_config(split("--problem nope --algo psca --eps 0 --delta 2 --c 3 --s 1")).unwrap_err();
        assert!(err.violations.len() >= 5, "{:?}", err.violations);
        assert!(err.violations[0].contains("unknown problem"));
    }

    #[test]
    fn c_must_stay_below_twice_modulus() {
        let err = parse_config(split("--algo psca --modulus 0.4 --c 0.9")).unwrap_err();
        assert!(
            err.violations.iter().any(|v| v.contains("c < 2C")),
            "{:?}",
            err.violations
        );
    }
}
