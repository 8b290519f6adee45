//! Experiment harness for the psca optimizers: configuration, seeded sweeps,
//! trajectory CSVs, JSON reports and the ε-scaling study.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod report;
pub mod scaling;
pub mod stats;

pub use config::{parse_config, Algo, ConfigError, ExperimentConfig, RunArgs};
pub use experiment::{run_experiment, run_single, ExperimentOutput, SingleRun};
pub use report::{AggregateReport, Report, TrajectoryRow};
pub use scaling::{scaling_study, ScalingRow, ScalingTable};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),
    #[error(transparent)]
    Core(#[from] psca::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, BenchError>;
