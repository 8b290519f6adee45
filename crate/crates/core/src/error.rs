use thiserror::Error;

/// Errors raised by the optimizers, problem constructors and certification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite objective value at coordinate {coordinate} (step {step})")]
    NumericDomain { coordinate: usize, step: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("surrogate kind `{kind}` is not supported for this objective: {reason}")]
    UnsupportedSurrogate { kind: &'static str, reason: String },

    #[error("inner solve failed after {iterations} iterations (residual {residual:.3e})")]
    InnerSolveFailure { iterations: usize, residual: f64 },

    #[error("iterate left the valid region (norm {norm:.6e} > radius {radius:.6e})")]
    LeftValidRegion { norm: f64, radius: f64 },

    #[error(
        "eigen solver did not converge after {iterations} iterations \
         (best lambda {lambda:.6e}, residual {residual:.3e})"
    )]
    ConvergenceFailure {
        iterations: usize,
        lambda: f64,
        residual: f64,
    },

    #[error("contract violation: {0}")]
    ContractViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
