//! SCA and perturbed SCA, with gradient-descent baselines.
//!
//! The SCA update `x_{t+1} = x_t + η(x̂ − x_t)` is also tracked as an inexact
//! gradient step `x_{t+1} = x_t − η(∇U(x_t) + e_t)`; every iterate record
//! carries `‖e_t‖`, the step length and the outcome of the per-step descent
//! check.

mod params;
mod run;
mod step;

use serde::{Deserialize, Serialize};

use crate::numerics::Vector;

pub use params::{
    chi, derive_params, derive_scales, descent_rate, effective_l2, DiagnosticScales, PscaInputs, PscaParams, WindowRule,
};
pub use run::{
    check_termination, maybe_perturb, run_gd, run_gd_with, run_pgd, run_pgd_with, run_psca, run_psca_with, run_sca,
    run_sca_with, PerturbationState, RunOptions,
};
pub use step::{descent_check, gradient_error, sca_step, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ReturnedXtilde,
    GradientBelowThreshold,
    MaxIters,
    LeftValidRegion,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ReturnedXtilde => "returned_xtilde",
            Termination::GradientBelowThreshold => "gradient_below_threshold",
            Termination::MaxIters => "max_iters",
            Termination::LeftValidRegion => "left_valid_region",
        }
    }
}

/// Tag attached to an iterate record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    #[default]
    None,
    Perturbed,
    Terminated(Termination),
}

impl Event {
    pub fn tag(&self) -> &'static str {
        match self {
            Event::None => "",
            Event::Perturbed => "perturb",
            Event::Terminated(t) => t.as_str(),
        }
    }
}

/// One iteration of a run. The final record of a run describes the iterate
/// at which the run stopped and carries no step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub t: usize,
    /// `U(x_t)`, after any perturbation at this iteration.
    pub f: f64,
    pub grad_norm: f64,
    /// `‖x̂(x_t) − x_t‖`.
    pub step_norm: f64,
    /// `‖e_t‖`.
    pub err_norm: f64,
    pub perturbed: bool,
    /// `‖ξ_t‖` for perturbed iterations.
    pub perturbation_norm: Option<f64>,
    pub inner_iters: usize,
    pub inner_residual: f64,
    pub inner_tol: f64,
    /// `(x_t − x̂)ᵀ∇U(x_t)`.
    pub alignment: f64,
    /// `U(x_{t+1})` before any perturbation at `t+1`.
    pub f_next: Option<f64>,
    /// Descent-lemma check for the step taken at `t`; `None` when no step was
    /// taken or the monitor is disabled.
    pub descent: Option<bool>,
    pub event: Event,
}

impl IterateRecord {
    pub(crate) fn at(t: usize, f: f64, grad_norm: f64) -> Self {
        Self {
            t,
            f,
            grad_norm,
            step_norm: 0.0,
            err_norm: 0.0,
            perturbed: false,
            perturbation_norm: None,
            inner_iters: 0,
            inner_residual: 0.0,
            inner_tol: 0.0,
            alignment: 0.0,
            f_next: None,
            descent: None,
            event: Event::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub records: Vec<IterateRecord>,
    pub termination: Termination,
    pub x_out: Vector,
    pub f_out: f64,
    pub perturbation_count: usize,
    pub seed: Option<u64>,
    /// `U(x_t) − U(x̃)` at the window check that ended the run.
    pub window_decrement: Option<f64>,
    /// `η′` used by the descent monitor, when enabled.
    pub descent_rate: Option<f64>,
    /// Iterates `x_0 … x_T`, when requested.
    pub iterates: Option<Vec<Vector>>,
}

impl RunResult {
    /// Number of steps taken.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map(|r| r.f).unwrap_or(f64::NAN)
    }

    pub fn descent_pass_count(&self) -> usize {
        self.records.iter().filter(|r| r.descent == Some(true)).count()
    }

    /// First iteration with `‖∇U(x_t)‖ ≤ eps`.
    pub fn first_hit(&self, eps: f64) -> Option<usize> {
        self.records.iter().find(|r| r.grad_norm <= eps).map(|r| r.t)
    }
}
