use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problems::Objective;

/// Which window length to use for the post-perturbation escape window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    /// `t_th = ⌈(χ/c²)·L1/√(L2·ε)⌉`, the length the convergence proof accounts for.
    #[default]
    Proof,
    /// `t_th = ⌈(1−s)·χ·L1/(c²·√(ε·L2))⌉`, as written in the algorithm listing.
    Listing,
}

/// User-facing inputs from which [`PscaParams`] are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PscaInputs {
    pub eps: f64,
    pub delta: f64,
    pub c: f64,
    pub s: f64,
    /// Upper bound on `U(x0) − U*`.
    pub delta_u: f64,
    pub max_iters: usize,
    pub window: WindowRule,
}

impl PscaInputs {
    pub fn new(eps: f64, delta: f64, delta_u: f64) -> Self {
        Self {
            eps,
            delta,
            c: 1.0,
            s: 0.5,
            delta_u,
            max_iters: 100_000,
            window: WindowRule::Proof,
        }
    }
}

/// Fully derived perturbed-SCA configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PscaParams {
    pub eps: f64,
    pub delta: f64,
    pub c: f64,
    pub s: f64,
    pub delta_u: f64,
    pub chi: f64,
    pub eta: f64,
    /// Perturbation radius.
    pub r: f64,
    pub g_th: f64,
    pub f_th: f64,
    pub t_th: u64,
    pub max_iters: usize,
    pub window: WindowRule,
    /// Dimension and constants the parameters were derived for.
    pub dim: usize,
    pub l1: f64,
    pub l2: f64,
}

/// Hessian-Lipschitz constant used in parameter formulas.
///
/// A constant Hessian is Lipschitz with any modulus; `L2 = 0` would make the
/// thresholds degenerate, so `L1` stands in for it.
pub fn effective_l2(obj: &dyn Objective) -> f64 {
    let c = obj.constants();
    if c.l2 > 0.0 {
        c.l2
    } else {
        c.l1
    }
}

/// `χ = 3·max{log(d·L1·Δ_U/(c·ε²·δ)), 4}`.
pub fn chi(dim: usize, l1: f64, delta_u: f64, c: f64, eps: f64, delta: f64) -> f64 {
    let log_term = (dim as f64 * l1 * delta_u / (c * eps * eps * delta)).ln();
    3.0 * log_term.max(4.0)
}

/// Derives the perturbation, threshold and window parameters.
///
/// Preconditions are checked, never clamped: `0 < ε ≤ L1²/L2`, `0 < δ < 1`,
/// `0 < c ≤ 1`, `0 < s < 1`, `Δ_U > 0`.
pub fn derive_params(inputs: &PscaInputs, obj: &dyn Objective) -> Result<PscaParams> {
    let PscaInputs {
        eps,
        delta,
        c,
        s,
        delta_u,
        max_iters,
        window,
    } = *inputs;
    let l1 = obj.constants().l1;
    let l2 = effective_l2(obj);
    let d = obj.dim();

    if !(eps > 0.0) || !eps.is_finite() {
        return Err(invalid(format!("eps must satisfy 0 < eps <= L1^2/L2, got {eps}")));
    }
    if eps > l1 * l1 / l2 {
        return Err(Error::HypothesisViolated(format!(
            "eps must satisfy 0 < eps <= L1^2/L2 = {:.6e}, got {eps}",
            l1 * l1 / l2
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must satisfy 0 < delta < 1, got {delta}")));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(invalid(format!("c must satisfy 0 < c <= 1, got {c}")));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("s must satisfy 0 < s < 1, got {s}")));
    }
    if !(delta_u > 0.0) || !delta_u.is_finite() {
        return Err(invalid(format!("delta_U must be > 0, got {delta_u}")));
    }
    if max_iters == 0 {
        return Err(invalid("max_iters must be positive"));
    }

    let chi = chi(d, l1, delta_u, c, eps, delta);
    let chi2 = chi * chi;
    let window_len = match window {
        WindowRule::Proof => (chi / (c * c)) * l1 / (l2 * eps).sqrt(),
        WindowRule::Listing => (1.0 - s) * chi * l1 / (c * c * (eps * l2).sqrt()),
    };
    let t_th = window_len.ceil().max(1.0);
    if !t_th.is_finite() || t_th > u64::MAX as f64 {
        return Err(invalid(format!(
            "escape window length {window_len} is not representable"
        )));
    }
    Ok(PscaParams {
        eps,
        delta,
        c,
        s,
        delta_u,
        chi,
        eta: c / l1,
        r: eps * c.sqrt() / (l1 * chi2),
        g_th: eps * c.sqrt() / chi2,
        f_th: (c / (chi2 * chi)) * (eps.powi(3) / l2).sqrt(),
        t_th: t_th as u64,
        max_iters,
        window,
        dim: d,
        l1,
        l2,
    })
}

/// Curvature threshold, condition number and the step-count scales of the
/// escape analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticScales {
    /// `γ = √(L2·ε)`.
    pub gamma: f64,
    /// `κ = L1/γ`.
    pub kappa: f64,
    pub f_scale: f64,
    pub g_scale: f64,
    pub l_scale: f64,
    pub t_scale: f64,
    /// Error bound `𝒟 = L0·(1 + 1/C)`; absent when `L0` is not declared.
    pub error_bound: Option<f64>,
    /// `c³·16·L2·𝒟³ − s·f_th`; zero when `c` follows the proof's selection rule.
    pub c_rule_residual: Option<f64>,
}

pub fn derive_scales(params: &PscaParams, obj: &dyn Objective, c_modulus: f64) -> DiagnosticScales {
    let l1 = params.l1;
    let l2 = params.l2;
    let eta = params.eta;
    let gamma = (l2 * params.eps).sqrt();
    let kappa = l1 / gamma;
    let log_term = (params.dim as f64 * kappa / params.delta).ln();
    let sqrt_eta_l1 = (eta * l1).sqrt();
    let error_bound = obj.constants().l0.map(|l0| l0 * (1.0 + 1.0 / c_modulus));
    DiagnosticScales {
        gamma,
        kappa,
        f_scale: (eta * l1 / (l2 * l2)) * gamma.powi(3) / log_term.powi(3),
        g_scale: (sqrt_eta_l1 / l2) * gamma * gamma / (log_term * log_term),
        l_scale: sqrt_eta_l1 * (gamma / l2) / log_term,
        t_scale: log_term / (eta * gamma),
        error_bound,
        c_rule_residual: error_bound.map(|dd| params.c.powi(3) * 16.0 * l2 * dd.powi(3) - params.s * params.f_th),
    }
}

/// `η′ = ηC − η²L1/2`, the guaranteed decrease per unit squared step.
pub fn descent_rate(eta: f64, c_modulus: f64, l1: f64) -> f64 {
    eta * c_modulus - eta * eta * l1 / 2.0
}
