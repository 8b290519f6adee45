use log::warn;

use crate::error::{invalid, Result};
use crate::numerics::{sample_uniform_ball, RngStream, Vector};
use crate::problems::Objective;
use crate::surrogates::SurrogateSpec;

use super::params::{descent_rate, PscaParams};
use super::step::{step_from, Direction};
use super::{Event, IterateRecord, RunResult, Termination};

/// Bookkeeping for the most recent perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub t_noise: i64,
    pub x_tilde: Option<Vector>,
    pub f_tilde: Option<f64>,
}

impl PerturbationState {
    pub fn new(t_th: u64) -> Self {
        Self {
            t_noise: -(t_th as i64) - 1,
            x_tilde: None,
            f_tilde: None,
        }
    }

    fn since_noise(&self, t: usize) -> i64 {
        t as i64 - self.t_noise
    }
}

/// Perturbs `x_t` when the gradient is small and the last perturbation is
/// more than `t_th` iterations old. Returns the (possibly) moved point, the
/// updated state, the perturbation norm and whether a perturbation happened.
pub fn maybe_perturb(
    params: &PscaParams,
    state: &PerturbationState,
    x_t: &Vector,
    f_t: f64,
    grad_norm: f64,
    t: usize,
    rng: &mut RngStream,
) -> Result<(Vector, PerturbationState, Option<f64>)> {
    if grad_norm <= params.g_th && state.since_noise(t) > params.t_th as i64 {
        let xi = sample_uniform_ball(x_t.len(), params.r, rng)?;
        let xi_norm = xi.norm();
        let next = PerturbationState {
            t_noise: t as i64,
            x_tilde: Some(x_t.clone()),
            f_tilde: Some(f_t),
        };
        Ok((x_t + xi, next, Some(xi_norm)))
    } else {
        Ok((x_t.clone(), state.clone(), None))
    }
}

/// Returns `x̃` when the escape window has just closed without the required
/// decrease `U(x_t) − U(x̃) ≤ −(1−s)·f_th`.
pub fn check_termination(params: &PscaParams, state: &PerturbationState, f_t: f64, t: usize) -> Option<Vector> {
    if state.since_noise(t) != params.t_th as i64 {
        return None;
    }
    let (x_tilde, f_tilde) = (state.x_tilde.as_ref()?, state.f_tilde?);
    (f_t - f_tilde > -(1.0 - params.s) * params.f_th).then(|| x_tilde.clone())
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Keep every iterate in [`RunResult::iterates`].
    pub record_iterates: bool,
    /// Stop as soon as `‖∇U(x_t)‖` falls to this level.
    pub stop_at_grad: Option<f64>,
}

struct Perturb<'a> {
    params: &'a PscaParams,
    rng: &'a mut RngStream,
}

#[allow(clippy::too_many_arguments)]
fn drive(
    obj: &dyn Objective,
    dir: Direction<'_>,
    eta: f64,
    mut perturb: Option<Perturb<'_>>,
    stop_at_grad: Option<f64>,
    max_iters: usize,
    x0: &Vector,
    opts: &RunOptions,
) -> Result<RunResult> {
    if x0.len() != obj.dim() {
        return Err(invalid(format!(
            "x0 has dimension {}, objective {}",
            x0.len(),
            obj.dim()
        )));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("step size must satisfy 0 < eta <= 1, got {eta}")));
    }
    let region = obj.region();
    if !region.contains(x0) {
        return Err(invalid(format!(
            "x0 lies outside the valid region (norm {:.6e} > {:.6e})",
            region.measure(x0),
            region.radius
        )));
    }
    let l1 = obj.constants().l1;
    let modulus = dir.modulus();
    let monitor = if eta < 2.0 * modulus / l1 {
        Some(descent_rate(eta, modulus, l1))
    } else {
        warn!(
            "eta = {eta} >= 2C/L1 = {}: descent monitor disabled",
            2.0 * modulus / l1
        );
        None
    };

    let seed = perturb.as_ref().map(|p| p.rng.seed());
    let mut state = PerturbationState::new(perturb.as_ref().map_or(0, |p| p.params.t_th));
    let mut records = Vec::new();
    let mut iterates = opts.record_iterates.then(Vec::new);
    let mut perturbation_count = 0;
    let mut x = x0.clone();
    let mut f = obj.value(&x);

    let finish = |records: Vec<IterateRecord>,
                  iterates: Option<Vec<Vector>>,
                  termination,
                  x_out: Vector,
                  f_out: f64,
                  perturbation_count,
                  window_decrement| RunResult {
        records,
        termination,
        x_out,
        f_out,
        perturbation_count,
        seed,
        window_decrement,
        descent_rate: monitor,
        iterates,
    };

    let mut t = 0usize;
    loop {
        let mut grad = obj.gradient(&x);
        let mut grad_norm = grad.norm();
        let mut rec = IterateRecord::at(t, f, grad_norm);

        if let Some(p) = perturb.as_mut() {
            let (moved, next, xi_norm) = maybe_perturb(p.params, &state, &x, f, grad_norm, t, p.rng)?;
            if let Some(xi_norm) = xi_norm {
                state = next;
                perturbation_count += 1;
                x = moved;
                f = obj.value(&x);
                grad = obj.gradient(&x);
                grad_norm = grad.norm();
                rec = IterateRecord::at(t, f, grad_norm);
                rec.perturbed = true;
                rec.perturbation_norm = Some(xi_norm);
                rec.event = Event::Perturbed;
            }
        }
        if let Some(it) = iterates.as_mut() {
            it.push(x.clone());
        }
        if !region.contains(&x) {
            rec.event = Event::Terminated(Termination::LeftValidRegion);
            records.push(rec);
            warn!("iterate left the valid region at t = {t}");
            let f_out = f;
            return Ok(finish(
                records,
                iterates,
                Termination::LeftValidRegion,
                x,
                f_out,
                perturbation_count,
                None,
            ));
        }

        if let Some(p) = perturb.as_ref() {
            if let Some(x_tilde) = check_termination(p.params, &state, f, t) {
                let f_tilde = state.f_tilde.expect("x_tilde implies f_tilde");
                rec.event = Event::Terminated(Termination::ReturnedXtilde);
                records.push(rec);
                return Ok(finish(
                    records,
                    iterates,
                    Termination::ReturnedXtilde,
                    x_tilde,
                    f_tilde,
                    perturbation_count,
                    Some(f - f_tilde),
                ));
            }
        }
        if stop_at_grad.is_some_and(|g| grad_norm <= g) {
            rec.event = Event::Terminated(Termination::GradientBelowThreshold);
            records.push(rec);
            return Ok(finish(
                records,
                iterates,
                Termination::GradientBelowThreshold,
                x,
                f,
                perturbation_count,
                None,
            ));
        }
        if t == max_iters {
            rec.event = Event::Terminated(Termination::MaxIters);
            records.push(rec);
            return Ok(finish(
                records,
                iterates,
                Termination::MaxIters,
                x,
                f,
                perturbation_count,
                None,
            ));
        }

        let out = step_from(obj, &dir, &x, f, &grad, eta)?;
        let f_next = obj.value(&out.x_next);
        rec.step_norm = out.step_norm;
        rec.err_norm = out.error.norm();
        rec.inner_iters = out.inner.iterations;
        rec.inner_residual = out.inner.residual;
        rec.inner_tol = out.inner.tolerance;
        rec.alignment = out.alignment;
        rec.f_next = Some(f_next);
        if let Some(rate) = monitor {
            let slack = 1e-9 * (1.0 + f.abs()) + eta * out.inner.tolerance * out.step_norm;
            rec.descent = Some(f_next <= f - rate * out.step_norm * out.step_norm + slack);
        }
        records.push(rec);
        x = out.x_next;
        f = f_next;
        t += 1;
    }
}

/// Successive convex approximation: stops at `‖∇U(x_t)‖ ≤ g_th` or after
/// `max_iters` steps.
pub fn run_sca(
    obj: &dyn Objective,
    spec: &SurrogateSpec,
    eta: f64,
    g_th: f64,
    max_iters: usize,
    x0: &Vector,
) -> Result<RunResult> {
    run_sca_with(obj, spec, eta, g_th, max_iters, x0, &RunOptions::default())
}

/// [`run_sca`] with options; `opts.stop_at_grad` is ignored in favour of `g_th`.
pub fn run_sca_with(
    obj: &dyn Objective,
    spec: &SurrogateSpec,
    eta: f64,
    g_th: f64,
    max_iters: usize,
    x0: &Vector,
    opts: &RunOptions,
) -> Result<RunResult> {
    spec.validate()?;
    drive(
        obj,
        Direction::Surrogate(spec),
        eta,
        None,
        Some(g_th),
        max_iters,
        x0,
        opts,
    )
}

/// Gradient descent with the same bookkeeping as [`run_sca`].
pub fn run_gd(obj: &dyn Objective, eta: f64, g_th: f64, max_iters: usize, x0: &Vector) -> Result<RunResult> {
    run_gd_with(obj, eta, g_th, max_iters, x0, &RunOptions::default())
}

pub fn run_gd_with(
    obj: &dyn Objective,
    eta: f64,
    g_th: f64,
    max_iters: usize,
    x0: &Vector,
    opts: &RunOptions,
) -> Result<RunResult> {
    drive(obj, Direction::Gradient, eta, None, Some(g_th), max_iters, x0, opts)
}

/// Perturbed SCA: perturb near first-order stationary points, return the
/// pre-perturbation point when an escape window ends without enough decrease.
pub fn run_psca(
    obj: &dyn Objective,
    spec: &SurrogateSpec,
    params: &PscaParams,
    x0: &Vector,
    rng: &mut RngStream,
) -> Result<RunResult> {
    run_psca_with(obj, spec, params, x0, rng, &RunOptions::default())
}

pub fn run_psca_with(
    obj: &dyn Objective,
    spec: &SurrogateSpec,
    params: &PscaParams,
    x0: &Vector,
    rng: &mut RngStream,
    opts: &RunOptions,
) -> Result<RunResult> {
    spec.validate()?;
    check_params(params, obj)?;
    drive(
        obj,
        Direction::Surrogate(spec),
        params.eta,
        Some(Perturb { params, rng }),
        opts.stop_at_grad,
        params.max_iters,
        x0,
        opts,
    )
}

/// Perturbed gradient descent, identical to [`run_psca`] with `x̂ = x_t − ∇U(x_t)`.
pub fn run_pgd(obj: &dyn Objective, params: &PscaParams, x0: &Vector, rng: &mut RngStream) -> Result<RunResult> {
    run_pgd_with(obj, params, x0, rng, &RunOptions::default())
}

pub fn run_pgd_with(
    obj: &dyn Objective,
    params: &PscaParams,
    x0: &Vector,
    rng: &mut RngStream,
    opts: &RunOptions,
) -> Result<RunResult> {
    check_params(params, obj)?;
    drive(
        obj,
        Direction::Gradient,
        params.eta,
        Some(Perturb { params, rng }),
        opts.stop_at_grad,
        params.max_iters,
        x0,
        opts,
    )
}

fn check_params(params: &PscaParams, obj: &dyn Objective) -> Result<()> {
    if params.dim != obj.dim() {
        return Err(invalid(format!(
            "parameters derived for dimension {}, objective has {}",
            params.dim,
            obj.dim()
        )));
    }
    Ok(())
}
