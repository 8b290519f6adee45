use crate::error::{invalid, Error, Result};
use crate::numerics::Vector;
use crate::problems::Objective;
use crate::surrogates::{build_surrogate_with, minimize_surrogate, InnerReport, SurrogateSpec};

use super::params::descent_rate;
use super::IterateRecord;

/// Everything one SCA step produces.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub x_next: Vector,
    pub x_hat: Vector,
    /// `e_t = (x_t − x̂) − ∇U(x_t)`.
    pub error: Vector,
    pub step_norm: f64,
    pub alignment: f64,
    pub inner: InnerReport,
}

/// `e_t = (x_t − x̂) − ∇U(x_t)`: the gradient error that turns the SCA update
/// into `x_{t+1} = x_t − η(∇U(x_t) + e_t)`.
pub fn gradient_error(x_t: &Vector, x_hat: &Vector, grad: &Vector) -> Result<Vector> {
    if x_t.len() != x_hat.len() || x_t.len() != grad.len() {
        return Err(invalid(format!(
            "dimension mismatch: x_t {}, x_hat {}, grad {}",
            x_t.len(),
            x_hat.len(),
            grad.len()
        )));
    }
    Ok((x_t - x_hat) - grad)
}

/// Descent check `f_next ≤ f_t − η′·‖x̂ − x_t‖² + slack`, with
/// `η′ = ηC − η²L1/2`. Requires `η < 2C/L1`.
pub fn descent_check(f_t: f64, f_next: f64, step_norm: f64, eta: f64, c: f64, l1: f64, slack: f64) -> Result<bool> {
    if !(eta < 2.0 * c / l1) {
        return Err(Error::HypothesisViolated(format!(
            "descent check needs eta < 2C/L1 = {:.6e}, got {eta}",
            2.0 * c / l1
        )));
    }
    Ok(f_next <= f_t - descent_rate(eta, c, l1) * step_norm * step_norm + slack)
}

pub(crate) enum Direction<'a> {
    Surrogate(&'a SurrogateSpec),
    /// `x̂ = x_t − ∇U(x_t)`, the proximal model with `C = 1` in closed form.
    Gradient,
}

impl Direction<'_> {
    pub(crate) fn modulus(&self) -> f64 {
        match self {
            Direction::Surrogate(spec) => spec.c,
            Direction::Gradient => 1.0,
        }
    }
}

pub(crate) fn step_from(
    obj: &dyn Objective,
    dir: &Direction<'_>,
    x_t: &Vector,
    f_t: f64,
    grad: &Vector,
    eta: f64,
) -> Result<StepOutcome> {
    let (x_next, x_hat, inner) = match dir {
        Direction::Surrogate(spec) => {
            let s = build_surrogate_with(obj, x_t, f_t, grad.clone(), spec)?;
            let (x_hat, inner) = minimize_surrogate(&s, spec)?;
            let x_next = x_t + (&x_hat - x_t) * eta;
            (x_next, x_hat, inner)
        }
        Direction::Gradient => {
            let x_next = x_t - grad * eta;
            let x_hat = x_t - grad;
            let inner = InnerReport {
                iterations: 0,
                residual: 0.0,
                tolerance: 0.0,
            };
            (x_next, x_hat, inner)
        }
    };
    let error = gradient_error(x_t, &x_hat, grad)?;
    let dx = x_t - &x_hat;
    Ok(StepOutcome {
        step_norm: dx.norm(),
        alignment: dx.dot(grad),
        x_next,
        x_hat,
        error,
        inner,
    })
}

/// One SCA step `x_{t+1} = x_t + η(x̂(x_t) − x_t)`.
pub fn sca_step(obj: &dyn Objective, spec: &SurrogateSpec, x_t: &Vector, eta: f64) -> Result<(Vector, IterateRecord)> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("step size must satisfy 0 < eta <= 1, got {eta}")));
    }
    let region = obj.region();
    if !region.contains(x_t) {
        return Err(Error::LeftValidRegion {
            norm: region.measure(x_t),
            radius: region.radius,
        });
    }
    let f_t = obj.value(x_t);
    let grad = obj.gradient(x_t);
    let out = step_from(obj, &Direction::Surrogate(spec), x_t, f_t, &grad, eta)?;
    if !region.contains(&out.x_next) {
        return Err(Error::LeftValidRegion {
            norm: region.measure(&out.x_next),
            radius: region.radius,
        });
    }
    let mut rec = IterateRecord::at(0, f_t, grad.norm());
    rec.step_norm = out.step_norm;
    rec.err_norm = out.error.norm();
    rec.inner_iters = out.inner.iterations;
    rec.inner_residual = out.inner.residual;
    rec.inner_tol = out.inner.tolerance;
    rec.alignment = out.alignment;
    rec.f_next = Some(obj.value(&out.x_next));
    Ok((out.x_next, rec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::problems::{make_quadratic, make_rosenbrock, make_saddle_quartic};
    use nalgebra::DMatrix;

    fn half_norm_sq(d: usize) -> crate::problems::ProblemInstance {
        make_quadratic(DMatrix::identity(d, d), Vector::zeros(d)).unwrap()
    }

    #[test]
    fn proximal_unit_modulus_step() {
        let p = half_norm_sq(2);
        let x = Vector::from_vec(vec![1.0, 0.0]);
        let (xn, rec) = sca_step(p.objective.as_ref(), &SurrogateSpec::proximal(1.0), &x, 1.0).unwrap();
        assert_eq!(xn, Vector::zeros(2));
        assert_eq!(rec.err_norm, 0.0);
    }

    #[test]
    fn proximal_unit_modulus_is_gradient_step() {
        let mut rng = RngStream::new(8);
        let p = make_saddle_quartic(6).unwrap();
        let obj = p.objective.as_ref();
        for _ in 0..20 {
            let x = rng.uniform_box(6, 1.5);
            let eta = rng.uniform_range(0.01, 0.09);
            let (xn, rec) = sca_step(obj, &SurrogateSpec::proximal(1.0), &x, eta).unwrap();
            let gd = &x - obj.gradient(&x) * eta;
            assert!((xn - gd).amax() <= 1e-12);
            assert!(rec.err_norm <= 1e-12);
        }
    }

    #[test]
    fn gradient_error_values() {
        // C = 2 on ½‖x‖² from (1,0): x̂ = (0.5, 0).
        let x = Vector::from_vec(vec![1.0, 0.0]);
        let e = gradient_error(&x, &Vector::from_vec(vec![0.5, 0.0]), &x).unwrap();
        assert_eq!(e, Vector::from_vec(vec![-0.5, 0.0]));
        assert!(gradient_error(&x, &Vector::zeros(3), &x).is_err());
    }

    #[test]
    fn inexact_gradient_reconstruction() {
        let mut rng = RngStream::new(21);
        let p = make_rosenbrock(4).unwrap();
        let obj = p.objective.as_ref();
        for spec in [SurrogateSpec::proximal(3000.0), SurrogateSpec::quadratic_split(50.0)] {
            for _ in 0..10 {
                let x = rng.uniform_box(4, 1.0);
                let eta = 0.5;
                let g = obj.gradient(&x);
                let out = step_from(obj, &Direction::Surrogate(&spec), &x, obj.value(&x), &g, eta).unwrap();
                let via_error = &x - (&g + &out.error) * eta;
                assert!((via_error - &out.x_next).amax() <= 1e-12 * x.amax().max(1.0));
            }
        }
    }

    #[test]
    fn quadratic_split_newton_like_step() {
        let h = DMatrix::from_diagonal(&Vector::from_vec(vec![2.0, 1.0]));
        let p = make_quadratic(h.clone(), Vector::zeros(2)).unwrap();
        let spec = SurrogateSpec {
            relative_tol: false,
            inner_tol: 1e-12,
            ..SurrogateSpec::quadratic_split(0.01)
        };
        let x = Vector::from_vec(vec![1.0, 1.0]);
        let (xn, _) = sca_step(p.objective.as_ref(), &spec, &x, 1.0).unwrap();
        let q = h + DMatrix::identity(2, 2) * 0.01;
        let exact = &x - q.lu().solve(&p.objective.gradient(&x)).unwrap();
        assert!((xn - exact).norm() <= 1e-10);
    }

    #[test]
    fn descent_check_tight_cases() {
        assert!(descent_check(0.5, 0.125, 1.0, 0.5, 1.0, 1.0, 0.0).unwrap());
        assert!(descent_check(0.5, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0).unwrap());
        assert!(!descent_check(0.5, 0.126, 1.0, 0.5, 1.0, 1.0, 0.0).unwrap());
        assert!(matches!(
            descent_check(0.5, 0.0, 1.0, 2.0, 1.0, 1.0, 0.0),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn step_rejects_bad_eta_and_region_exit() {
        let p = make_saddle_quartic(2).unwrap();
        let x = Vector::from_vec(vec![0.5, 0.5]);
        assert!(sca_step(p.objective.as_ref(), &SurrogateSpec::proximal(1.0), &x, 1.5).is_err());
        // Tiny modulus overshoots the ‖x‖∞ ≤ 2 box.
        let err = sca_step(p.objective.as_ref(), &SurrogateSpec::proximal(0.01), &x, 1.0).unwrap_err();
        assert!(matches!(err, Error::LeftValidRegion { .. }));
    }
}
