//! Stationarity certificates: gradient norm plus the smallest Hessian
//! eigenvalue, estimated densely or matrix-free.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::drivers::{effective_l2, RunResult, Termination};
use crate::error::{invalid, Error, Result};
use crate::numerics::{RngStream, Vector};
use crate::problems::Objective;

/// Largest dimension for which the dense eigensolver is used.
pub const DENSE_MAX_DIM: usize = 200;
pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_MAX_ITERS: usize = 200_000;
const RESTART_SEED: u64 = 0x5eed_e16e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    MatrixFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    pub lambda: f64,
    pub vector: Vector,
    /// `‖∇²U(x)·v − λv‖`.
    pub residual: f64,
    pub method: EigenMethod,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    EpsSosp,
    EpsFospStrictSaddle,
    NotFosp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub grad_norm: f64,
    /// Not evaluated when the point is not first-order stationary.
    pub lambda_min: Option<f64>,
    pub lambda_min_residual: Option<f64>,
    pub eps: f64,
    /// `γ = √(L2·ε)`.
    pub gamma: f64,
    pub classification: Classification,
    pub method: Option<EigenMethod>,
}

/// Default stagnation tolerance for the matrix-free solver.
pub fn default_tol(obj: &dyn Objective) -> f64 {
    1e-8 * obj.constants().l1
}

/// Smallest eigenvalue of `∇²U(x)`: dense when a dense Hessian is available
/// and `d ≤ 200`, shifted power iteration otherwise.
pub fn min_eigenvalue(obj: &dyn Objective, x: &Vector, tol: f64, max_iters: usize) -> Result<EigenEstimate> {
    if obj.dim() <= DENSE_MAX_DIM {
        if let Some(est) = min_eigenvalue_dense(obj, x) {
            return Ok(est);
        }
    }
    min_eigenvalue_matrix_free(obj, x, tol, max_iters, DEFAULT_RESTARTS)
}

pub fn min_eigenvalue_dense(obj: &dyn Objective, x: &Vector) -> Option<EigenEstimate> {
    let h = obj.dense_hessian(x)?;
    let h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h.clone());
    let i = eig.eigenvalues.imin();
    let lambda = eig.eigenvalues[i];
    let v: Vector = eig.eigenvectors.column(i).into_owned();
    let residual = (&h * &v - &v * lambda).norm();
    Some(EigenEstimate {
        lambda,
        vector: v,
        residual,
        method: EigenMethod::Dense,
        iterations: 0,
    })
}

/// Power iteration on `σI − ∇²U(x)` with `σ = L1`, whose top eigenvalue is
/// `σ − λ_min`. Runs `restarts` times from different random starts and keeps
/// the smallest estimate.
pub fn min_eigenvalue_matrix_free(
    obj: &dyn Objective,
    x: &Vector,
    tol: f64,
    max_iters: usize,
    restarts: usize,
) -> Result<EigenEstimate> {
    if !(tol > 0.0) {
        return Err(invalid(format!("eigen tolerance must be positive, got {tol}")));
    }
    if max_iters == 0 || restarts == 0 {
        return Err(invalid("max_iters and restarts must be positive"));
    }
    let sigma = obj.constants().l1;
    let d = obj.dim();
    let base = RngStream::new(RESTART_SEED);
    let shifted = |v: &Vector| v * sigma - obj.hvp(x, v);

    let mut best: Option<EigenEstimate> = None;
    for k in 0..restarts {
        let mut rng = base.substream(k as u64);
        let mut v = rng.normal_vector(d).normalize();
        let mut av = shifted(&v);
        let mut rho = v.dot(&av);
        let mut iterations = 0;
        for it in 1..=max_iters {
            iterations = it;
            let n = av.norm();
            if n == 0.0 {
                break;
            }
            v = av / n;
            av = shifted(&v);
            let next = v.dot(&av);
            let change = (next - rho).abs();
            rho = next;
            if change <= tol {
                break;
            }
        }
        if rho < -tol {
            return Err(Error::ContractViolation(format!(
                "shifted operator has negative top Rayleigh quotient {rho:.6e}; \
                 declared L1 = {sigma} understates the Hessian norm"
            )));
        }
        let lambda = sigma - rho;
        let residual = (obj.hvp(x, &v) - &v * lambda).norm();
        let est = EigenEstimate {
            lambda,
            vector: v,
            residual,
            method: EigenMethod::MatrixFree,
            iterations,
        };
        if best.as_ref().is_none_or(|b| est.lambda < b.lambda) {
            best = Some(est);
        }
    }
    let best = best.expect("at least one restart");
    if best.iterations >= max_iters && best.residual > 100.0 * tol {
        return Err(Error::ConvergenceFailure {
            iterations: best.iterations,
            lambda: best.lambda,
            residual: best.residual,
        });
    }
    Ok(best)
}

/// Three-way classification from the gradient norm and the smallest eigenvalue.
pub fn classify_values(grad_norm: f64, lambda_min: Option<f64>, eps: f64, gamma: f64) -> Classification {
    if grad_norm > eps {
        return Classification::NotFosp;
    }
    match lambda_min {
        Some(l) if l >= -gamma => Classification::EpsSosp,
        _ => Classification::EpsFospStrictSaddle,
    }
}

pub fn classify(obj: &dyn Objective, x: &Vector, eps: f64) -> Result<Certificate> {
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let region = obj.region();
    if !region.contains(x) {
        return Err(Error::LeftValidRegion {
            norm: region.measure(x),
            radius: region.radius,
        });
    }
    let gamma = (effective_l2(obj) * eps).sqrt();
    let grad_norm = obj.gradient(x).norm();
    if grad_norm > eps {
        return Ok(Certificate {
            grad_norm,
            lambda_min: None,
            lambda_min_residual: None,
            eps,
            gamma,
            classification: Classification::NotFosp,
            method: None,
        });
    }
    let est = min_eigenvalue(obj, x, default_tol(obj), DEFAULT_MAX_ITERS)?;
    Ok(Certificate {
        grad_norm,
        lambda_min: Some(est.lambda),
        lambda_min_residual: Some(est.residual),
        eps,
        gamma,
        classification: classify_values(grad_norm, Some(est.lambda), eps, gamma),
        method: Some(est.method),
    })
}

/// Certifies the point a run returned.
pub fn certify_run(obj: &dyn Objective, result: &RunResult, eps: f64) -> Result<Certificate> {
    if result.termination == Termination::LeftValidRegion {
        return Err(invalid("cannot certify a run that left the valid region"));
    }
    classify(obj, &result.x_out, eps)
}
