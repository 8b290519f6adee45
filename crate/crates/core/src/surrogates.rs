//! Strongly convex local models `Ũ(x; y)` of an objective and their minimisation.
//!
//! Every model matches the objective's value and gradient at the anchor `y`
//! and is `C`-strongly convex, so its minimiser is unique and the SCA step
//! `x̂ − y` is a descent direction.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::Vector;
use crate::problems::Objective;

/// A user-supplied convex model, already anchored.
pub trait ConvexModel: Send + Sync {
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    /// Lipschitz constant of the model gradient, used as inner step size.
    fn smoothness(&self) -> Option<f64> {
        None
    }
    fn minimizer(&self) -> Option<Vector> {
        None
    }
}

/// Factory for custom surrogate families.
pub trait SurrogateFamily: Send + Sync {
    fn name(&self) -> &str;
    /// Builds a `c`-strongly convex model anchored at `y` whose gradient at
    /// `y` equals `grad_y`.
    fn build(&self, obj: &dyn Objective, y: &Vector, f_y: f64, grad_y: &Vector, c: f64)
        -> Result<Arc<dyn ConvexModel>>;
}

#[derive(Clone)]
pub enum SurrogateKind {
    /// `U(y) + ∇U(y)ᵀ(x−y) + (C/2)‖x−y‖²`.
    ProximalLinear,
    /// `U(y) + ∇U(y)ᵀ(x−y) + ½(x−y)ᵀ(H₊(y) + C·I)(x−y)` with `H₊` the PSD
    /// part of the Hessian. Needs a dense Hessian.
    QuadraticSplit,
    Custom(Arc<dyn SurrogateFamily>),
}

impl SurrogateKind {
    pub fn name(&self) -> &str {
        match self {
            SurrogateKind::ProximalLinear => "proximal_linear",
            SurrogateKind::QuadraticSplit => "quadratic_split",
            SurrogateKind::Custom(f) => f.name(),
        }
    }
}

impl fmt::Debug for SurrogateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SurrogateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proximal_linear" | "prox" => Ok(SurrogateKind::ProximalLinear),
            "quadratic_split" => Ok(SurrogateKind::QuadraticSplit),
            other => Err(invalid(format!(
                "unknown surrogate kind `{other}` (known: proximal_linear, quadratic_split)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SurrogateSpec {
    pub kind: SurrogateKind,
    /// Strong-convexity modulus `C`.
    pub c: f64,
    /// Inner tolerance on `‖∇Ũ(x̂; y)‖`.
    pub inner_tol: f64,
    /// When set, the effective tolerance is `inner_tol · max(1, ‖∇U(y)‖)`.
    pub relative_tol: bool,
    pub inner_max_iters: usize,
    /// Solve quadratic models exactly via Cholesky instead of inner descent.
    pub dense_solve: bool,
}

impl Default for SurrogateSpec {
    fn default() -> Self {
        Self {
            kind: SurrogateKind::ProximalLinear,
            c: 1.0,
            inner_tol: 1e-10,
            relative_tol: true,
            inner_max_iters: 100_000,
            dense_solve: false,
        }
    }
}

impl SurrogateSpec {
    pub fn proximal(c: f64) -> Self {
        Self { c, ..Self::default() }
    }

    pub fn quadratic_split(c: f64) -> Self {
        Self {
            kind: SurrogateKind::QuadraticSplit,
            c,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(invalid(format!("surrogate modulus C must be > 0, got {}", self.c)));
        }
        if !(self.inner_tol > 0.0) {
            return Err(invalid(format!("inner_tol must be > 0, got {}", self.inner_tol)));
        }
        if self.inner_max_iters == 0 {
            return Err(invalid("inner_max_iters must be positive"));
        }
        Ok(())
    }

    fn tolerance_at(&self, grad_norm: f64) -> f64 {
        if self.relative_tol {
            self.inner_tol * grad_norm.max(1.0)
        } else {
            self.inner_tol
        }
    }
}

#[derive(Clone)]
enum Model {
    ProximalLinear,
    Quadratic { hessian: DMatrix<f64> },
    Custom(Arc<dyn ConvexModel>),
}

/// A surrogate anchored at `y`.
#[derive(Clone)]
pub struct SurrogateAt {
    anchor: Vector,
    anchor_value: f64,
    anchor_gradient: Vector,
    modulus: f64,
    smoothness: Option<f64>,
    inner_tol: f64,
    model: Model,
    closed_form_minimizer: Option<Vector>,
}

impl fmt::Debug for SurrogateAt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SurrogateAt")
            .field("anchor", &self.anchor.as_slice())
            .field("modulus", &self.modulus)
            .field("smoothness", &self.smoothness)
            .field("inner_tol", &self.inner_tol)
            .field("closed_form", &self.closed_form_minimizer.is_some())
            .finish()
    }
}

impl SurrogateAt {
    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }

    /// Absolute tolerance the inner solve must reach.
    pub fn inner_tol(&self) -> f64 {
        self.inner_tol
    }

    pub fn closed_form_minimizer(&self) -> Option<&Vector> {
        self.closed_form_minimizer.as_ref()
    }

    /// Model Hessian, for quadratic models.
    pub fn model_hessian(&self) -> Option<&DMatrix<f64>> {
        match &self.model {
            Model::Quadratic { hessian } => Some(hessian),
            _ => None,
        }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let dx = x - &self.anchor;
        let lin = self.anchor_value + self.anchor_gradient.dot(&dx);
        match &self.model {
            Model::ProximalLinear => lin + 0.5 * self.modulus * dx.norm_squared(),
            Model::Quadratic { hessian } => lin + 0.5 * dx.dot(&(hessian * &dx)),
            Model::Custom(m) => m.value(x),
        }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        let dx = x - &self.anchor;
        match &self.model {
            Model::ProximalLinear => &self.anchor_gradient + dx * self.modulus,
            Model::Quadratic { hessian } => &self.anchor_gradient + hessian * dx,
            Model::Custom(m) => m.gradient(x),
        }
    }
}

/// Builds the surrogate of `obj` anchored at `y`.
pub fn build_surrogate(obj: &dyn Objective, y: &Vector, spec: &SurrogateSpec) -> Result<SurrogateAt> {
    let f_y = obj.value(y);
    let g_y = obj.gradient(y);
    build_surrogate_with(obj, y, f_y, g_y, spec)
}

/// As [`build_surrogate`], reusing an already evaluated `U(y)` and `∇U(y)`.
pub fn build_surrogate_with(
    obj: &dyn Objective,
    y: &Vector,
    f_y: f64,
    g_y: Vector,
    spec: &SurrogateSpec,
) -> Result<SurrogateAt> {
    spec.validate()?;
    let c = spec.c;
    let inner_tol = spec.tolerance_at(g_y.norm());
    let (model, smoothness, closed) = match &spec.kind {
        SurrogateKind::ProximalLinear => {
            let xhat = y - &g_y / c;
            (Model::ProximalLinear, Some(c), Some(xhat))
        }
        SurrogateKind::QuadraticSplit => {
            let h = obj.dense_hessian(y).ok_or_else(|| Error::UnsupportedSurrogate {
                kind: "quadratic_split",
                reason: "objective exposes no dense Hessian".into(),
            })?;
            let eig = SymmetricEigen::new((&h + h.transpose()) * 0.5);
            let clamped = eig.eigenvalues.map(|l| l.max(0.0) + c);
            let top = clamped.max();
            let q = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
            let q = (&q + q.transpose()) * 0.5;
            let closed = if spec.dense_solve {
                let chol = q
                    .clone()
                    .cholesky()
                    .ok_or_else(|| invalid("quadratic_split model failed to factor despite C > 0"))?;
                Some(y - chol.solve(&g_y))
            } else {
                None
            };
            (Model::Quadratic { hessian: q }, Some(top), closed)
        }
        SurrogateKind::Custom(family) => {
            let m = family.build(obj, y, f_y, &g_y, c)?;
            let smooth = m.smoothness();
            let closed = m.minimizer();
            (Model::Custom(m), smooth, closed)
        }
    };
    Ok(SurrogateAt {
        anchor: y.clone(),
        anchor_value: f_y,
        anchor_gradient: g_y,
        modulus: c,
        smoothness,
        inner_tol,
        model,
        closed_form_minimizer: closed,
    })
}

/// Outcome of an inner solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerReport {
    pub iterations: usize,
    /// `‖∇Ũ(x̂; y)‖` at the returned point.
    pub residual: f64,
    pub tolerance: f64,
}

/// Minimises the surrogate: closed form when available, otherwise gradient
/// descent with step `1/L̃` started at the anchor.
pub fn minimize_surrogate(s: &SurrogateAt, spec: &SurrogateSpec) -> Result<(Vector, InnerReport)> {
    if let Some(x) = &s.closed_form_minimizer {
        let residual = s.gradient(x).norm();
        return Ok((
            x.clone(),
            InnerReport {
                iterations: 0,
                residual,
                tolerance: s.inner_tol,
            },
        ));
    }
    let lip = s.smoothness.ok_or_else(|| Error::UnsupportedSurrogate {
        kind: "custom",
        reason: "iterative inner solve needs the model smoothness".into(),
    })?;
    let step = 1.0 / lip;
    let mut x = s.anchor.clone();
    let mut g = s.gradient(&x);
    let mut residual = g.norm();
    for k in 0..spec.inner_max_iters {
        if residual <= s.inner_tol {
            return Ok((
                x,
                InnerReport {
                    iterations: k,
                    residual,
                    tolerance: s.inner_tol,
                },
            ));
        }
        x.axpy(-step, &g, 1.0);
        g = s.gradient(&x);
        residual = g.norm();
    }
    if residual <= s.inner_tol {
        return Ok((
            x,
            InnerReport {
                iterations: spec.inner_max_iters,
                residual,
                tolerance: s.inner_tol,
            },
        ));
    }
    Err(Error::InnerSolveFailure {
        iterations: spec.inner_max_iters,
        residual,
    })
}
