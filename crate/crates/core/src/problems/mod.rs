//! Objective contract and the benchmark problem registry.
//!
//! Every objective declares its smoothness constants over an explicit valid
//! region. Drivers abort a run when an iterate leaves that region.

mod matrix_factorization;
mod quadratic;
mod registry;
mod rosenbrock;
mod saddle_quartic;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{finite_diff_hvp, sample_uniform_ball, RngStream, Vector, DEFAULT_FD_STEP};

pub use matrix_factorization::make_matrix_factorization;
pub use quadratic::make_quadratic;
pub use registry::{problem_from_name, ProblemSpec};
pub use rosenbrock::make_rosenbrock;
pub use saddle_quartic::make_saddle_quartic;

/// Lipschitz constants of the function (`l0`), its gradient (`l1`) and its Hessian (`l2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub l0: Option<f64>,
    pub l1: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionNorm {
    Euclidean,
    Max,
}

/// Ball `{x : ‖x‖ ≤ radius}` on which the declared constants hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidRegion {
    pub norm: RegionNorm,
    pub radius: f64,
}

impl ValidRegion {
    pub fn unbounded() -> Self {
        Self {
            norm: RegionNorm::Euclidean,
            radius: f64::INFINITY,
        }
    }

    pub fn measure(&self, x: &Vector) -> f64 {
        match self.norm {
            RegionNorm::Euclidean => x.norm(),
            RegionNorm::Max => x.amax(),
        }
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.measure(x) <= self.radius
    }

    /// Uniform-ish sample inside the region; unbounded regions are sampled in a
    /// ball of radius `fallback`.
    pub fn sample(&self, dim: usize, fallback: f64, rng: &mut RngStream) -> Vector {
        let radius = if self.radius.is_finite() { self.radius } else { fallback };
        match self.norm {
            RegionNorm::Euclidean => sample_uniform_ball(dim, radius, rng).expect("dim >= 1"),
            RegionNorm::Max => rng.uniform_box(dim, radius),
        }
    }
}

/// A twice differentiable objective with declared smoothness constants.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> f64;

    fn gradient(&self, x: &Vector) -> Vector;

    /// Hessian-vector product. Defaults to central differences of the gradient.
    fn hvp(&self, x: &Vector, v: &Vector) -> Vector {
        if v.norm() == 0.0 {
            return Vector::zeros(v.len());
        }
        finite_diff_hvp(|y| self.gradient(y), x, v, DEFAULT_FD_STEP).expect("nonzero direction and positive step")
    }

    fn dense_hessian(&self, _x: &Vector) -> Option<DMatrix<f64>> {
        None
    }

    fn constants(&self) -> Smoothness;

    /// Known lower bound `U(x*)`, if any.
    fn f_star(&self) -> Option<f64> {
        None
    }

    fn region(&self) -> ValidRegion;
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn dense_min_eigenvalue(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.min()
}

pub(crate) fn spectral_norm_symmetric(h: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h.clone()).eigenvalues.amax()
}

/// A named objective with its canonical start and any known critical points.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub objective: Arc<dyn Objective>,
    pub canonical_start: Vector,
    pub known_saddles: Vec<Vector>,
    pub known_minima: Vec<(Vector, f64)>,
}

impl fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dim", &self.objective.dim())
            .field("constants", &self.objective.constants())
            .field("known_saddles", &self.known_saddles.len())
            .field("known_minima", &self.known_minima.len())
            .finish()
    }
}

impl ProblemInstance {
    /// Builds an instance after checking every registered critical point
    /// against the dense Hessian oracle.
    pub(crate) fn registered(
        name: String,
        objective: Arc<dyn Objective>,
        canonical_start: Vector,
        known_saddles: Vec<Vector>,
        known_minima: Vec<(Vector, f64)>,
    ) -> Result<Self> {
        let p = Self {
            name,
            objective,
            canonical_start,
            known_saddles,
            known_minima,
        };
        p.verify_known_points()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn verify_known_points(&self) -> Result<()> {
        let obj = &self.objective;
        let hessian = |p: &Vector| {
            obj.dense_hessian(p)
                .ok_or_else(|| Error::ContractViolation(format!("{}: known points need a dense Hessian", self.name)))
        };
        for p in &self.known_saddles {
            let g = obj.gradient(p).norm();
            let h = hessian(p)?;
            let lam = dense_min_eigenvalue(&h);
            if g > 1e-10 || lam >= 0.0 {
                return Err(Error::ContractViolation(format!(
                    "{}: registered saddle has |grad| = {g:.3e}, lambda_min = {lam:.6e}",
                    self.name
                )));
            }
        }
        for (p, f) in &self.known_minima {
            let g = obj.gradient(p).norm();
            let v = obj.value(p);
            let h = hessian(p)?;
            let lam = dense_min_eigenvalue(&h);
            // Flat directions (e.g. rotational symmetry) give eigenvalues at roundoff level.
            let floor = -1e-10 * spectral_norm_symmetric(&h).max(1.0);
            if g > 1e-10 || (v - f).abs() > 1e-12 || lam < floor {
                return Err(Error::ContractViolation(format!(
                    "{}: registered minimum has |grad| = {g:.3e}, U = {v}, expected {f}, lambda_min = {lam:.6e}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Same problem with different declared constants.
    pub fn with_constants(self, constants: Smoothness) -> Self {
        Self {
            objective: Arc::new(Redeclared {
                inner: self.objective,
                constants,
            }),
            ..self
        }
    }
}

/// Wrapper overriding the declared constants of an objective.
struct Redeclared {
    inner: Arc<dyn Objective>,
    constants: Smoothness,
}

impl Objective for Redeclared {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.inner.value(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.inner.gradient(x)
    }
    fn hvp(&self, x: &Vector, v: &Vector) -> Vector {
        self.inner.hvp(x, v)
    }
    fn dense_hessian(&self, x: &Vector) -> Option<DMatrix<f64>> {
        self.inner.dense_hessian(x)
    }
    fn constants(&self) -> Smoothness {
        self.constants
    }
    fn f_star(&self) -> Option<f64> {
        self.inner.f_star()
    }
    fn region(&self) -> ValidRegion {
        self.inner.region()
    }
}

/// Observed Lipschitz ratios over sampled pairs in the valid region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractReport {
    pub samples: usize,
    pub value_ratio_max: f64,
    pub gradient_ratio_max: f64,
    pub hessian_ratio_max: f64,
    pub violations: Vec<String>,
}

impl ContractReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative excess over a declared constant tolerated before flagging.
const CONTRACT_SLACK: f64 = 0.01;

/// Samples pairs in the valid region and compares observed Lipschitz ratios
/// with the declared constants.
///
/// Half the pairs are independent draws, half are local pairs `y = x + small`,
/// which probe the worst-case curvature more tightly.
pub fn validate_contracts(p: &ProblemInstance, rng: &mut RngStream, samples: usize) -> ContractReport {
    let obj = &p.objective;
    let d = obj.dim();
    let region = obj.region();
    let fallback = 10.0 * p.canonical_start.norm().max(1.0);
    let mut report = ContractReport {
        samples,
        value_ratio_max: 0.0,
        gradient_ratio_max: 0.0,
        hessian_ratio_max: 0.0,
        violations: Vec::new(),
    };
    if samples < 100 {
        report
            .violations
            .push(format!("at least 100 samples required, got {samples}"));
        return report;
    }
    for k in 0..samples {
        let x = region.sample(d, fallback, rng);
        let y = if k % 2 == 0 {
            region.sample(d, fallback, rng)
        } else {
            let mut y = &x + rng.normal_vector(d) * 1e-3;
            if !region.contains(&y) {
                y = x.clone() * (1.0 - 1e-3);
            }
            y
        };
        let dist = (&x - &y).norm();
        if dist == 0.0 {
            continue;
        }
        let vr = (obj.value(&x) - obj.value(&y)).abs() / dist;
        let gr = (obj.gradient(&x) - obj.gradient(&y)).norm() / dist;
        let hr = match (obj.dense_hessian(&x), obj.dense_hessian(&y)) {
            (Some(hx), Some(hy)) => spectral_norm_symmetric(&(hx - hy)) / dist,
            _ => {
                // Lower bound from a few random directions.
                (0..4)
                    .map(|_| {
                        let v = rng.normal_vector(d).normalize();
                        (obj.hvp(&x, &v) - obj.hvp(&y, &v)).norm()
                    })
                    .fold(0.0, f64::max)
                    / dist
            }
        };
        report.value_ratio_max = report.value_ratio_max.max(vr);
        report.gradient_ratio_max = report.gradient_ratio_max.max(gr);
        report.hessian_ratio_max = report.hessian_ratio_max.max(hr);
    }
    let c = obj.constants();
    let mut check = |name: &str, observed: f64, declared: f64| {
        if observed > declared * (1.0 + CONTRACT_SLACK) {
            report.violations.push(format!(
                "{name}: observed ratio {observed:.6e} exceeds declared {declared:.6e}"
            ));
        }
    };
    if let Some(l0) = c.l0 {
        check("L0", report.value_ratio_max, l0);
    }
    check("L1", report.gradient_ratio_max, c.l1);
    check("L2", report.hessian_ratio_max, c.l2);
    report
}
