use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Objective, ProblemInstance, RegionNorm, Smoothness, ValidRegion};
use crate::error::{invalid, Result};
use crate::numerics::Vector;

/// `U(x) = ½x₁² − ½x₂² + ¼x₂⁴ + ½Σ_{i≥3} xᵢ²`: strict saddle at the origin,
/// minima at `x₂ = ±1`.
#[derive(Debug, Clone)]
pub struct SaddleQuartic {
    dim: usize,
}

impl Objective for SaddleQuartic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        let x2 = x[1];
        let rest: f64 = x.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, v)| v * v).sum();
        0.5 * rest - 0.5 * x2 * x2 + 0.25 * x2.powi(4)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = x.clone();
        g[1] = -x[1] + x[1].powi(3);
        g
    }

    fn hvp(&self, x: &Vector, v: &Vector) -> Vector {
        let mut hv = v.clone();
        hv[1] *= -1.0 + 3.0 * x[1] * x[1];
        hv
    }

    fn dense_hessian(&self, x: &Vector) -> Option<DMatrix<f64>> {
        let mut h = DMatrix::identity(self.dim, self.dim);
        h[(1, 1)] = -1.0 + 3.0 * x[1] * x[1];
        Some(h)
    }

    /// Valid on `‖x‖∞ ≤ 2`: `|−1+3x₂²| ≤ 11`, `|3(x₂²−y₂²)| ≤ 12|x₂−y₂|`,
    /// `‖∇U‖² ≤ 36 + 4(d−1)`.
    fn constants(&self) -> Smoothness {
        Smoothness {
            l0: Some((36.0 + 4.0 * (self.dim as f64 - 1.0)).sqrt()),
            l1: 11.0,
            l2: 12.0,
        }
    }

    fn f_star(&self) -> Option<f64> {
        Some(-0.25)
    }

    fn region(&self) -> ValidRegion {
        ValidRegion {
            norm: RegionNorm::Max,
            radius: 2.0,
        }
    }
}

pub fn make_saddle_quartic(dim: usize) -> Result<ProblemInstance> {
    if dim < 2 {
        return Err(invalid(format!("saddle_quartic needs dim >= 2, got {dim}")));
    }
    let minimum = |sign: f64| {
        let mut p = Vector::zeros(dim);
        p[1] = sign;
        (p, -0.25)
    };
    ProblemInstance::registered(
        format!("saddle_quartic:d={dim}"),
        Arc::new(SaddleQuartic { dim }),
        Vector::zeros(dim),
        vec![Vector::zeros(dim)],
        vec![minimum(1.0), minimum(-1.0)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::problems::{dense_min_eigenvalue, test_support, validate_contracts};

    #[test]
    fn origin_is_strict_saddle() {
        let p = make_saddle_quartic(5).unwrap();
        let o = Vector::zeros(5);
        assert_eq!(p.objective.value(&o), 0.0);
        assert_eq!(p.objective.gradient(&o), o);
        assert_eq!(dense_min_eigenvalue(&p.objective.dense_hessian(&o).unwrap()), -1.0);
    }

    #[test]
    fn minimum_values() {
        let p = make_saddle_quartic(4).unwrap();
        let x = Vector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(p.objective.value(&x), -0.25);
        assert_eq!(p.objective.gradient(&x).norm(), 0.0);
        let h = p.objective.dense_hessian(&x).unwrap();
        assert_eq!(h, DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0, 1.0, 1.0])));
    }

    #[test]
    fn rejects_dim_one() {
        assert!(make_saddle_quartic(1).is_err());
    }

    #[test]
    fn sampled_hessian_ratio_within_declared() {
        for d in [2, 10] {
            let p = make_saddle_quartic(d).unwrap();
            let rep = validate_contracts(&p, &mut RngStream::new(d as u64), 10_000);
            assert!(rep.hessian_ratio_max <= 12.0, "{}", rep.hessian_ratio_max);
            assert!(rep.hessian_ratio_max > 10.0);
            assert!(rep.ok(), "{:?}", rep.violations);
        }
    }

    #[test]
    fn halved_l1_is_flagged() {
        let p = make_saddle_quartic(2).unwrap();
        let c = p.objective.constants();
        let p = p.with_constants(Smoothness { l1: c.l1 / 2.0, ..c });
        let rep = validate_contracts(&p, &mut RngStream::new(9), 2000);
        assert!(!rep.ok());
        assert!(rep.violations.iter().any(|v| v.starts_with("L1")));
    }

    #[test]
    fn derivatives() {
        for d in [2, 10] {
            test_support::assert_derivatives_consistent(&make_saddle_quartic(d).unwrap(), 20, 8);
        }
    }
}
