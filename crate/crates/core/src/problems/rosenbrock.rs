use std::sync::Arc;

use nalgebra::DMatrix;

use super::{Objective, ProblemInstance, RegionNorm, Smoothness, ValidRegion};
use crate::error::{invalid, Result};
use crate::numerics::Vector;

/// Chained Rosenbrock `Σ 100(x_{i+1} − x_i²)² + (1 − x_i)²`.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    dim: usize,
}

impl Objective for Rosenbrock {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &Vector) -> f64 {
        (0..self.dim - 1)
            .map(|i| {
                let a = x[i + 1] - x[i] * x[i];
                let b = 1.0 - x[i];
                100.0 * a * a + b * b
            })
            .sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim);
        for i in 0..self.dim - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * a;
        }
        g
    }

    fn hvp(&self, x: &Vector, v: &Vector) -> Vector {
        let mut hv = Vector::zeros(self.dim);
        for i in 0..self.dim - 1 {
            let dii = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            let off = -400.0 * x[i];
            hv[i] += dii * v[i] + off * v[i + 1];
            hv[i + 1] += off * v[i] + 200.0 * v[i + 1];
        }
        hv
    }

    fn dense_hessian(&self, x: &Vector) -> Option<DMatrix<f64>> {
        let d = self.dim;
        let mut h = DMatrix::zeros(d, d);
        for i in 0..d - 1 {
            h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            h[(i, i + 1)] = -400.0 * x[i];
            h[(i + 1, i)] = -400.0 * x[i];
            h[(i + 1, i + 1)] += 200.0;
        }
        Some(h)
    }

    /// Gershgorin bounds on `‖x‖∞ ≤ 2`: Hessian rows are bounded by 7402,
    /// Hessian differences by 6000‖Δ‖∞, gradient entries by 6006.
    fn constants(&self) -> Smoothness {
        Smoothness {
            l0: Some(6006.0 * (self.dim as f64).sqrt()),
            l1: 7402.0,
            l2: 6000.0,
        }
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn region(&self) -> ValidRegion {
        ValidRegion {
            norm: RegionNorm::Max,
            radius: 2.0,
        }
    }
}

pub fn make_rosenbrock(dim: usize) -> Result<ProblemInstance> {
    if dim < 2 {
        return Err(invalid(format!("rosenbrock needs dim >= 2, got {dim}")));
    }
    let start = Vector::from_fn(dim, |i, _| if i % 2 == 0 { -1.2 } else { 1.0 });
    ProblemInstance::registered(
        format!("rosenbrock:d={dim}"),
        Arc::new(Rosenbrock { dim }),
        start,
        Vec::new(),
        vec![(Vector::from_element(dim, 1.0), 0.0)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::problems::{test_support, validate_contracts};

    #[test]
    fn known_values() {
        let p = make_rosenbrock(2).unwrap();
        assert_eq!(p.objective.value(&Vector::zeros(2)), 1.0);
        let ones = Vector::from_element(2, 1.0);
        assert_eq!(p.objective.value(&ones), 0.0);
        assert_eq!(p.objective.gradient(&ones).norm(), 0.0);
        assert!(make_rosenbrock(1).is_err());
    }

    #[test]
    fn derivatives_and_contracts() {
        for d in [2, 10] {
            let p = make_rosenbrock(d).unwrap();
            test_support::assert_derivatives_consistent(&p, 20, 12);
            let rep = validate_contracts(&p, &mut RngStream::new(2), 2000);
            assert!(rep.ok(), "{:?}", rep.violations);
        }
    }
}
