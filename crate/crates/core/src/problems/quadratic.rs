use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Objective, ProblemInstance, Smoothness, ValidRegion};
use crate::error::{invalid, Result};
use crate::numerics::Vector;

/// `U(x) = ½xᵀHx + bᵀx`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    h: DMatrix<f64>,
    b: Vector,
    l1: f64,
    f_star: Option<f64>,
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.b.dot(x)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.h * x + &self.b
    }

    fn hvp(&self, _x: &Vector, v: &Vector) -> Vector {
        &self.h * v
    }

    fn dense_hessian(&self, _x: &Vector) -> Option<DMatrix<f64>> {
        Some(self.h.clone())
    }

    fn constants(&self) -> Smoothness {
        Smoothness {
            l0: None,
            l1: self.l1,
            l2: 0.0,
        }
    }

    fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    fn region(&self) -> ValidRegion {
        ValidRegion::unbounded()
    }
}

pub fn make_quadratic(h: DMatrix<f64>, b: Vector) -> Result<ProblemInstance> {
    let d = b.len();
    if d == 0 || h.nrows() != d || h.ncols() != d {
        return Err(invalid(format!(
            "quadratic needs a {d}x{d} matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let asym = (&h - h.transpose()).amax();
    if asym > 1e-12 {
        return Err(invalid(format!("H is not symmetric (max |H - H^T| = {asym:.3e})")));
    }
    let eig = SymmetricEigen::new(h.clone());
    // Rounded up past the eigensolver's backward error so that L1 stays an
    // upper bound (and c/L1 <= 1 whenever c <= ‖H‖).
    let l1 = eig.eigenvalues.amax() * (1.0 + 1e-12);
    let lam_min = eig.eigenvalues.min();

    let mut saddles = Vec::new();
    let mut minima = Vec::new();
    let mut f_star = None;
    if lam_min > 0.0 {
        let xstar = h
            .clone()
            .cholesky()
            .map(|c| -c.solve(&b))
            .ok_or_else(|| invalid("positive definite H failed to factor"))?;
        let q = Quadratic {
            h: h.clone(),
            b: b.clone(),
            l1,
            f_star: None,
        };
        let fs = q.value(&xstar);
        f_star = Some(fs);
        minima.push((xstar, fs));
    } else if lam_min < 0.0 && b.iter().all(|&v| v == 0.0) {
        saddles.push(Vector::zeros(d));
    } else if lam_min == 0.0 && b.iter().all(|&v| v == 0.0) {
        f_star = Some(0.0);
    }

    let objective = Quadratic { h, b, l1, f_star };
    ProblemInstance::registered(
        format!("quadratic:d={d}"),
        Arc::new(objective),
        Vector::from_element(d, 1.0),
        saddles,
        minima,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::problems::{dense_min_eigenvalue, test_support, validate_contracts};

    #[test]
    fn indefinite_diagonal() {
        let p = make_quadratic(
            DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0])),
            Vector::zeros(2),
        )
        .unwrap();
        let obj = &p.objective;
        assert_eq!(obj.gradient(&Vector::zeros(2)), Vector::zeros(2));
        for x in [vec![0.0, 0.0], vec![3.0, -1.0]] {
            let h = obj.dense_hessian(&Vector::from_vec(x)).unwrap();
            assert_eq!(dense_min_eigenvalue(&h), -1.0);
        }
        assert_eq!(p.known_saddles.len(), 1);
        assert_eq!(obj.constants().l2, 0.0);
    }

    #[test]
    fn identity_values() {
        let p = make_quadratic(DMatrix::identity(2, 2), Vector::zeros(2)).unwrap();
        let x = Vector::from_vec(vec![3.0, 4.0]);
        assert_eq!(p.objective.value(&x), 12.5);
        assert_eq!(p.objective.gradient(&x), x);
        assert_eq!(p.objective.f_star(), Some(0.0));
    }

    #[test]
    fn l1_is_spectral_norm() {
        let mut rng = RngStream::new(17);
        let a = DMatrix::from_fn(10, 10, |_, _| rng.normal());
        let h = (&a + a.transpose()) * 0.5;
        let p = make_quadratic(h.clone(), rng.normal_vector(10)).unwrap();
        // Oracle: power iteration on H² for the largest |eigenvalue|.
        let h2 = &h * &h;
        let mut v = Vector::from_element(10, 1.0);
        for _ in 0..5000 {
            v = (&h2 * &v).normalize();
        }
        let oracle = (&h * &v).norm();
        assert!((p.objective.constants().l1 - oracle).abs() <= 1e-10 * oracle.max(1.0));
        test_support::assert_derivatives_consistent(&p, 20, 3);
    }

    #[test]
    fn rejects_asymmetric() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(make_quadratic(h, Vector::zeros(2)).is_err());
    }

    #[test]
    fn contract_ratios_constant_hessian() {
        let p = make_quadratic(
            DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0])),
            Vector::zeros(2),
        )
        .unwrap();
        let rep = validate_contracts(&p, &mut RngStream::new(1), 500);
        assert!((rep.gradient_ratio_max - 1.0).abs() < 1e-12);
        assert_eq!(rep.hessian_ratio_max, 0.0);
        assert!(rep.ok(), "{:?}", rep.violations);
    }
}
