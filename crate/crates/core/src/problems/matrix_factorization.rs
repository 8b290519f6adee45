use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{Objective, ProblemInstance, RegionNorm, Smoothness, ValidRegion};
use crate::error::{invalid, Result};
use crate::numerics::Vector;

/// `U(V) = ¼‖VVᵀ − M‖²_F` with `V ∈ ℝ^{d×r}` flattened column-major.
#[derive(Debug, Clone)]
pub struct MatrixFactorization {
    m: DMatrix<f64>,
    rank: usize,
    constants: Smoothness,
    radius: f64,
    f_star: Option<f64>,
}

impl MatrixFactorization {
    fn unflatten(&self, x: &Vector) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.m.nrows(), self.rank, x.as_slice())
    }

    fn flatten(m: DMatrix<f64>) -> Vector {
        Vector::from_vec(m.as_slice().to_vec())
    }

    fn residual(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        v * v.transpose() - &self.m
    }
}

impl Objective for MatrixFactorization {
    fn dim(&self) -> usize {
        self.m.nrows() * self.rank
    }

    fn value(&self, x: &Vector) -> f64 {
        0.25 * self.residual(&self.unflatten(x)).norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let v = self.unflatten(x);
        Self::flatten(self.residual(&v) * v)
    }

    /// `(WVᵀ + VWᵀ)V + (VVᵀ − M)W`.
    fn hvp(&self, x: &Vector, w: &Vector) -> Vector {
        let v = self.unflatten(x);
        let w = self.unflatten(w);
        let sym = &w * v.transpose() + &v * w.transpose();
        Self::flatten(sym * &v + self.residual(&v) * w)
    }

    fn dense_hessian(&self, x: &Vector) -> Option<DMatrix<f64>> {
        let n = self.dim();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            h.set_column(j, &self.hvp(x, &e));
        }
        Some((&h + h.transpose()) * 0.5)
    }

    fn constants(&self) -> Smoothness {
        self.constants
    }

    fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    fn region(&self) -> ValidRegion {
        ValidRegion {
            norm: RegionNorm::Euclidean,
            radius: self.radius,
        }
    }
}

/// Builds the factorization landscape for a PSD target `M` and rank `r`.
///
/// Constants are declared on `‖V‖_F ≤ R = 2‖M‖_F^{1/2}`:
/// `L1 = 3R² + ‖M‖_F`, `L2 = 6R`, `L0 = R(R² + ‖M‖_F)`.
pub fn make_matrix_factorization(m: DMatrix<f64>, r: usize) -> Result<ProblemInstance> {
    let d = m.nrows();
    if d == 0 || m.ncols() != d {
        return Err(invalid("M must be a nonempty square matrix"));
    }
    if r == 0 || r > d {
        return Err(invalid(format!("rank must satisfy 1 <= r <= d = {d}, got {r}")));
    }
    if (&m - m.transpose()).amax() > 1e-12 {
        return Err(invalid("M is not symmetric"));
    }
    let eig = SymmetricEigen::new(m.clone());
    let lam_min = eig.eigenvalues.min();
    if lam_min < -1e-10 {
        return Err(invalid(format!("M is not PSD (min eigenvalue {lam_min:.3e})")));
    }

    let m_fro = m.norm();
    let radius = 2.0 * m_fro.sqrt();
    let constants = Smoothness {
        l0: Some(radius * (radius * radius + m_fro)),
        l1: (3.0 * radius * radius + m_fro).max(f64::MIN_POSITIVE),
        l2: (6.0 * radius).max(f64::MIN_POSITIVE),
    };

    // Eigenpairs in decreasing order.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let rank_at_most_r = order[r..].iter().all(|&i| eig.eigenvalues[i] <= 1e-10);

    let mut minima = Vec::new();
    let mut f_star = None;
    if rank_at_most_r {
        f_star = Some(0.0);
        let mut vstar = DMatrix::zeros(d, r);
        for (k, &i) in order[..r].iter().enumerate() {
            let lam = eig.eigenvalues[i].max(0.0);
            vstar.set_column(k, &(eig.eigenvectors.column(i) * lam.sqrt()));
        }
        let candidate = MatrixFactorization::flatten(vstar);
        minima.push((candidate, 0.0));
    }
    let objective = MatrixFactorization {
        m: m.clone(),
        rank: r,
        constants,
        radius,
        f_star,
    };
    // The exact-arithmetic minimiser can miss the registration tolerances by
    // roundoff; keep it only when it passes.
    minima.retain(|(p, _)| objective.gradient(p).norm() <= 1e-10 && objective.value(p) <= 1e-12);
    let saddles = if m_fro > 0.0 {
        vec![Vector::zeros(d * r)]
    } else {
        Vec::new()
    };

    ProblemInstance::registered(
        format!("matrix_factorization:d={d},r={r}"),
        Arc::new(objective),
        Vector::zeros(d * r),
        saddles,
        minima,
    )
}

/// Random planted instance `M = V*V*ᵀ` with standard normal `V* ∈ ℝ^{d×r}`.
pub(crate) fn planted(d: usize, r: usize, rng: &mut crate::numerics::RngStream) -> (DMatrix<f64>, DMatrix<f64>) {
    let vstar = DMatrix::from_fn(d, r, |_, _| rng.normal());
    let m = &vstar * vstar.transpose();
    (m.clone() * 0.5 + m.transpose() * 0.5, vstar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;
    use crate::problems::{dense_min_eigenvalue, test_support, validate_contracts};

    #[test]
    fn origin_negative_curvature_is_minus_top_eigenvalue() {
        let (m, _) = planted(6, 2, &mut RngStream::new(4));
        let top = SymmetricEigen::new(m.clone()).eigenvalues.max();
        let p = make_matrix_factorization(m, 2).unwrap();
        let o = Vector::zeros(12);
        assert_eq!(p.objective.gradient(&o).norm(), 0.0);
        let lam = dense_min_eigenvalue(&p.objective.dense_hessian(&o).unwrap());
        assert!((lam + top).abs() < 1e-10, "{lam} vs {}", -top);
        assert_eq!(p.known_saddles.len(), 1);
    }

    #[test]
    fn exact_factor_is_global_minimum() {
        let (m, vstar) = planted(6, 2, &mut RngStream::new(5));
        let p = make_matrix_factorization(m, 2).unwrap();
        let x = Vector::from_vec(vstar.as_slice().to_vec());
        assert!(p.objective.value(&x) < 1e-24);
        assert!(p.objective.gradient(&x).norm() < 1e-12);
        assert_eq!(p.objective.f_star(), Some(0.0));
    }

    #[test]
    fn rejects_indefinite_target() {
        let m = DMatrix::from_diagonal(&Vector::from_vec(vec![1.0, -0.5, 0.0]));
        assert!(make_matrix_factorization(m, 1).is_err());
    }

    #[test]
    fn derivatives_and_contracts() {
        let mut rng = RngStream::new(6);
        let (m, _) = planted(6, 2, &mut rng);
        let p = make_matrix_factorization(m, 2).unwrap();
        test_support::assert_derivatives_consistent(&p, 20, 10);
        let rep = validate_contracts(&p, &mut rng, 500);
        assert!(rep.ok(), "{:?}", rep.violations);
    }
}
