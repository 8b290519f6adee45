//! Cross-module invariants of the drivers on registered problems.

use nalgebra::DMatrix;
use proptest::prelude::*;

use psca::drivers::{derive_params, maybe_perturb, run_psca, sca_step, PerturbationState, PscaInputs};
use psca::problems::{make_quadratic, problem_from_name};
use psca::surrogates::SurrogateSpec;
use psca::{RngStream, Vector};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn proximal_error_is_scaled_gradient(c in 0.25f64..4.0, seed in 0u64..1000) {
        // x̂ = x − ∇U/C, so e_t = (1/C − 1)∇U(x_t).
        let p = problem_from_name("saddle_quartic:d=5").unwrap();
        let mut rng = RngStream::new(seed);
        let x = rng.uniform_box(5, 1.5);
        let (_, rec) = sca_step(p.objective.as_ref(), &SurrogateSpec::proximal(c), &x, 0.05).unwrap();
        let g = p.objective.gradient(&x).norm();
        prop_assert!((rec.err_norm - (1.0 / c - 1.0).abs() * g).abs() <= 1e-12 * (1.0 + g));
        prop_assert!((rec.step_norm - g / c).abs() <= 1e-12 * (1.0 + g));
    }

    #[test]
    fn split_model_step_solves_shifted_system(c in 0.1f64..2.0, seed in 0u64..1000) {
        // On a convex quadratic the split model is U itself plus (C/2)‖x − y‖²,
        // so x̂ − x_t = −(H + C·I)⁻¹∇U(x_t).
        let mut rng = RngStream::new(seed);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.normal());
        let h = &a * a.transpose() + DMatrix::identity(4, 4) * 0.1;
        let p = make_quadratic(h.clone(), Vector::zeros(4)).unwrap();
        let x = rng.normal_vector(4);
        let spec = SurrogateSpec { dense_solve: true, ..SurrogateSpec::quadratic_split(c) };
        let (x_next, _) = sca_step(p.objective.as_ref(), &spec, &x, 1.0).unwrap();
        let shifted = h + DMatrix::identity(4, 4) * c;
        let expect = &x - shifted.lu().solve(&p.objective.gradient(&x)).unwrap();
        prop_assert!((x_next - &expect).amax() <= 1e-9 * (1.0 + expect.amax()));
    }

    #[test]
    fn perturbation_stays_in_ball(seed in 0u64..10_000, d in 2usize..30) {
        let p = problem_from_name(&format!("saddle_quartic:d={d}")).unwrap();
        let params = derive_params(&PscaInputs::new(1e-2, 0.1, 0.25), p.objective.as_ref()).unwrap();
        let x = Vector::zeros(d);
        let state = PerturbationState::new(params.t_th);
        let (moved, next, norm) = maybe_perturb(&params, &state, &x, 0.0, 0.0, 0, &mut RngStream::new(seed)).unwrap();
        prop_assert!(norm.unwrap() <= params.r);
        prop_assert!(moved.norm() <= params.r * (1.0 + 1e-15));
        prop_assert_eq!(next.t_noise, 0);
    }
}

#[test]
fn psca_replays_identically_and_records_every_iterate() {
    let p = problem_from_name("matrix_factorization:d=4,r=2,seed=5").unwrap();
    let obj = p.objective.as_ref();
    let mut x0 = p.canonical_start.clone();
    x0[0] = 1e-3;
    let params = derive_params(&PscaInputs::new(1e-3, 0.1, obj.value(&x0)), obj).unwrap();
    let spec = SurrogateSpec::proximal(1.0);
    let a = run_psca(obj, &spec, &params, &x0, &mut RngStream::new(42)).unwrap();
    let b = run_psca(obj, &spec, &params, &x0, &mut RngStream::new(42)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), a.iterations() + 1);
    assert!(a.records.iter().enumerate().all(|(i, r)| r.t == i));
    assert!(a.records[..a.records.len() - 1].iter().all(|r| r.f_next.is_some()));
    assert!(a.records.last().unwrap().f_next.is_none());
    let c = run_psca(obj, &spec, &params, &x0, &mut RngStream::new(43)).unwrap();
    assert_ne!(a.records, c.records);
}
