//! Parameter derivation against frozen 50-digit values from
//! `fixtures/gen_params_oracle.py`.

use psca::drivers::{derive_params, derive_scales, PscaInputs, WindowRule};
use psca::problems::{Objective, Smoothness, ValidRegion};
use psca::{Error, Vector};
use serde_json::Value;

struct Declared {
    dim: usize,
    constants: Smoothness,
}

impl Objective for Declared {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _: &Vector) -> f64 {
        0.0
    }
    fn gradient(&self, x: &Vector) -> Vector {
        Vector::zeros(x.len())
    }
    fn constants(&self) -> Smoothness {
        self.constants
    }
    fn region(&self) -> ValidRegion {
        ValidRegion::unbounded()
    }
}

fn cases() -> Vec<Value> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/params_oracle.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn num(v: &Value, key: &str) -> f64 {
    match &v[key] {
        Value::String(s) => s.parse().unwrap(),
        other => other.as_f64().unwrap(),
    }
}

fn agree(actual: f64, expected: f64) -> bool {
    (actual - expected).abs() <= 1e-12 * expected.abs()
}

#[test]
fn derived_quantities_match_high_precision_oracle() {
    let cases = cases();
    assert_eq!(cases.len(), 50);
    for case in &cases {
        let obj = Declared {
            dim: case["d"].as_u64().unwrap() as usize,
            constants: Smoothness {
                l0: Some(num(case, "l0")),
                l1: num(case, "l1"),
                l2: num(case, "l2"),
            },
        };
        for window in [WindowRule::Proof, WindowRule::Listing] {
            let inputs = PscaInputs {
                eps: num(case, "eps"),
                delta: num(case, "delta"),
                c: num(case, "c"),
                s: num(case, "s"),
                delta_u: num(case, "delta_u"),
                max_iters: 10,
                window,
            };
            let p = derive_params(&inputs, &obj).unwrap();
            for (key, got) in [
                ("chi", p.chi),
                ("eta", p.eta),
                ("r", p.r),
                ("g_th", p.g_th),
                ("f_th", p.f_th),
            ] {
                assert!(agree(got, num(case, key)), "{key}: {got} vs {}", num(case, key));
            }
            let expected_t = match window {
                WindowRule::Proof => case["t_th_proof"].as_u64().unwrap(),
                WindowRule::Listing => case["t_th_listing"].as_u64().unwrap(),
            };
            assert_eq!(p.t_th, expected_t.max(1));
            assert!(p.chi >= 12.0);
            assert!(p.t_th >= 1);

            let sc = derive_scales(&p, &obj, num(case, "modulus"));
            for (key, got) in [
                ("gamma", sc.gamma),
                ("kappa", sc.kappa),
                ("f_scale", sc.f_scale),
                ("g_scale", sc.g_scale),
                ("l_scale", sc.l_scale),
                ("t_scale", sc.t_scale),
                ("error_bound", sc.error_bound.unwrap()),
            ] {
                assert!(agree(got, num(case, key)), "{key}: {got} vs {}", num(case, key));
            }
            assert!(sc.kappa >= 1.0 - 1e-15);
        }

        let too_big = PscaInputs::new(2.0 * num(case, "l1").powi(2) / num(case, "l2"), 0.1, 1.0);
        assert!(matches!(
            derive_params(&too_big, &obj),
            Err(Error::HypothesisViolated(_))
        ));
    }
}
