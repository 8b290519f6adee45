use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::matrix_factorization::planted;
use super::{make_matrix_factorization, make_quadratic, make_rosenbrock, make_saddle_quartic, ProblemInstance};
use crate::error::{invalid, Error, Result};
use crate::numerics::{RngStream, Vector};

pub const PROBLEM_NAMES: [&str; 4] = ["quadratic", "saddle_quartic", "matrix_factorization", "rosenbrock"];

/// Parsed problem address such as `saddle_quartic:d=10` or
/// `matrix_factorization:d=6,r=2,seed=3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemSpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let name = name.trim().to_string();
        if !PROBLEM_NAMES.contains(&name.as_str()) {
            return Err(invalid(format!(
                "unknown problem `{name}` (known: {})",
                PROBLEM_NAMES.join(", ")
            )));
        }
        let mut params = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| invalid(format!("problem parameter `{kv}` is not key=value")))?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { name, params })
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)?;
        for (i, (k, v)) in self.params.iter().enumerate() {
            write!(f, "{}{k}={v}", if i == 0 { ':' } else { ',' })?;
        }
        Ok(())
    }
}

impl ProblemSpec {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| invalid(format!("{}: cannot parse `{key}={v}`", self.name))),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(invalid(format!(
                "{}: unknown parameter `{k}` (allowed: {})",
                self.name,
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }

    /// Instantiates the problem.
    ///
    /// `quadratic` accepts `spectrum=identity|saddle|random|spd` (default identity);
    /// `saddle` alternates +1/−1 on the diagonal, `random` draws a symmetric
    /// Gaussian matrix from `seed`, `spd` rotates eigenvalues log-spaced in
    /// `[0.01, 1]` by a random orthogonal matrix from `seed`. `matrix_factorization` plants `M = V*V*ᵀ`
    /// with `V*` drawn from `seed`.
    pub fn build(&self) -> Result<ProblemInstance> {
        let mut p = match self.name.as_str() {
            "quadratic" => {
                self.check_keys(&["d", "spectrum", "seed"])?;
                let d: usize = self.get("d", 2)?;
                if d == 0 {
                    return Err(invalid("quadratic: d must be positive"));
                }
                let seed: u64 = self.get("seed", 0)?;
                let spectrum: String = self.get("spectrum", "identity".to_string())?;
                let h = match spectrum.as_str() {
                    "identity" => DMatrix::identity(d, d),
                    "saddle" => DMatrix::from_diagonal(&Vector::from_fn(d, |i, _| if i % 2 == 0 { 1.0 } else { -1.0 })),
                    "random" => {
                        let mut rng = RngStream::new(seed);
                        let a = DMatrix::from_fn(d, d, |_, _| rng.normal());
                        (&a + a.transpose()) * 0.5
                    }
                    "spd" => {
                        let mut rng = RngStream::new(seed);
                        let q = DMatrix::from_fn(d, d, |_, _| rng.normal()).qr().q();
                        let lam = Vector::from_fn(d, |i, _| {
                            let frac = if d == 1 { 0.0 } else { i as f64 / (d - 1) as f64 };
                            10f64.powf(-2.0 * frac)
                        });
                        let h = &q * DMatrix::from_diagonal(&lam) * q.transpose();
                        (&h + h.transpose()) * 0.5
                    }
                    other => return Err(invalid(format!("quadratic: unknown spectrum `{other}`"))),
                };
                make_quadratic(h, Vector::zeros(d))?
            }
            "saddle_quartic" => {
                self.check_keys(&["d"])?;
                make_saddle_quartic(self.get("d", 2)?)?
            }
            "matrix_factorization" => {
                self.check_keys(&["d", "r", "seed"])?;
                let d: usize = self.get("d", 6)?;
                let r: usize = self.get("r", 2)?;
                if d == 0 || r == 0 || r > d {
                    return Err(invalid("matrix_factorization: need 1 <= r <= d"));
                }
                let (m, _) = planted(d, r, &mut RngStream::new(self.get("seed", 0)?));
                make_matrix_factorization(m, r)?
            }
            "rosenbrock" => {
                self.check_keys(&["d"])?;
                make_rosenbrock(self.get("d", 2)?)?
            }
            _ => unreachable!("name validated on parse"),
        };
        p.name = self.to_string();
        Ok(p)
    }
}

/// Parses and builds a problem from its registry address.
pub fn problem_from_name(s: &str) -> Result<ProblemInstance> {
    s.parse::<ProblemSpec>()?.build()
}
