//! Dense vectors, seeded random streams, ball sampling and finite-difference oracles.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

/// Dense column vector of coordinates.
pub type Vector = DVector<f64>;

/// Default central-difference step for unit-scaled problems.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A seeded, platform-stable random stream (ChaCha20).
///
/// Parallel sweeps derive streams with [`RngStream::substream`] instead of
/// sharing one stream between runs.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent stream for run `index` of a sweep (seed offsetting).
    pub fn substream(&self, index: u64) -> Self {
        Self::new(self.seed.wrapping_add(index))
    }

    /// Stream with the same seed but a different ChaCha stream id, for draws
    /// (such as initial points) that must not shift the main sequence.
    pub fn side_stream(&self, stream: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(self.seed);
        inner.set_stream(stream);
        Self { seed: self.seed, inner }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn normal_vector(&mut self, dim: usize) -> Vector {
        Vector::from_fn(dim, |_, _| self.normal())
    }

    /// Vector with entries uniform in `[-half_width, half_width]`.
    pub fn uniform_box(&mut self, dim: usize, half_width: f64) -> Vector {
        Vector::from_fn(dim, |_, _| self.uniform_range(-half_width, half_width))
    }
}

/// Draws a point uniformly from the solid Euclidean ball of the given radius
/// centred at the origin.
///
/// Direction is a normalised Gaussian, norm is `radius * u^(1/dim)`. Always
/// consumes `dim + 1` normal/uniform draws, so sequences stay aligned across
/// runs regardless of the radius.
pub fn sample_uniform_ball(dim: usize, radius: f64, rng: &mut RngStream) -> Result<Vector> {
    if dim == 0 {
        return Err(invalid("ball dimension must be positive"));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(invalid(format!("ball radius must be finite and >= 0, got {radius}")));
    }
    let mut dir = rng.normal_vector(dim);
    let u = rng.uniform();
    if radius == 0.0 {
        return Ok(Vector::zeros(dim));
    }
    let mut n = dir.norm();
    // A zero Gaussian draw has probability zero but would poison the direction.
    while n == 0.0 {
        dir = rng.normal_vector(dim);
        n = dir.norm();
    }
    let rho = radius * u.powf(1.0 / dim as f64);
    let mut xi = dir * (rho / n);
    // Rounding can push the norm a few ulps past the radius.
    let norm = xi.norm();
    if norm > radius {
        xi *= radius / norm;
        while xi.norm() > radius {
            xi *= 1.0 - f64::EPSILON;
        }
    }
    Ok(xi)
}

/// Central-difference gradient of a scalar function.
pub fn finite_diff_gradient<F>(f: F, x: &Vector, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> f64,
{
    if !(h > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let mut g = Vector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        probe[i] = xi + h;
        let fp = f(&probe);
        probe[i] = xi - h;
        let fm = f(&probe);
        probe[i] = xi;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NumericDomain { coordinate: i, step: h });
        }
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Central-difference Hessian-vector product from a gradient oracle.
///
/// Differences are taken along the unit direction `v/‖v‖` and rescaled, so the
/// result is linear in `v` up to roundoff.
pub fn finite_diff_hvp<G>(grad: G, x: &Vector, v: &Vector, h: f64) -> Result<Vector>
where
    G: Fn(&Vector) -> Vector,
{
    if !(h > 0.0) {
        return Err(invalid(format!("finite-difference step must be positive, got {h}")));
    }
    let vn = v.norm();
    if vn == 0.0 {
        return Err(invalid("direction for Hessian-vector product must be nonzero"));
    }
    let u = v / vn;
    let gp = grad(&(x + &u * h));
    let gm = grad(&(x - &u * h));
    if let Some(i) = gp.iter().chain(gm.iter()).position(|g| !g.is_finite()) {
        return Err(Error::NumericDomain {
            coordinate: i % x.len(),
            step: h,
        });
    }
    Ok((gp - gm) * (vn / (2.0 * h)))
}

/// Relative error `‖a-b‖ / max(‖b‖, floor)`.
pub fn relative_error(a: &Vector, b: &Vector, floor: f64) -> f64 {
    (a - b).norm() / b.norm().max(floor)
}
