//! Successive convex approximation (SCA) for smooth nonconvex problems, with a
//! perturbed variant that escapes strict saddle points and certifies
//! approximate second-order stationarity.
//!
//! Modules, bottom-up:
//!
//! - [`numerics`]: vectors, seeded random streams, ball sampling, finite differences
//! - [`problems`]: the [`Objective`](problems::Objective) contract and benchmark problems
//! - [`surrogates`]: strongly convex local models and their minimisation
//! - [`drivers`]: SCA, perturbed SCA, gradient-descent baselines, parameter derivation
//! - [`certify`]: gradient-norm and minimum-eigenvalue stationarity certificates

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod drivers;
pub mod error;
pub mod numerics;
pub mod problems;
pub mod surrogates;

pub use error::{Error, Result};
pub use numerics::{RngStream, Vector};
