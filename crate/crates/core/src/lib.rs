//! Learning sparse additive models with pairwise interactions from point queries.
//!
//! The pipeline recovers the active univariate set `S1` and interaction set
//! `S2` of `f(x) = Σ φ_p(x_p) + Σ φ_(l,l')(x_l, x_l')` by compressive sensing
//! of gradients and Hessian rows at structured grids, and then estimates the
//! components by subspace sampling and spline fitting.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// `!(x > 0)` checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::type_complexity)]

pub mod components;
pub mod error;
pub mod hashing;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod recovery;
pub mod rng;
pub mod scalar;
pub mod sensing;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Model = model::GroundTruthModel<f64>;
pub type Oracle = model::QueryOracle<f64>;
pub type Problem = model::ProblemParams<f64>;
pub type Noise = model::NoiseMode<f64>;
pub type Params = recovery::RecoveryParams<f64>;
pub type Config = recovery::RecoveryConfig<f64>;
pub type Estimate = recovery::SupportEstimate<f64>;
pub type Components = components::ComponentSet<f64>;
