//! Random sign ensembles, finite-difference measurements of gradients and
//! Hessian rows, and sparse recovery from those measurements.

mod ensemble;
mod measurements;
mod solver;

pub use ensemble::{draw_ensemble, BernoulliEnsemble};
pub use measurements::{gradient_measurements, hessian_row_measurements, MeasurementVector};
pub use solver::{sparse_recover, sparse_recover_warm, SolverMode, SolverOptions};
