//! Experiment runner: single configured runs, parameter sweeps and their reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chart;
pub mod config;
pub mod runner;

pub use config::{Axis, NoiseSpec, RunConfig};
pub use runner::{run_recover, run_sweep, write_report, write_sweep, RunReport, SweepReport};
