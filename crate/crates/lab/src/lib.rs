//! Experiment runner for the `vortexlab` solvers: validated scenario
//! configurations, reproducible run directories and the verification suites.

pub mod config;
pub mod criteria;
pub mod error;
pub mod formats;
pub mod scenarios;
