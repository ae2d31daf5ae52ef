//! Config-driven experiment runner for the `qrobust` workbench.
//!
//! A TOML config names a dataset, one or more models, training settings and
//! optionally noise, an attack, a defense and a depth / noise sweep.
//! [`run_experiment`] trains and evaluates every model for every seed and
//! [`emit_report`] writes a tab-separated table (one row per seed, model,
//! condition and evaluation mode) and a summary of medians across seeds.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
mod error;
pub mod report;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::{BenchError, Result};
pub use report::{emit_report, relative_accuracy, ExperimentReport, OutputFormat};
pub use runner::run_experiment;
