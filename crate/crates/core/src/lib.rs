//! Robustness workbench for hybrid quantum-classical classifiers.
//!
//! * [`qcore`] simulates parameterized circuits as pure states or, under
//!   per-gate Kraus noise, as density matrices.
//! * [`encode`] maps feature vectors to circuits (angle, dense-angle) or
//!   states (amplitude).
//! * [`model`] holds the QMLP, the six-layer PQC classifier and a classical
//!   MLP, with exact adjoint / parameter-shift gradients and SPSA.
//! * [`train`], [`attacks`] and [`defend`] implement training loops,
//!   poisoning and evasion attacks, and loss-based sample reweighting.
//! * [`data`] loads IDX / CSV data, fits PCA and draws stratified splits.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod data;
pub mod defend;
pub mod encode;
mod error;
pub mod model;
pub mod qcore;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
