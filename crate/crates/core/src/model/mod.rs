//! Hybrid and classical classifiers sharing one flat-parameter interface.

mod checkpoint;
mod cmlp;
mod hybrid;
mod pqc6;
mod qmlp;
mod spsa;
mod tape;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use cmlp::{cmlp_forward, cmlp_grad, Cmlp, CmlpConfig, CmlpGrad, CmlpWeights};
pub use hybrid::LinearHead;
pub use pqc6::{build_pqc6_circuit, Pqc6, Pqc6Config, Pqc6Params, PQC6_LAYERS, PQC6_QUBITS};
pub use qmlp::{build_qmlp_circuit, Qmlp, QmlpConfig, QmlpParams};
pub use spsa::spsa_grad;
pub use tape::{AngleSource, GradMethod, ParamCircuit, TapeGrad};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{make_amplitude_damping, make_depolarizing, KrausChannel, NoisePolicy};

/// How a model's circuit is executed.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum ExecMode {
    #[default]
    Pure,
    /// Density-matrix simulation with per-gate noise.
    Mixed(NoisePolicy),
}

impl ExecMode {
    pub fn depolarizing(p: f64) -> Result<Self> {
        Ok(ExecMode::Mixed(NoisePolicy::PerGate(vec![make_depolarizing(p)?])))
    }

    /// Depolarizing followed by amplitude damping, both with strength `p`.
    pub fn depolarizing_and_damping(p: f64) -> Result<Self> {
        Ok(ExecMode::Mixed(NoisePolicy::PerGate(vec![
            make_depolarizing(p)?,
            make_amplitude_damping(p)?,
        ])))
    }

    /// Depolarizing after every gate of the {RX, RZ, X, CX} rewrite of the
    /// circuit.
    pub fn native_depolarizing(p: f64) -> Result<Self> {
        Ok(ExecMode::Mixed(NoisePolicy::NativeBasis(vec![make_depolarizing(p)?])))
    }

    pub fn with_channels(channels: Vec<KrausChannel>) -> Self {
        ExecMode::Mixed(NoisePolicy::PerGate(channels))
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, ExecMode::Pure)
    }

    pub(crate) fn noise(&self) -> Option<&NoisePolicy> {
        match self {
            ExecMode::Pure => None,
            ExecMode::Mixed(p) => Some(p),
        }
    }
}

/// Scalar loss of a logit vector against a target distribution.
pub trait LossFn: Sync {
    /// Returns (loss, dloss/dlogits).
    fn loss_grad(&self, logits: &[f64], target: &[f64]) -> (f64, Vec<f64>);

    fn loss(&self, logits: &[f64], target: &[f64]) -> f64 {
        self.loss_grad(logits, target).0
    }
}

/// L = Σ_i c_i · logit_i, ignoring the target. Mostly useful for probing
/// gradients of individual outputs.
#[derive(Debug, Clone)]
pub struct LinearLoss(pub Vec<f64>);

impl LossFn for LinearLoss {
    fn loss_grad(&self, logits: &[f64], _target: &[f64]) -> (f64, Vec<f64>) {
        let v = logits.iter().zip(&self.0).map(|(a, b)| a * b).sum();
        (v, self.0.clone())
    }
}

/// Common surface used by training, evaluation and attacks.
pub trait Model: Send + Sync {
    fn n_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn forward(&self, x: &[f64], mode: &ExecMode) -> Result<Vec<f64>>;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    /// (loss, ∂loss/∂params) under noiseless execution.
    fn param_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<(f64, Vec<f64>)>;
    /// ∂loss/∂x under noiseless execution.
    fn input_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<Vec<f64>>;

    fn n_params(&self) -> usize {
        self.params().len()
    }

    fn predict(&self, x: &[f64], mode: &ExecMode) -> Result<usize> {
        Ok(argmax(&self.forward(x, mode)?))
    }
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Any of the supported classifiers; what checkpoints and the experiment
/// runner carry around.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Classifier {
    Qmlp(Qmlp),
    Pqc6(Pqc6),
    Cmlp(Cmlp),
}

impl Classifier {
    fn inner(&self) -> &dyn Model {
        match self {
            Classifier::Qmlp(m) => m,
            Classifier::Pqc6(m) => m,
            Classifier::Cmlp(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Model {
        match self {
            Classifier::Qmlp(m) => m,
            Classifier::Pqc6(m) => m,
            Classifier::Cmlp(m) => m,
        }
    }

    pub fn is_quantum(&self) -> bool {
        !matches!(self, Classifier::Cmlp(_))
    }
}

impl Model for Classifier {
    fn n_classes(&self) -> usize {
        self.inner().n_classes()
    }
    fn input_dim(&self) -> usize {
        self.inner().input_dim()
    }
    fn forward(&self, x: &[f64], mode: &ExecMode) -> Result<Vec<f64>> {
        self.inner().forward(x, mode)
    }
    fn params(&self) -> Vec<f64> {
        self.inner().params()
    }
    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.inner_mut().set_params(params)
    }
    fn param_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<(f64, Vec<f64>)> {
        self.inner().param_grad(x, target, loss)
    }
    fn input_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<Vec<f64>> {
        self.inner().input_grad(x, target, loss)
    }
}
