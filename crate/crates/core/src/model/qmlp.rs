use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hybrid::{self, HybridCore, LinearHead};
use super::tape::{amplitude_initial, AngleSource, GradMethod, ParamCircuit};
use super::{check_len, ExecMode, LossFn, Model};
use crate::encode::{EncodingKind, EncodingSpec};
use crate::error::{Error, Result};
use crate::qcore::{CircuitSpec, GateOp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QmlpConfig {
    pub n_qubits: usize,
    pub layers: usize,
    pub encoding: EncodingSpec,
    /// Re-encode the input at the start of every layer (angle encoding only).
    pub reupload: bool,
    pub n_classes: usize,
    /// Number of input features; defaults to one per qubit for angle
    /// encoding.
    pub n_features: usize,
}

impl QmlpConfig {
    pub fn angle(n_qubits: usize, layers: usize, n_classes: usize) -> Self {
        Self {
            n_qubits,
            layers,
            encoding: EncodingSpec::angle(n_qubits),
            reupload: true,
            n_classes,
            n_features: n_qubits,
        }
    }

    pub fn amplitude(n_qubits: usize, layers: usize, n_classes: usize, n_features: usize) -> Self {
        Self {
            n_qubits,
            layers,
            encoding: EncodingSpec::amplitude(n_qubits),
            reupload: false,
            n_classes,
            n_features,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 1 {
            return Err(Error::Config("QMLP needs at least one layer".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Config("QMLP needs at least two classes".into()));
        }
        if self.encoding.n_qubits != self.n_qubits {
            return Err(Error::Config("encoding and model qubit counts differ".into()));
        }
        if self.encoding.kind == EncodingKind::DenseAngle {
            return Err(Error::Config("QMLP supports angle or amplitude encoding".into()));
        }
        self.encoding.check_len(self.n_features)
    }

    pub fn n_quantum_params(&self) -> usize {
        self.layers * self.n_qubits * 3
    }
}

/// θ[layer][qubit] = [RY angle, RZ angle, CRX angle (qubit → qubit+1)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmlpParams {
    pub theta: Vec<Vec<[f64; 3]>>,
    pub head: LinearHead,
}

impl QmlpParams {
    pub fn zeros(config: &QmlpConfig) -> Self {
        Self {
            theta: vec![vec![[0.0; 3]; config.n_qubits]; config.layers],
            head: LinearHead::zeros(config.n_classes, config.n_qubits),
        }
    }

    /// Angles uniform in [−π, π]; head uniform in [−1/√n, 1/√n].
    pub fn random(config: &QmlpConfig, rng: &mut impl Rng) -> Self {
        let theta = (0..config.layers)
            .map(|_| {
                (0..config.n_qubits)
                    .map(|_| std::array::from_fn(|_| rng.random_range(-PI..=PI)))
                    .collect()
            })
            .collect();
        let head = LinearHead::random(config.n_classes, config.n_qubits, rng);
        Self { theta, head }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.theta.iter().flatten().flatten().copied().collect();
        self.head.flatten_into(&mut out);
        out
    }

    /// Same shape as `self`, filled from `flat`.
    pub fn unflatten_like(&self, flat: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.load(flat)?;
        Ok(out)
    }

    fn load(&mut self, flat: &[f64]) -> Result<()> {
        let nq: usize = self.theta.iter().map(|l| l.len() * 3).sum();
        check_len(nq + self.head.n_params(), flat.len())?;
        let mut it = flat[..nq].iter();
        for angles in self.theta.iter_mut().flatten() {
            for a in angles.iter_mut() {
                *a = *it.next().expect("length checked");
            }
        }
        self.head.load(&flat[nq..]);
        Ok(())
    }
}

fn param_index(config: &QmlpConfig, layer: usize, qubit: usize, slot: usize) -> usize {
    (layer * config.n_qubits + qubit) * 3 + slot
}

fn build_tape(config: &QmlpConfig, params: &QmlpParams, x: &[f64]) -> Result<ParamCircuit> {
    check_len(config.n_features, x.len())?;
    if params.theta.len() != config.layers || params.theta.iter().any(|l| l.len() != config.n_qubits) {
        return Err(Error::Config("QMLP parameter shape does not match config".into()));
    }
    let n = config.n_qubits;
    let mut tape = ParamCircuit::new(n, config.n_quantum_params(), config.n_features);
    let amplitude = config.encoding.kind == EncodingKind::Amplitude;
    if amplitude {
        tape.circuit.initial = Some(amplitude_initial(x, n)?);
        tape.amplitude_input = Some(x.to_vec());
    }
    for (l, layer) in params.theta.iter().enumerate() {
        if !amplitude && (l == 0 || config.reupload) {
            for (q, &v) in x.iter().enumerate() {
                tape.push(GateOp::ry(q, v), AngleSource::Feature { index: q, scale: 1.0 });
            }
        }
        for (q, angles) in layer.iter().enumerate() {
            tape.push(
                GateOp::ry(q, angles[0]),
                AngleSource::Param(param_index(config, l, q, 0)),
            );
            tape.push(
                GateOp::rz(q, angles[1]),
                AngleSource::Param(param_index(config, l, q, 1)),
            );
        }
        if n > 1 {
            for (q, angles) in layer.iter().enumerate() {
                tape.push(
                    GateOp::crx(q, (q + 1) % n, angles[2]),
                    AngleSource::Param(param_index(config, l, q, 2)),
                );
            }
        }
    }
    Ok(tape)
}

/// Angle: per layer RY(x) encoding (every layer when re-uploading), RY/RZ
/// per qubit, then a CRX ring q → q+1. Amplitude: state prepared once.
pub fn build_qmlp_circuit(config: &QmlpConfig, params: &QmlpParams, x: &[f64]) -> Result<CircuitSpec> {
    config.validate()?;
    Ok(build_tape(config, params, x)?.circuit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qmlp {
    pub config: QmlpConfig,
    pub params: QmlpParams,
}

impl Qmlp {
    pub fn new(config: QmlpConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let params = QmlpParams::random(&config, rng);
        Ok(Self { config, params })
    }

    pub fn with_params(config: QmlpConfig, params: QmlpParams) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, params })
    }

    /// (loss, gradient shaped like the parameters).
    pub fn grad_params(
        &self,
        x: &[f64],
        target: &[f64],
        loss: &dyn LossFn,
        method: GradMethod,
    ) -> Result<(f64, QmlpParams)> {
        let g = hybrid::gradients(self, x, target, loss, method)?;
        Ok((g.loss, self.params.unflatten_like(&g.params)?))
    }

    pub fn grad_input(&self, x: &[f64], target: &[f64], loss: &dyn LossFn, method: GradMethod) -> Result<Vec<f64>> {
        Ok(hybrid::gradients(self, x, target, loss, method)?.input)
    }
}

impl HybridCore for Qmlp {
    fn head(&self) -> &LinearHead {
        &self.params.head
    }
    fn tape(&self, x: &[f64]) -> Result<ParamCircuit> {
        build_tape(&self.config, &self.params, x)
    }
    fn n_features(&self) -> usize {
        self.config.n_features
    }
}

impl Model for Qmlp {
    fn n_classes(&self) -> usize {
        self.config.n_classes
    }
    fn input_dim(&self) -> usize {
        self.config.n_features
    }
    fn forward(&self, x: &[f64], mode: &ExecMode) -> Result<Vec<f64>> {
        hybrid::forward(self, x, mode)
    }
    fn params(&self) -> Vec<f64> {
        self.params.flatten()
    }
    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.params.load(params)
    }
    fn param_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<(f64, Vec<f64>)> {
        let g = hybrid::gradients(self, x, target, loss, GradMethod::Adjoint)?;
        Ok((g.loss, g.params))
    }
    fn input_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<Vec<f64>> {
        self.grad_input(x, target, loss, GradMethod::Adjoint)
    }
}
