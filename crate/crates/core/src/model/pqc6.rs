use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hybrid::{self, HybridCore, LinearHead};
use super::tape::{AngleSource, GradMethod, ParamCircuit};
use super::{check_len, ExecMode, LossFn, Model};
use crate::error::{Error, Result};
use crate::qcore::{CircuitSpec, GateOp};

pub const PQC6_QUBITS: usize = 4;
pub const PQC6_LAYERS: usize = 6;

/// Four qubits, six layers, dense-angle encoding of eight features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pqc6Config {
    pub n_qubits: usize,
    pub layers: usize,
    pub n_classes: usize,
}

impl Pqc6Config {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_qubits: PQC6_QUBITS,
            layers: PQC6_LAYERS,
            n_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 || self.layers < 1 || self.n_classes < 2 {
            return Err(Error::Config(format!("invalid PQC shape {self:?}")));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        2 * self.n_qubits
    }

    /// Ordered (control, target) pairs, ascending.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_qubits;
        (0..n)
            .flat_map(|c| (0..n).filter(move |&t| t != c).map(move |t| (c, t)))
            .collect()
    }

    pub fn params_per_layer(&self) -> usize {
        3 * self.n_qubits + self.n_qubits * (self.n_qubits - 1)
    }

    pub fn n_quantum_params(&self) -> usize {
        self.layers * self.params_per_layer()
    }
}

/// Per layer: `rotations[q] = [RY, RZ, RX]` and one CRX angle per ordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pqc6Params {
    pub rotations: Vec<Vec<[f64; 3]>>,
    pub entanglers: Vec<Vec<f64>>,
    pub head: LinearHead,
}

impl Pqc6Params {
    pub fn zeros(config: &Pqc6Config) -> Self {
        let n = config.n_qubits;
        Self {
            rotations: vec![vec![[0.0; 3]; n]; config.layers],
            entanglers: vec![vec![0.0; n * (n - 1)]; config.layers],
            head: LinearHead::zeros(config.n_classes, n),
        }
    }

    pub fn random(config: &Pqc6Config, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(config);
        for layer in 0..config.layers {
            for angles in p.rotations[layer].iter_mut() {
                for a in angles.iter_mut() {
                    *a = rng.random_range(-PI..=PI);
                }
            }
            for a in p.entanglers[layer].iter_mut() {
                *a = rng.random_range(-PI..=PI);
            }
        }
        p.head = LinearHead::random(config.n_classes, config.n_qubits, rng);
        p
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (rot, ent) in self.rotations.iter().zip(&self.entanglers) {
            out.extend(rot.iter().flatten());
            out.extend_from_slice(ent);
        }
        self.head.flatten_into(&mut out);
        out
    }

    fn load(&mut self, flat: &[f64]) -> Result<()> {
        let nq: usize = self
            .rotations
            .iter()
            .zip(&self.entanglers)
            .map(|(r, e)| 3 * r.len() + e.len())
            .sum();
        check_len(nq + self.head.n_params(), flat.len())?;
        let mut it = flat[..nq].iter().copied();
        for (rot, ent) in self.rotations.iter_mut().zip(self.entanglers.iter_mut()) {
            for a in rot.iter_mut().flatten() {
                *a = it.next().expect("length checked");
            }
            for a in ent.iter_mut() {
                *a = it.next().expect("length checked");
            }
        }
        self.head.load(&flat[nq..]);
        Ok(())
    }
}

fn build_tape(config: &Pqc6Config, params: &Pqc6Params, x: &[f64]) -> Result<ParamCircuit> {
    if x.len() != config.n_features() {
        return Err(Error::Encoding(format!(
            "PQC expects {} features, got {}",
            config.n_features(),
            x.len()
        )));
    }
    let n = config.n_qubits;
    let pairs = config.pairs();
    if params.rotations.len() != config.layers
        || params.entanglers.len() != config.layers
        || params.rotations.iter().any(|r| r.len() != n)
        || params.entanglers.iter().any(|e| e.len() != pairs.len())
    {
        return Err(Error::Config("PQC parameter shape does not match config".into()));
    }
    let mut tape = ParamCircuit::new(n, config.n_quantum_params(), config.n_features());
    for (q, pair) in x.chunks_exact(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let fa = |scale| AngleSource::Feature { index: 2 * q, scale };
        let fb = |scale| AngleSource::Feature {
            index: 2 * q + 1,
            scale,
        };
        tape.push(GateOp::rz(q, a), fa(1.0));
        tape.push(GateOp::rx(q, b), fb(1.0));
        tape.push(GateOp::rz(q, 0.5 * a), fa(0.5));
        tape.push(GateOp::rx(q, 0.5 * b), fb(0.5));
    }
    let per_layer = config.params_per_layer();
    for l in 0..config.layers {
        let base = l * per_layer;
        for (q, angles) in params.rotations[l].iter().enumerate() {
            tape.push(GateOp::ry(q, angles[0]), AngleSource::Param(base + 3 * q));
            tape.push(GateOp::rz(q, angles[1]), AngleSource::Param(base + 3 * q + 1));
            tape.push(GateOp::rx(q, angles[2]), AngleSource::Param(base + 3 * q + 2));
        }
        for (k, (&(c, t), &angle)) in pairs.iter().zip(&params.entanglers[l]).enumerate() {
            tape.push(GateOp::crx(c, t, angle), AngleSource::Param(base + 3 * n + k));
        }
    }
    Ok(tape)
}

/// Dense-angle encoding once, then per layer RY/RZ/RX on every qubit and a
/// CRX on every ordered qubit pair.
pub fn build_pqc6_circuit(config: &Pqc6Config, params: &Pqc6Params, x: &[f64]) -> Result<CircuitSpec> {
    config.validate()?;
    Ok(build_tape(config, params, x)?.circuit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pqc6 {
    pub config: Pqc6Config,
    pub params: Pqc6Params,
}

impl Pqc6 {
    pub fn new(config: Pqc6Config, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let params = Pqc6Params::random(&config, rng);
        Ok(Self { config, params })
    }

    pub fn with_params(config: Pqc6Config, params: Pqc6Params) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, params })
    }

    pub fn grad_input(&self, x: &[f64], target: &[f64], loss: &dyn LossFn, method: GradMethod) -> Result<Vec<f64>> {
        Ok(hybrid::gradients(self, x, target, loss, method)?.input)
    }

    pub fn grad_params_flat(
        &self,
        x: &[f64],
        target: &[f64],
        loss: &dyn LossFn,
        method: GradMethod,
    ) -> Result<(f64, Vec<f64>)> {
        let g = hybrid::gradients(self, x, target, loss, method)?;
        Ok((g.loss, g.params))
    }
}

impl HybridCore for Pqc6 {
    fn head(&self) -> &LinearHead {
        &self.params.head
    }
    fn tape(&self, x: &[f64]) -> Result<ParamCircuit> {
        build_tape(&self.config, &self.params, x)
    }
    fn n_features(&self) -> usize {
        self.config.n_features()
    }
}

impl Model for Pqc6 {
    fn n_classes(&self) -> usize {
        self.config.n_classes
    }
    fn input_dim(&self) -> usize {
        self.config.n_features()
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
        self.grad_params_flat(x, target, loss, GradMethod::Adjoint)
    }
    fn input_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<Vec<f64>> {
        self.grad_input(x, target, loss, GradMethod::Adjoint)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::EncodingSpec;
    use crate::qcore::{run_circuit, state_fidelity, SimMode};
    use crate::rng::{stream, Stream};

    #[test]
    fn parameter_counts() {
        let cfg = Pqc6Config::new(4);
        assert_eq!(cfg.params_per_layer(), 24);
        assert_eq!(cfg.pairs().len(), 12);
        assert_eq!(cfg.n_quantum_params(), 144);
        let p = Pqc6Params::random(&cfg, &mut stream(0, Stream::Init));
        assert_eq!(p.flatten().len(), 144 + 4 * 4 + 4);
    }

    #[test]
    fn zero_params_reduce_to_encoding() {
        let cfg = Pqc6Config::new(4);
        let x = [0.3, -1.0, 2.0, 0.5, -2.5, 1.5, 0.0, 3.0];
        let c = build_pqc6_circuit(&cfg, &Pqc6Params::zeros(&cfg), &x).unwrap();
        let full = run_circuit(&c, SimMode::Pure).unwrap().into_pure().unwrap();
        let enc = EncodingSpec::dense_angle(4).prepare_state(&x).unwrap();
        assert!((state_fidelity(&full, &enc).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_feature_length() {
        let cfg = Pqc6Config::new(4);
        assert!(build_pqc6_circuit(&cfg, &Pqc6Params::zeros(&cfg), &[0.0; 7]).is_err());
    }

    #[test]
    fn ascending_pair_order() {
        let pairs = Pqc6Config::new(2).pairs();
        assert_eq!(&pairs[..4], &[(0, 1), (0, 2), (0, 3), (1, 0)]);
    }
}
