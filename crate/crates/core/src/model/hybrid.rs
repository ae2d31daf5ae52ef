use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tape::{GradMethod, ParamCircuit};
use super::{check_len, ExecMode, LossFn};
use crate::error::Result;

/// logits = W·z + b
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl LinearHead {
    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        Self {
            w: vec![vec![0.0; n_in]; n_out],
            b: vec![0.0; n_out],
        }
    }

    /// Weights and biases uniform in [−1/√n_in, 1/√n_in].
    pub fn random(n_out: usize, n_in: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        let mut draw = || rng.random_range(-bound..=bound);
        let w = (0..n_out).map(|_| (0..n_in).map(|_| draw()).collect()).collect();
        let b = (0..n_out).map(|_| draw()).collect();
        Self { w, b }
    }

    pub fn n_out(&self) -> usize {
        self.b.len()
    }

    pub fn n_in(&self) -> usize {
        self.w.first().map_or(0, Vec::len)
    }

    pub fn n_params(&self) -> usize {
        self.n_out() * (self.n_in() + 1)
    }

    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .map(|(row, b)| row.iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    /// Wᵀ·g
    pub fn backprop(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_in()];
        for (row, gi) in self.w.iter().zip(g) {
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * gi;
            }
        }
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for row in &self.w {
            out.extend_from_slice(row);
        }
        out.extend_from_slice(&self.b);
    }

    pub fn load(&mut self, flat: &[f64]) {
        let n_in = self.n_in();
        let (w, b) = flat.split_at(self.n_out() * n_in);
        for (row, chunk) in self.w.iter_mut().zip(w.chunks_exact(n_in.max(1))) {
            row.copy_from_slice(&chunk[..n_in]);
        }
        self.b.copy_from_slice(b);
    }

    /// (∂L/∂W flattened row-major, ∂L/∂b) for upstream logit gradient `g`.
    pub fn param_grad(&self, z: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for gi in g {
            out.extend(z.iter().map(|v| gi * v));
        }
        out.extend_from_slice(g);
        out
    }
}

/// Circuit + Pauli-Z readout + linear head.
pub(crate) trait HybridCore {
    fn head(&self) -> &LinearHead;
    fn tape(&self, x: &[f64]) -> Result<ParamCircuit>;
    fn n_features(&self) -> usize;
}

pub(crate) fn forward(core: &impl HybridCore, x: &[f64], mode: &ExecMode) -> Result<Vec<f64>> {
    check_len(core.n_features(), x.len())?;
    let z = core.tape(x)?.expectations(mode.noise())?;
    Ok(core.head().apply(&z))
}

pub(crate) struct HybridGrad {
    pub loss: f64,
    /// quantum parameters followed by head parameters
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

pub(crate) fn gradients(
    core: &impl HybridCore,
    x: &[f64],
    target: &[f64],
    loss: &dyn LossFn,
    method: GradMethod,
) -> Result<HybridGrad> {
    check_len(core.n_features(), x.len())?;
    let tape = core.tape(x)?;
    let z = tape.expectations(None)?;
    let logits = core.head().apply(&z);
    let (value, g_logits) = loss.loss_grad(&logits, target);
    let g_z = core.head().backprop(&g_logits);
    let tg = tape.gradient(&g_z, method)?;
    let mut params = tg.params;
    params.extend(core.head().param_grad(&z, &g_logits));
    Ok(HybridGrad {
        loss: value,
        params,
        input: tg.features,
    })
}
