use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_len, ExecMode, LossFn, Model};
use crate::error::{Error, Result};

/// One hidden ReLU layer followed by a linear output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CmlpConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
}

impl CmlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.n_classes < 2 {
            return Err(Error::Config(format!("invalid CMLP shape {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmlpWeights {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<Vec<f64>>,
    pub b2: Vec<f64>,
}

pub type CmlpGrad = CmlpWeights;

impl CmlpWeights {
    pub fn zeros(config: &CmlpConfig) -> Self {
        Self {
            w1: vec![vec![0.0; config.input_dim]; config.hidden_dim],
            b1: vec![0.0; config.hidden_dim],
            w2: vec![vec![0.0; config.hidden_dim]; config.n_classes],
            b2: vec![0.0; config.n_classes],
        }
    }

    /// Each layer uniform in [−1/√fan_in, 1/√fan_in].
    pub fn random(config: &CmlpConfig, rng: &mut impl Rng) -> Self {
        let mut w = Self::zeros(config);
        let b1 = 1.0 / (config.input_dim as f64).sqrt();
        let b2 = 1.0 / (config.hidden_dim as f64).sqrt();
        for v in w.w1.iter_mut().flatten().chain(w.b1.iter_mut()) {
            *v = rng.random_range(-b1..=b1);
        }
        for v in w.w2.iter_mut().flatten().chain(w.b2.iter_mut()) {
            *v = rng.random_range(-b2..=b2);
        }
        w
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.w1
            .iter()
            .flatten()
            .chain(&self.b1)
            .chain(self.w2.iter().flatten())
            .chain(&self.b2)
            .copied()
            .collect()
    }

    fn load(&mut self, flat: &[f64]) -> Result<()> {
        check_len(self.flatten().len(), flat.len())?;
        let mut it = flat.iter().copied();
        for v in self
            .w1
            .iter_mut()
            .flatten()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut().flatten())
            .chain(self.b2.iter_mut())
        {
            *v = it.next().expect("length checked");
        }
        Ok(())
    }

    fn check_shape(&self, config: &CmlpConfig) -> Result<()> {
        let ok = self.w1.len() == config.hidden_dim
            && self.w1.iter().all(|r| r.len() == config.input_dim)
            && self.b1.len() == config.hidden_dim
            && self.w2.len() == config.n_classes
            && self.w2.iter().all(|r| r.len() == config.hidden_dim)
            && self.b2.len() == config.n_classes;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("CMLP weight shape does not match config".into()))
        }
    }
}

fn affine(w: &[Vec<f64>], b: &[f64], x: &[f64]) -> Vec<f64> {
    w.iter()
        .zip(b)
        .map(|(row, bi)| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + bi)
        .collect()
}

fn hidden(weights: &CmlpWeights, x: &[f64]) -> Vec<f64> {
    affine(&weights.w1, &weights.b1, x)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect()
}

pub fn cmlp_forward(config: &CmlpConfig, weights: &CmlpWeights, x: &[f64]) -> Result<Vec<f64>> {
    weights.check_shape(config)?;
    check_len(config.input_dim, x.len())?;
    let h = hidden(weights, x);
    Ok(affine(&weights.w2, &weights.b2, &h))
}

/// Returns (loss, parameter gradient, input gradient). ReLU'(0) is taken as 0.
pub fn cmlp_grad(
    config: &CmlpConfig,
    weights: &CmlpWeights,
    x: &[f64],
    target: &[f64],
    loss: &dyn LossFn,
) -> Result<(f64, CmlpGrad, Vec<f64>)> {
    weights.check_shape(config)?;
    check_len(config.input_dim, x.len())?;
    let pre = affine(&weights.w1, &weights.b1, x);
    let h: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
    let logits = affine(&weights.w2, &weights.b2, &h);
    let (value, g_out) = loss.loss_grad(&logits, target);

    let mut grad = CmlpWeights::zeros(config);
    let mut g_h = vec![0.0; config.hidden_dim];
    for (c, gc) in g_out.iter().enumerate() {
        grad.b2[c] = *gc;
        for (j, hj) in h.iter().enumerate() {
            grad.w2[c][j] = gc * hj;
            g_h[j] += gc * weights.w2[c][j];
        }
    }
    let mut g_x = vec![0.0; config.input_dim];
    for (j, pj) in pre.iter().enumerate() {
        let g = if *pj > 0.0 { g_h[j] } else { 0.0 };
        grad.b1[j] = g;
        for (i, xi) in x.iter().enumerate() {
            grad.w1[j][i] = g * xi;
            g_x[i] += g * weights.w1[j][i];
        }
    }
    Ok((value, grad, g_x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cmlp {
    pub config: CmlpConfig,
    pub weights: CmlpWeights,
}

impl Cmlp {
    pub fn new(config: CmlpConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let weights = CmlpWeights::random(&config, rng);
        Ok(Self { config, weights })
    }

    pub fn with_weights(config: CmlpConfig, weights: CmlpWeights) -> Result<Self> {
        config.validate()?;
        weights.check_shape(&config)?;
        Ok(Self { config, weights })
    }

    pub fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        hidden(&self.weights, x)
    }
}

impl Model for Cmlp {
    fn n_classes(&self) -> usize {
        self.config.n_classes
    }
    fn input_dim(&self) -> usize {
        self.config.input_dim
    }
    /// Classical: the execution mode is irrelevant.
    fn forward(&self, x: &[f64], _mode: &ExecMode) -> Result<Vec<f64>> {
        cmlp_forward(&self.config, &self.weights, x)
    }
    fn params(&self) -> Vec<f64> {
        self.weights.flatten()
    }
    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        self.weights.load(params)
    }
    fn param_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<(f64, Vec<f64>)> {
        let (l, g, _) = cmlp_grad(&self.config, &self.weights, x, target, loss)?;
        Ok((l, g.flatten()))
    }
    fn input_grad(&self, x: &[f64], target: &[f64], loss: &dyn LossFn) -> Result<Vec<f64>> {
        Ok(cmlp_grad(&self.config, &self.weights, x, target, loss)?.2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_give_bias() {
        let cfg = CmlpConfig {
            input_dim: 3,
            hidden_dim: 4,
            n_classes: 2,
        };
        let mut w = CmlpWeights::zeros(&cfg);
        w.b2 = vec![0.25, -1.5];
        assert_eq!(cmlp_forward(&cfg, &w, &[1.0, 2.0, 3.0]).unwrap(), vec![0.25, -1.5]);
    }

    #[test]
    fn identity_like_hidden() {
        let cfg = CmlpConfig {
            input_dim: 1,
            hidden_dim: 1,
            n_classes: 2,
        };
        let mut w = CmlpWeights::zeros(&cfg);
        w.w1 = vec![vec![1.0]];
        let m = Cmlp::with_weights(cfg, w).unwrap();
        assert_eq!(m.hidden_activations(&[2.0]), vec![2.0]);
        assert_eq!(m.hidden_activations(&[-2.0]), vec![0.0]);
    }

    #[test]
    fn shape_errors() {
        let cfg = CmlpConfig {
            input_dim: 2,
            hidden_dim: 2,
            n_classes: 2,
        };
        let w = CmlpWeights::zeros(&cfg);
        assert!(cmlp_forward(&cfg, &w, &[1.0]).is_err());
        let bad = CmlpConfig { hidden_dim: 0, ..cfg };
        assert!(bad.validate().is_err());
    }
}
