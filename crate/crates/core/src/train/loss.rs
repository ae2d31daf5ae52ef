use crate::error::{Error, Result};
use crate::model::LossFn;

/// (1−α)·onehot + α/C
pub fn smooth_labels(onehot: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("label smoothing {alpha} outside [0, 1)")));
    }
    let uniform = alpha / onehot.len() as f64;
    Ok(onehot.iter().map(|t| (1.0 - alpha) * t + uniform).collect())
}

pub fn one_hot(label: usize, n_classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; n_classes];
    v[label] = 1.0;
    v
}

/// log softmax with the max subtracted before exponentiation.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// −Σ t_i · log softmax(logits)_i
pub fn cross_entropy(logits: &[f64], target: &[f64]) -> f64 {
    log_softmax(logits)
        .iter()
        .zip(target)
        .map(|(lp, t)| if *t == 0.0 { 0.0 } else { -t * lp })
        .sum()
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CrossEntropy;

impl LossFn for CrossEntropy {
    fn loss_grad(&self, logits: &[f64], target: &[f64]) -> (f64, Vec<f64>) {
        let lp = log_softmax(logits);
        let mass: f64 = target.iter().sum();
        let loss = lp
            .iter()
            .zip(target)
            .map(|(l, t)| if *t == 0.0 { 0.0 } else { -t * l })
            .sum();
        let grad = lp.iter().zip(target).map(|(l, t)| mass * l.exp() - t).collect();
        (loss, grad)
    }
}
