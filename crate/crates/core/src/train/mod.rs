//! Losses, optimizers and the mini-batch training loop.

mod adam;
mod loss;
mod metrics;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use loss::{cross_entropy, log_softmax, one_hot, smooth_labels, CrossEntropy};
pub use metrics::{evaluate, predict_all, Metrics};

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{spsa_grad, ExecMode, LossFn, Model};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Adam,
    /// Plain SPSA descent with fixed step size and perturbation.
    Spsa {
        step: f64,
        perturb: f64,
    },
}

impl Optimizer {
    pub const SPSA_DEFAULT: Optimizer = Optimizer::Spsa {
        step: 0.01,
        perturb: 0.02,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub label_smoothing: f64,
    /// Used for noiseless training; noisy training always falls back to SPSA.
    pub optimizer: Optimizer,
    pub spsa: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            weight_decay: 1e-4,
            batch_size: 64,
            epochs: 30,
            label_smoothing: 0.0,
            optimizer: Optimizer::Adam,
            spsa: Optimizer::SPSA_DEFAULT,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(Error::Config(format!(
                "label smoothing {} outside [0, 1)",
                self.label_smoothing
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight decay must be non-negative".into()));
        }
        for opt in [self.optimizer, self.spsa] {
            if let Optimizer::Spsa { step, perturb } = opt {
                if !(step > 0.0 && perturb > 0.0) {
                    return Err(Error::Config("SPSA step and perturbation must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn target(&self, label: usize, n_classes: usize) -> Vec<f64> {
        smooth_labels(&one_hot(label, n_classes), self.label_smoothing).expect("validated smoothing")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Weight-mass mean of per-sample losses seen during the epoch.
    pub train_loss: f64,
    pub batches: usize,
    pub test_accuracy: Option<f64>,
}

/// Optimizer state carried across epochs.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub adam: Option<AdamState>,
    pub epoch: usize,
}

impl Trainer {
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            adam: None,
            epoch: 0,
        })
    }

    /// One pass over a seed-determined shuffle of `dataset`. Per-sample losses
    /// are weighted and reduced as Σ w·ℓ / Σ w within each batch; a batch with
    /// no weight mass is skipped.
    pub fn train_epoch<M: Model + Clone>(
        &mut self,
        model: &mut M,
        dataset: &Dataset,
        sample_weights: &[f64],
        mode: &ExecMode,
    ) -> Result<EpochStats> {
        if dataset.is_empty() {
            return Err(Error::Empty("training set"));
        }
        if sample_weights.len() != dataset.len() {
            return Err(Error::DimensionMismatch {
                expected: dataset.len(),
                got: sample_weights.len(),
            });
        }
        let cfg = self.config;
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut substream(cfg.seed, Stream::Shuffle, self.epoch as u64));
        let mut spsa_rng = substream(cfg.seed, Stream::Spsa, self.epoch as u64);
        let targets: Vec<Vec<f64>> = dataset
            .labels
            .iter()
            .map(|&l| cfg.target(l, dataset.n_classes))
            .collect();

        let mut loss_sum = 0.0;
        let mut mass_sum = 0.0;
        let mut batches = 0;
        for batch in order.chunks(cfg.batch_size) {
            let mass: f64 = batch.iter().map(|&i| sample_weights[i]).sum();
            if mass <= 0.0 {
                continue;
            }
            let optimizer = if mode.is_pure() { cfg.optimizer } else { cfg.spsa };
            match optimizer {
                Optimizer::Adam => {
                    if !mode.is_pure() {
                        return Err(Error::RequiresPureMode);
                    }
                    let per_sample: Vec<(f64, Vec<f64>)> = batch
                        .par_iter()
                        .map(|&i| model.param_grad(&dataset.features[i], &targets[i], &CrossEntropy))
                        .collect::<Result<_>>()?;
                    let mut grad = vec![0.0; per_sample[0].1.len()];
                    for (&i, (l, g)) in batch.iter().zip(&per_sample) {
                        let w = sample_weights[i];
                        if w == 0.0 {
                            continue;
                        }
                        loss_sum += w * l;
                        for (acc, gi) in grad.iter_mut().zip(g) {
                            *acc += w * gi;
                        }
                    }
                    grad.iter_mut().for_each(|g| *g /= mass);
                    let mut params = model.params();
                    let state = self.adam.get_or_insert_with(|| AdamState::new(params.len()));
                    adam_step(&mut params, &grad, state, cfg.lr, cfg.weight_decay)?;
                    model.set_params(&params)?;
                }
                Optimizer::Spsa { step, perturb } => {
                    let base = model.params();
                    let snapshot = model.clone();
                    let batch_loss = |theta: &[f64]| -> Result<f64> {
                        let mut probe = snapshot.clone();
                        probe.set_params(theta)?;
                        weighted_loss(&probe, dataset, &targets, batch, sample_weights, mode)
                    };
                    loss_sum += mass * batch_loss(&base)?;
                    let g = spsa_grad(&base, perturb, &mut spsa_rng, batch_loss)?;
                    let updated: Vec<f64> = base.iter().zip(&g).map(|(p, gi)| p - step * gi).collect();
                    model.set_params(&updated)?;
                }
            }
            mass_sum += mass;
            batches += 1;
        }
        self.epoch += 1;
        Ok(EpochStats {
            epoch: self.epoch,
            train_loss: if mass_sum > 0.0 { loss_sum / mass_sum } else { 0.0 },
            batches,
            test_accuracy: None,
        })
    }

    /// Runs the configured number of epochs with unit sample weights,
    /// optionally scoring `test` after each epoch (noiselessly).
    pub fn fit<M: Model + Clone>(
        &mut self,
        model: &mut M,
        train: &Dataset,
        test: Option<&Dataset>,
        mode: &ExecMode,
    ) -> Result<Vec<EpochStats>> {
        let weights = vec![1.0; train.len()];
        let mut log = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            let mut stats = self.train_epoch(model, train, &weights, mode)?;
            if let Some(t) = test {
                stats.test_accuracy = Some(evaluate(model, t, &ExecMode::Pure)?.accuracy);
            }
            log.push(stats);
        }
        Ok(log)
    }
}

/// Σ w·ℓ / Σ w over `batch`.
fn weighted_loss<M: Model + ?Sized>(
    model: &M,
    dataset: &Dataset,
    targets: &[Vec<f64>],
    batch: &[usize],
    weights: &[f64],
    mode: &ExecMode,
) -> Result<f64> {
    let losses: Vec<f64> = batch
        .par_iter()
        .map(|&i| {
            let logits = model.forward(&dataset.features[i], mode)?;
            Ok(CrossEntropy.loss(&logits, &targets[i]))
        })
        .collect::<Result<_>>()?;
    let mass: f64 = batch.iter().map(|&i| weights[i]).sum();
    let total: f64 = batch.iter().zip(&losses).map(|(&i, l)| weights[i] * l).sum();
    Ok(total / mass)
}

/// Per-sample cross-entropy against the (optionally smoothed) labels.
pub fn per_sample_losses<M: Model + ?Sized>(
    model: &M,
    dataset: &Dataset,
    label_smoothing: f64,
    mode: &ExecMode,
) -> Result<Vec<f64>> {
    dataset
        .features
        .par_iter()
        .zip(dataset.labels.par_iter())
        .map(|(x, &y)| {
            let target = smooth_labels(&one_hot(y, dataset.n_classes), label_smoothing)?;
            Ok(cross_entropy(&model.forward(x, mode)?, &target))
        })
        .collect()
}

/// `epoch\ttrain_loss\ttest_acc` per line, with a header.
pub fn format_training_log(log: &[EpochStats]) -> String {
    let mut out = String::from("epoch\ttrain_loss\ttest_acc\n");
    for s in log {
        let acc = s.test_accuracy.map_or_else(|| "NA".to_string(), |a| format!("{a:.4}"));
        let _ = writeln!(out, "{}\t{:.6}\t{}", s.epoch, s.train_loss, acc);
    }
    out
}
