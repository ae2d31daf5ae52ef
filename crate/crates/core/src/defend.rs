//! Loss-based sample reweighting by simulated annealing, and the defended
//! training loop built on it.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{ExecMode, Model};
use crate::rng::{substream, Stream};
use crate::train::{evaluate, per_sample_losses, EpochStats, Trainer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QDetectConfig {
    /// Step η of the smoothed weight update.
    pub wan_lr: f64,
    /// Budget penalty coefficient.
    pub anneal_coeff: f64,
    /// Inverse temperature, ramped linearly from .0 to .1.
    pub beta_range: (f64, f64),
    pub sweeps: usize,
    /// Target fraction of samples kept, κ.
    pub keep_fraction: f64,
    pub seed: u64,
}

impl Default for QDetectConfig {
    fn default() -> Self {
        Self {
            wan_lr: 0.05,
            anneal_coeff: 1.0,
            beta_range: (0.1, 2.0),
            sweeps: 50,
            keep_fraction: 0.7,
            seed: 0,
        }
    }
}

impl QDetectConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.beta_range;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(Error::Config(format!(
                "beta range ({lo}, {hi}) must be ascending and >= 0"
            )));
        }
        if self.sweeps == 0 {
            return Err(Error::Config("at least one annealing sweep is required".into()));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "keep fraction {} outside (0, 1]",
                self.keep_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.wan_lr) {
            return Err(Error::Config(format!("weight step {} outside [0, 1]", self.wan_lr)));
        }
        if self.anneal_coeff < 0.0 {
            return Err(Error::Config("annealing coefficient must be >= 0".into()));
        }
        Ok(())
    }
}

/// Per-sample training weights, each in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleWeights(pub Vec<f64>);

impl SampleWeights {
    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// E(m) = Σ m_i ℓ_i + α (Σ m_i − κN)²
pub fn mask_energy(mask: &[bool], losses: &[f64], coeff: f64, keep_fraction: f64) -> f64 {
    let target = keep_fraction * losses.len() as f64;
    let kept = mask.iter().filter(|m| **m).count() as f64;
    let loss: f64 = mask.iter().zip(losses).filter(|(m, _)| **m).map(|(_, l)| l).sum();
    loss + coeff * (kept - target).powi(2)
}

/// Single-spin-flip Metropolis from the all-ones mask, β ramped linearly
/// across sweeps. Returns the lowest-energy mask visited and its energy.
pub fn anneal_mask<R: Rng + ?Sized>(losses: &[f64], config: &QDetectConfig, rng: &mut R) -> Result<(Vec<bool>, f64)> {
    config.validate()?;
    if losses.is_empty() {
        return Err(Error::Empty("loss vector"));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::Format("non-finite sample loss".into()));
    }
    let n = losses.len();
    let alpha = config.anneal_coeff;
    let target = config.keep_fraction * n as f64;
    let mut mask = vec![true; n];
    let mut kept = n as f64;
    let mut energy = mask_energy(&mask, losses, alpha, config.keep_fraction);
    let mut best = (mask.clone(), energy);
    let (b0, b1) = config.beta_range;
    for sweep in 0..config.sweeps {
        let beta = if config.sweeps == 1 {
            b1
        } else {
            b0 + (b1 - b0) * sweep as f64 / (config.sweeps - 1) as f64
        };
        for i in 0..n {
            let d = if mask[i] { -1.0 } else { 1.0 };
            let delta = d * losses[i] + alpha * (2.0 * d * (kept - target) + 1.0);
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                mask[i] = !mask[i];
                kept += d;
                energy += delta;
                if energy < best.1 {
                    best = (mask.clone(), energy);
                }
            }
        }
    }
    // recompute to shed accumulated rounding
    let e = mask_energy(&best.0, losses, alpha, config.keep_fraction);
    Ok((best.0, e))
}

/// Anneals a keep-mask m for `losses` and returns (1−η)·prev + η·m, clamped
/// to [0, 1].
pub fn qdetect_weights<R: Rng + ?Sized>(
    losses: &[f64],
    prev: &SampleWeights,
    config: &QDetectConfig,
    rng: &mut R,
) -> Result<SampleWeights> {
    if prev.0.len() != losses.len() {
        return Err(Error::DimensionMismatch {
            expected: losses.len(),
            got: prev.0.len(),
        });
    }
    let (mask, _) = anneal_mask(losses, config, rng)?;
    let eta = config.wan_lr;
    Ok(SampleWeights(
        prev.0
            .iter()
            .zip(&mask)
            .map(|(w, &m)| ((1.0 - eta) * w + eta * if m { 1.0 } else { 0.0 }).clamp(0.0, 1.0))
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefendedRun {
    /// Weights used for each epoch, in order.
    pub weight_history: Vec<SampleWeights>,
    pub stats: Vec<EpochStats>,
}

/// Each epoch: score every sample under the current model, refresh weights,
/// train one weighted epoch.
pub fn defended_train<M: Model + Clone>(
    model: &mut M,
    train: &Dataset,
    test: Option<&Dataset>,
    trainer: &mut Trainer,
    qdetect: &QDetectConfig,
    mode: &ExecMode,
) -> Result<DefendedRun> {
    qdetect.validate()?;
    let mut weights = SampleWeights::ones(train.len());
    let mut run = DefendedRun {
        weight_history: Vec::with_capacity(trainer.config.epochs),
        stats: Vec::with_capacity(trainer.config.epochs),
    };
    for epoch in 0..trainer.config.epochs {
        let losses = per_sample_losses(model, train, trainer.config.label_smoothing, mode)?;
        let mut rng = substream(qdetect.seed, Stream::Defense, epoch as u64);
        weights = qdetect_weights(&losses, &weights, qdetect, &mut rng)?;
        let mut stats = trainer.train_epoch(model, train, weights.as_slice(), mode)?;
        if let Some(t) = test {
            stats.test_accuracy = Some(evaluate(model, t, &ExecMode::Pure)?.accuracy);
        }
        run.weight_history.push(weights.clone());
        run.stats.push(stats);
    }
    Ok(run)
}

/// `epoch\tw_0\tw_1...` rows, one per epoch.
pub fn format_weight_history(history: &[SampleWeights]) -> String {
    let n = history.first().map_or(0, |w| w.0.len());
    let mut out = String::from("epoch");
    for i in 0..n {
        let _ = write!(out, "\tw_{i}");
    }
    out.push('\n');
    for (e, w) in history.iter().enumerate() {
        let _ = write!(out, "{}", e + 1);
        for v in &w.0 {
            let _ = write!(out, "\t{v:.6}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn exhaustive(losses: &[f64], cfg: &QDetectConfig) -> (Vec<bool>, f64) {
        let n = losses.len();
        let mut best = (vec![], f64::INFINITY);
        for bits in 0u32..(1 << n) {
            let m: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
            let e = mask_energy(&m, losses, cfg.anneal_coeff, cfg.keep_fraction);
            if e < best.1 {
                best = (m, e);
            }
        }
        best
    }

    #[test]
    fn equal_losses_full_keep() {
        let cfg = QDetectConfig {
            keep_fraction: 1.0,
            ..Default::default()
        };
        let (m, _) = anneal_mask(&[0.3; 6], &cfg, &mut stream(1, Stream::Defense)).unwrap();
        // dropping one saves 0.3 in loss but costs α·1 in budget
        assert!(m.iter().all(|b| *b));
    }

    #[test]
    fn outlier_dropped_matches_exhaustive() {
        let mut losses = vec![1.0; 8];
        losses[5] = 100.0;
        let cfg = QDetectConfig {
            keep_fraction: 7.0 / 8.0,
            ..Default::default()
        };
        let (opt, e_opt) = exhaustive(&losses, &cfg);
        assert!(!opt[5]);
        // at α = 1, also dropping one unit-loss sample ties at energy 7
        let mut only_outlier = vec![true; 8];
        only_outlier[5] = false;
        assert!((e_opt - 7.0).abs() < 1e-12);
        assert!((mask_energy(&only_outlier, &losses, 1.0, 7.0 / 8.0) - e_opt).abs() < 1e-12);
        for seed in 0..10 {
            let (m, e) = anneal_mask(&losses, &cfg, &mut stream(seed, Stream::Defense)).unwrap();
            assert!(!m[5]);
            assert!((e - e_opt).abs() < 1e-12);
        }
    }

    #[test]
    fn full_step_copies_mask() {
        let mut losses = vec![0.5; 8];
        losses[2] = 50.0;
        let cfg = QDetectConfig {
            wan_lr: 1.0,
            keep_fraction: 7.0 / 8.0,
            ..Default::default()
        };
        let prev = SampleWeights(vec![0.3, 0.9, 0.1, 0.0, 1.0, 0.5, 0.5, 0.2]);
        let w = qdetect_weights(&losses, &prev, &cfg, &mut stream(2, Stream::Defense)).unwrap();
        let (m, _) = anneal_mask(&losses, &cfg, &mut stream(2, Stream::Defense)).unwrap();
        let want: Vec<f64> = m.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        assert_eq!(w.0, want);
    }

    #[test]
    fn never_worse_than_all_ones() {
        let losses = [3.0, 0.1, 2.2, 0.0, 7.5, 1.1, 0.4];
        let cfg = QDetectConfig::default();
        for seed in 0..20 {
            let (_, e) = anneal_mask(&losses, &cfg, &mut stream(seed, Stream::Defense)).unwrap();
            assert!(e <= mask_energy(&[true; 7], &losses, 1.0, 0.7) + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = QDetectConfig::default();
        let mut rng = stream(0, Stream::Defense);
        assert!(anneal_mask(&[], &cfg, &mut rng).is_err());
        assert!(anneal_mask(&[f64::NAN], &cfg, &mut rng).is_err());
        let bad = QDetectConfig {
            beta_range: (2.0, 0.1),
            ..cfg
        };
        assert!(bad.validate().is_err());
        let bad = QDetectConfig { sweeps: 0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn history_format() {
        let h = vec![SampleWeights(vec![1.0, 0.95]), SampleWeights(vec![0.5, 1.0])];
        let s = format_weight_history(&h);
        assert_eq!(s, "epoch\tw_0\tw_1\n1\t1.000000\t0.950000\n2\t0.500000\t1.000000\n");
    }
}
