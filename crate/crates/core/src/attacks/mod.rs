//! Label-flipping and encoder-similarity poisoning; FGSM / PGD evasion.

mod evasion;
mod poison;

pub use evasion::{fgsm, fgsm_dataset, pgd, pgd_dataset, sign};
pub use poison::{
    class_centroids, label_flip, parse_poison_manifest, quid_poison, quid_similarity_table, write_poison_manifest,
    PoisonRecord, QuidTarget,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ExecMode, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackKind {
    LabelFlip { ratio: f64 },
    Quid { ratio: f64 },
    Fgsm { epsilon: f64 },
    Pgd { epsilon: f64, step: f64, iters: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    pub seed: u64,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AttackKind::LabelFlip { ratio } | AttackKind::Quid { ratio } => {
                if !(0.0..=1.0).contains(&ratio) {
                    return Err(Error::Config(format!("poison ratio {ratio} outside [0, 1]")));
                }
            }
            AttackKind::Fgsm { epsilon } => check_epsilon(epsilon)?,
            AttackKind::Pgd { epsilon, step, iters } => {
                check_epsilon(epsilon)?;
                if !(step > 0.0) || iters < 1 {
                    return Err(Error::Config("PGD needs step > 0 and iters >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("perturbation budget {epsilon} must be >= 0")));
    }
    Ok(())
}

/// Percentage of attacked samples the model assigns to a class other than
/// their true label.
pub fn attack_success_rate<M: Model + ?Sized>(
    model: &M,
    attacked: &[Vec<f64>],
    true_labels: &[usize],
    mode: &ExecMode,
) -> Result<f64> {
    if attacked.is_empty() {
        return Err(Error::Empty("attacked set"));
    }
    if attacked.len() != true_labels.len() {
        return Err(Error::DimensionMismatch {
            expected: attacked.len(),
            got: true_labels.len(),
        });
    }
    let wrong: Vec<bool> = attacked
        .par_iter()
        .zip(true_labels.par_iter())
        .map(|(x, &y)| Ok(model.predict(x, mode)? != y))
        .collect::<Result<_>>()?;
    Ok(success_rate(&wrong))
}

/// 100 · (#true) / len
pub fn success_rate(misclassified: &[bool]) -> f64 {
    100.0 * misclassified.iter().filter(|b| **b).count() as f64 / misclassified.len() as f64
}
