use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::encode::EncodingSpec;
use crate::error::{Error, Result};
use crate::qcore::{DensityMatrix, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoisonRecord {
    pub index: usize,
    pub original: usize,
    pub poisoned: usize,
}

/// Which wrong class a QUID-poisoned sample is relabelled to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuidTarget {
    /// Class whose centroid overlaps the sample's encoded state the least.
    #[default]
    LeastSimilar,
    /// Closest wrong class.
    MostSimilar,
}

fn check_ratio(ratio: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Config(format!("poison ratio {ratio} outside [0, 1]")));
    }
    Ok(())
}

/// round(ratio·N) distinct indices, uniformly chosen, in ascending order.
fn select<R: Rng + ?Sized>(n: usize, ratio: f64, rng: &mut R) -> Vec<usize> {
    let k = ((ratio * n as f64).round() as usize).min(n);
    let mut idx = rand::seq::index::sample(rng, n, k).into_vec();
    idx.sort_unstable();
    idx
}

fn relabel(dataset: &Dataset, records: &[PoisonRecord]) -> Dataset {
    let mut out = dataset.clone();
    for r in records {
        out.labels[r.index] = r.poisoned;
    }
    out
}

/// Untargeted flips: each selected label is replaced by one of the other
/// C−1 classes, uniformly.
pub fn label_flip<R: Rng + ?Sized>(dataset: &Dataset, ratio: f64, rng: &mut R) -> Result<(Dataset, Vec<PoisonRecord>)> {
    check_ratio(ratio)?;
    let c = dataset.n_classes;
    if c < 2 {
        return Err(Error::Config("label flipping needs at least 2 classes".into()));
    }
    let records: Vec<PoisonRecord> = select(dataset.len(), ratio, rng)
        .into_iter()
        .map(|index| {
            let original = dataset.labels[index];
            let r = rng.random_range(0..c - 1);
            PoisonRecord {
                index,
                original,
                poisoned: if r >= original { r + 1 } else { r },
            }
        })
        .collect();
    Ok((relabel(dataset, &records), records))
}

fn encoded_states(dataset: &Dataset, encoder: &EncodingSpec) -> Result<Vec<StateVector>> {
    dataset.features.par_iter().map(|x| encoder.prepare_state(x)).collect()
}

fn centroids_of(states: &[StateVector], labels: &[usize], n_classes: usize) -> Result<Vec<DensityMatrix>> {
    (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let members: Vec<StateVector> = states
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .map(|(s, _)| s.clone())
                .collect();
            if members.is_empty() {
                return Err(Error::EmptyClass(c));
            }
            DensityMatrix::mixture(&members)
        })
        .collect()
}

/// Mean projector of each class's encoder-only states.
pub fn class_centroids(dataset: &Dataset, encoder: &EncodingSpec) -> Result<Vec<DensityMatrix>> {
    let states = encoded_states(dataset, encoder)?;
    centroids_of(&states, &dataset.labels, dataset.n_classes)
}

/// Tr(ρ_c |ψ(x_i)><ψ(x_i)|) for every sample i and class c.
pub fn quid_similarity_table(dataset: &Dataset, encoder: &EncodingSpec) -> Result<Vec<Vec<f64>>> {
    let states = encoded_states(dataset, encoder)?;
    let centroids = centroids_of(&states, &dataset.labels, dataset.n_classes)?;
    states
        .par_iter()
        .map(|s| centroids.iter().map(|rho| rho.overlap_with(s)).collect())
        .collect()
}

/// Relabels a uniformly chosen round(ratio·N) subset using encoder-state
/// similarity to the class centroids. Ties go to the lowest class index.
pub fn quid_poison<R: Rng + ?Sized>(
    dataset: &Dataset,
    encoder: &EncodingSpec,
    ratio: f64,
    target: QuidTarget,
    rng: &mut R,
) -> Result<(Dataset, Vec<PoisonRecord>)> {
    check_ratio(ratio)?;
    if dataset.n_classes < 2 {
        return Err(Error::Config("QUID needs at least 2 classes".into()));
    }
    let table = quid_similarity_table(dataset, encoder)?;
    let records: Vec<PoisonRecord> = select(dataset.len(), ratio, rng)
        .into_iter()
        .map(|index| {
            let original = dataset.labels[index];
            let mut best: Option<(usize, f64)> = None;
            for (c, &s) in table[index].iter().enumerate() {
                if c == original {
                    continue;
                }
                let better = match (best, target) {
                    (None, _) => true,
                    (Some((_, b)), QuidTarget::LeastSimilar) => s < b,
                    (Some((_, b)), QuidTarget::MostSimilar) => s > b,
                };
                if better {
                    best = Some((c, s));
                }
            }
            PoisonRecord {
                index,
                original,
                poisoned: best.expect("at least one other class").0,
            }
        })
        .collect();
    Ok((relabel(dataset, &records), records))
}

const MANIFEST_HEADER: &str = "index\toriginal\tpoisoned";

/// One `index\toriginal\tpoisoned` line per record, after a header line.
pub fn write_poison_manifest(records: &[PoisonRecord]) -> String {
    let mut out = format!("{MANIFEST_HEADER}\n");
    for r in records {
        let _ = writeln!(out, "{}\t{}\t{}", r.index, r.original, r.poisoned);
    }
    out
}

pub fn parse_poison_manifest(text: &str) -> Result<Vec<PoisonRecord>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MANIFEST_HEADER) {
        return Err(Error::Format("poison manifest header missing".into()));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|e| Error::Format(format!("manifest line {}: {e}", n + 2)))
        };
        if fields.len() != 3 {
            return Err(Error::Format(format!("manifest line {}: expected 3 fields", n + 2)));
        }
        let r = PoisonRecord {
            index: parse(fields[0])?,
            original: parse(fields[1])?,
            poisoned: parse(fields[2])?,
        };
        if r.original == r.poisoned {
            return Err(Error::Format(format!("manifest line {}: label unchanged", n + 2)));
        }
        out.push(r);
    }
    Ok(out)
}
