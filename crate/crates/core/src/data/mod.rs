//! Datasets, loaders, PCA and sampling.

mod csv_loader;
mod idx;
mod pca;

pub use csv_loader::load_csv_features;
pub use idx::{load_mnist_idx, read_idx_images, read_idx_labels, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};
pub use pca::{pca_fit, pca_transform, PcaModel};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    /// Checks shape, finiteness and label range.
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = features.first() {
            let dim = first.len();
            for row in &features {
                if row.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: row.len(),
                    });
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Format("non-finite feature value".into()));
                }
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Format(format!("label {bad} outside [0, {n_classes})")));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Keeps only samples whose label is below `n`.
    pub fn first_classes(&self, n: usize) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] < n).collect();
        let mut out = self.subset(&idx);
        out.n_classes = n.min(self.n_classes);
        out
    }

    pub fn map_features(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        Self {
            features: self.features.iter().map(|x| f(x)).collect(),
            labels: self.labels.clone(),
            n_classes: self.n_classes,
        }
    }
}

/// Disjoint per-class train/test draws of exactly the requested sizes.
/// Output order is by class, then by draw.
pub fn stratified_sample(
    dataset: &Dataset,
    per_class_train: usize,
    per_class_test: usize,
    rng: &mut impl Rng,
) -> Result<(Dataset, Dataset)> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes];
    for (i, &l) in dataset.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let need = per_class_train + per_class_test;
    let mut train = Vec::with_capacity(per_class_train * dataset.n_classes);
    let mut test = Vec::with_capacity(per_class_test * dataset.n_classes);
    for (class, mut idx) in by_class.into_iter().enumerate() {
        if idx.len() < need {
            return Err(Error::InsufficientClass {
                class,
                available: idx.len(),
                requested: need,
            });
        }
        idx.shuffle(rng);
        train.extend_from_slice(&idx[..per_class_train]);
        test.extend_from_slice(&idx[per_class_train..need]);
    }
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Gaussian clusters with isotropic standard deviation `spread` around
/// centers drawn uniformly from [−1, 1]^dim.
pub fn synth_blobs(n_classes: usize, dim: usize, per_class: usize, spread: f64, rng: &mut impl Rng) -> Result<Dataset> {
    if n_classes < 2 {
        return Err(Error::Config("blobs need at least two classes".into()));
    }
    if !(spread >= 0.0) {
        return Err(Error::Config(format!("negative spread {spread}")));
    }
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = Vec::with_capacity(n_classes * per_class);
    let mut labels = Vec::with_capacity(n_classes * per_class);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_class {
            features.push(center.iter().map(|&m| m + spread * noise.sample(rng)).collect());
            labels.push(c);
        }
    }
    Dataset::new(features, labels, n_classes)
}
