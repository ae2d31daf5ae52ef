use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variance below this is reported as degenerate.
const ZERO_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row-orthonormal [k][D].
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Indices of components carrying (numerically) no variance.
    pub fn zero_variance_components(&self) -> Vec<usize> {
        self.explained_variance
            .iter()
            .enumerate()
            .filter(|(_, v)| **v <= ZERO_VARIANCE)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn transform_one(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((ci, xi), mi)| ci * (xi - mi))
                    .sum()
            })
            .collect()
    }

    pub fn inverse_one(&self, z: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (zi, c) in z.iter().zip(&self.components) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += zi * ci;
            }
        }
        out
    }
}

/// Top-k principal axes of the centered data: eigenvectors of the scatter
/// matrix XᵀX (the right singular vectors of X), largest first. Each axis is
/// signed so its largest-magnitude coordinate is positive.
pub fn pca_fit(train: &[Vec<f64>], k: usize) -> Result<PcaModel> {
    let n = train.len();
    let d = train.first().ok_or(Error::Empty("PCA training matrix"))?.len();
    if k > n.min(d) {
        return Err(Error::Config(format!(
            "cannot keep {k} components from {n} samples of dimension {d}"
        )));
    }
    if train.iter().any(|r| r.len() != d) {
        return Err(Error::Format("ragged PCA training matrix".into()));
    }
    let mut mean = vec![0.0; d];
    for row in train {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |r, c| train[r][c] - mean[c]);
    let scatter = centered.transpose() * &centered;
    let eig = SymmetricEigen::new(scatter);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let denom = (n.max(2) - 1) as f64;
    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(axis);
        explained_variance.push((eig.eigenvalues[idx] / denom).max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

/// (x − mean)·componentsᵀ per row.
pub fn pca_transform(model: &PcaModel, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    features
        .iter()
        .map(|x| {
            if x.len() != model.mean.len() {
                return Err(Error::DimensionMismatch {
                    expected: model.mean.len(),
                    got: x.len(),
                });
            }
            Ok(model.transform_one(x))
        })
        .collect()
}
