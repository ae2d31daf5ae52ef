use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{ExecMode, Model};

/// Percentages in [0, 100]. F1, FPR and FNR are one-vs-rest macro averages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub fpr: f64,
    pub fnr: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::Empty("evaluation set"));
        }
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                got: predicted.len(),
            });
        }
        let n = truth.len();
        let correct = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
        let (mut f1, mut fpr, mut fnr) = (0.0, 0.0, 0.0);
        for c in 0..n_classes {
            let mut tp = 0;
            let mut fp = 0;
            let mut fneg = 0;
            for (&t, &p) in truth.iter().zip(predicted) {
                match (t == c, p == c) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fneg += 1,
                    (false, false) => {}
                }
            }
            let tn = n - tp - fp - fneg;
            f1 += ratio(2 * tp, 2 * tp + fp + fneg);
            fpr += ratio(fp, fp + tn);
            fnr += ratio(fneg, fneg + tp);
        }
        let k = n_classes as f64;
        Ok(Self {
            accuracy: 100.0 * ratio(correct, n),
            macro_f1: 100.0 * f1 / k,
            fpr: 100.0 * fpr / k,
            fnr: 100.0 * fnr / k,
        })
    }
}

pub fn predict_all<M: Model + ?Sized>(model: &M, features: &[Vec<f64>], mode: &ExecMode) -> Result<Vec<usize>> {
    features.par_iter().map(|x| model.predict(x, mode)).collect()
}

pub fn evaluate<M: Model + ?Sized>(model: &M, dataset: &Dataset, mode: &ExecMode) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let pred = predict_all(model, &dataset.features, mode)?;
    Metrics::from_predictions(&dataset.labels, &pred, dataset.n_classes)
}
