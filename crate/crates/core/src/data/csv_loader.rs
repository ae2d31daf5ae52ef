use std::collections::BTreeMap;
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

/// Reads `label,f0,...,fD-1` rows. Raw labels are densified to [0, C) in
/// ascending order of their original values.
pub fn load_csv_features(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Format(e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if headers.is_empty() || headers.get(0).map(str::trim) != Some("label") {
        return Err(Error::Format("CSV header must start with `label`".into()));
    }
    let width = headers.len();
    let mut raw_labels = Vec::new();
    let mut features = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        if record.len() != width {
            return Err(Error::Format(format!(
                "line {line}: {} fields, header has {width}",
                record.len()
            )));
        }
        let label: i64 = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: label {:?} is not an integer", &record[0])))?;
        let row = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {line}: non-numeric cell {cell:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        raw_labels.push(label);
        features.push(row);
    }
    if raw_labels.is_empty() {
        return Err(Error::Empty("CSV dataset"));
    }
    let dense: BTreeMap<i64, usize> = raw_labels
        .iter()
        .copied()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();
    let labels = raw_labels.iter().map(|l| dense[l]).collect();
    Dataset::new(features, labels, dense.len().max(2))
}
