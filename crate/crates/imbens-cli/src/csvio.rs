//! Labeled-CSV ingestion and emission.
//!
//! Contract: UTF-8 text, header row required, one label column (named
//! `label` unless overridden) and any number of numeric feature columns, in
//! header order. Floats are written with 17 significant digits (`{:.16e}`)
//! so a generate → ingest round trip reproduces every value bit-exactly.
//! Arbitrary discrete labels are accepted; they are encoded to contiguous
//! integers `0..K` against a sorted list of the distinct label strings
//! (numeric sort when every label parses as a number, byte-wise otherwise),
//! and the list travels with the model so later evaluations can map labels
//! the same way.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use imbens::{write_atomic, Dataset};

use crate::Failure;

/// A parsed labeled CSV: feature matrix by rows plus the raw label strings.
pub struct LabeledCsv {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

pub fn read_labeled_csv(path: &Path, label_column: &str) -> Result<LabeledCsv, Failure> {
    let shown = path.display();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Failure::data(format!("InvalidCsv: {shown}: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| Failure::data(format!("InvalidCsv: {shown}: {e}")))?
        .clone();
    let label_index = headers.iter().position(|name| name == label_column).ok_or_else(|| {
        Failure::data(format!("MissingLabelColumn: {shown}: no column named \"{label_column}\""))
    })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_index)
        .map(|(_, name)| name.to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(Failure::data(format!(
            "InvalidCsv: {shown}: no feature columns besides \"{label_column}\""
        )));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Failure::data(format!("InvalidCsv: {shown}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Failure::data(format!(
                "InvalidCsv: {shown}: row {} has {} fields, expected {}",
                line + 2,
                record.len(),
                headers.len()
            )));
        }
        let mut row = Vec::with_capacity(feature_names.len());
        for (column, field) in record.iter().enumerate() {
            if column == label_index {
                labels.push(field.to_string());
                continue;
            }
            let value: f64 = field.trim().parse().map_err(|_| {
                Failure::data(format!(
                    "InvalidCsv: {shown}: row {}, column \"{}\": \"{field}\" is not a number",
                    line + 2,
                    headers.get(column).unwrap_or("?")
                ))
            })?;
            if !value.is_finite() {
                return Err(Failure::data(format!(
                    "InvalidCsv: {shown}: row {}, column \"{}\": value {value} is not finite",
                    line + 2,
                    headers.get(column).unwrap_or("?")
                )));
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::data(format!("InvalidCsv: {shown}: no data rows")));
    }
    Ok(LabeledCsv { feature_names, rows, labels })
}

/// Sorted distinct label strings: numeric order when every label parses as a
/// finite number (ties broken by the string form), byte-wise otherwise.
fn sorted_distinct_labels(raw: &[String]) -> Vec<String> {
    let mut distinct: Vec<String> = raw.to_vec();
    distinct.sort();
    distinct.dedup();
    let numeric: Option<Vec<f64>> = distinct
        .iter()
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    if let Some(values) = numeric {
        let mut order: Vec<usize> = (0..distinct.len()).collect();
        order.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .unwrap_or(Ordering::Equal)
                .then_with(|| distinct[a].cmp(&distinct[b]))
        });
        order.into_iter().map(|i| distinct[i].clone()).collect()
    } else {
        distinct
    }
}

/// Encode labels against a fresh mapping; returns the class-name list (index
/// = encoded class) and the encoded labels.
pub fn encode_labels(raw: &[String]) -> (Vec<String>, Vec<usize>) {
    let names = sorted_distinct_labels(raw);
    let index: BTreeMap<&str, usize> =
        names.iter().enumerate().map(|(i, name)| (name.as_str(), i)).collect();
    let encoded = raw.iter().map(|label| index[label.as_str()]).collect();
    (names, encoded)
}

/// Encode labels against an existing mapping (e.g. a saved model's classes).
pub fn map_labels(class_names: &[String], raw: &[String], source: &Path) -> Result<Vec<usize>, Failure> {
    let index: BTreeMap<&str, usize> =
        class_names.iter().enumerate().map(|(i, name)| (name.as_str(), i)).collect();
    raw.iter()
        .map(|label| {
            index.get(label.as_str()).copied().ok_or_else(|| {
                Failure::data(format!(
                    "UnknownLabel: {}: label \"{label}\" is not among the model classes {class_names:?}",
                    source.display()
                ))
            })
        })
        .collect()
}

/// Read a labeled CSV and encode its labels with a fresh mapping.
pub fn load_dataset(path: &Path, label_column: &str) -> Result<(Dataset, Vec<String>), Failure> {
    let csv = read_labeled_csv(path, label_column)?;
    let (names, encoded) = encode_labels(&csv.labels);
    let dataset = Dataset::from_rows(&csv.rows, encoded).map_err(Failure::data)?;
    Ok((dataset, names))
}

/// Read a labeled CSV and encode its labels against an existing mapping.
pub fn load_dataset_mapped(
    path: &Path,
    label_column: &str,
    class_names: &[String],
) -> Result<Dataset, Failure> {
    let csv = read_labeled_csv(path, label_column)?;
    let encoded = map_labels(class_names, &csv.labels, path)?;
    Dataset::from_rows(&csv.rows, encoded).map_err(Failure::data)
}

/// Write a dataset as CSV with header `f0,...,f{d-1},label`. Labels are
/// written as their class-name strings. The write is atomic.
pub fn write_dataset_csv(
    path: &Path,
    dataset: &Dataset,
    class_names: &[String],
) -> Result<(), Failure> {
    let d = dataset.n_features();
    let mut text = String::new();
    for j in 0..d {
        text.push_str(&format!("f{j},"));
    }
    text.push_str("label\n");
    for i in 0..dataset.n_samples() {
        for value in dataset.row(i) {
            text.push_str(&format!("{value:.16e},"));
        }
        text.push_str(&class_names[dataset.label(i)]);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes()).map_err(Failure::data)
}
