//! Dataset container, class bookkeeping, synthetic data generation and
//! stratified splitting.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RandomSeed;
use crate::samplers::SamplingTargets;

/// A dense supervised dataset: row-major features plus one label per row.
///
/// Labels are small non-negative class ids. The library treats the class
/// universe of a dataset as `0..=max(label)`, so a dataset with labels
/// `{0, 2}` has three classes of which class 1 simply has no samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    n_features: usize,
}

impl Dataset {
    /// Build a dataset from flat row-major features.
    ///
    /// Rejects ragged shapes and non-finite feature values up front so the
    /// numeric code never has to re-check.
    pub fn new(features: Vec<f64>, labels: Vec<usize>, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidParameter {
                reason: "n_features must be at least 1".into(),
            });
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{} feature values ({} rows x {})", labels.len() * n_features, labels.len(), n_features),
                got: format!("{}", features.len()),
            });
        }
        for (i, v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature {
                    row: i / n_features,
                    column: i % n_features,
                });
            }
        }
        Ok(Dataset { features, labels, n_features })
    }

    /// Build a dataset from one `Vec<f64>` per row.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} rows", labels.len()),
                got: format!("{}", rows.len()),
            });
        }
        let n_features = rows.first().map(|r| r.len()).unwrap_or(1);
        let mut features = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n_features} features per row"),
                    got: format!("{} in row {i}", row.len()),
                });
            }
            features.extend_from_slice(row);
        }
        Dataset::new(features, labels, n_features)
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of classes, counting gaps: `max(label) + 1` (0 when empty).
    pub fn n_classes(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Rows selected by `indices`, in the given order (repeats allowed).
    ///
    /// Panics if an index is out of bounds; callers pass indices they
    /// obtained from this dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            labels,
            n_features: self.n_features,
        }
    }

    /// Row indices of every class present, keyed by label in ascending order.
    pub fn class_indices(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &y) in self.labels.iter().enumerate() {
            map.entry(y).or_default().push(i);
        }
        map
    }

    pub fn distribution(&self) -> ClassDistribution {
        tally(&self.labels)
    }
}

/// Per-class sample counts, ordered by label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDistribution {
    counts: BTreeMap<usize, usize>,
}

impl ClassDistribution {
    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.counts
    }

    pub fn count(&self, class: usize) -> usize {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    /// Distinct classes actually present.
    pub fn n_present(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Class with the fewest samples; ties go to the lower label.
    pub fn minority_class(&self) -> Option<usize> {
        self.counts
            .iter()
            .min_by_key(|(label, count)| (**count, **label))
            .map(|(label, _)| *label)
    }

    /// Class with the most samples; ties go to the lower label.
    pub fn majority_class(&self) -> Option<usize> {
        self.counts
            .iter()
            .max_by_key(|(label, count)| (**count, std::cmp::Reverse(**label)))
            .map(|(label, _)| *label)
    }

    /// Majority count divided by minority count (1.0 when balanced).
    pub fn imbalance_ratio(&self) -> Option<f64> {
        let min = self.minority_class()?;
        let maj = self.majority_class()?;
        Some(self.count(maj) as f64 / self.count(min) as f64)
    }
}

impl fmt::Display for ClassDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (label, count)) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{label}: {count}")?;
        }
        write!(f, "}}")
    }
}

fn tally(labels: &[usize]) -> ClassDistribution {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &y in labels {
        *counts.entry(y).or_insert(0) += 1;
    }
    ClassDistribution { counts }
}

/// Count how many samples carry each label.
pub fn class_distribution(labels: &[usize]) -> Result<ClassDistribution> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(tally(labels))
}

/// Split `n_total` into integer per-class counts proportional to `weights`
/// using the largest-remainder method; remainder ties go to the lower class.
fn largest_remainder_counts(n_total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| n_total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // Sort by descending fractional part, lower class index first on ties.
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().take(n_total - assigned) {
        counts[c] += 1;
    }
    counts
}

/// Generate a Gaussian-blob classification task with the requested class
/// imbalance, already split into train and test partitions.
///
/// Class `c` receives a share of `n_samples` proportional to `weights[c]`
/// (largest-remainder apportionment). Each class is an isotropic unit-variance
/// Gaussian; the class means are drawn at random and then rescaled so the
/// closest pair of means sits exactly 3.0 apart, which keeps the task
/// difficulty stable across seeds and dimensions. The split is stratified.
pub fn generate_imbalance_data(
    n_samples: usize,
    weights: &[f64],
    n_features: usize,
    test_fraction: f64,
    seed: RandomSeed,
) -> Result<(Dataset, Dataset)> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights {
            reason: "need at least one class weight".into(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Error::InvalidWeights {
            reason: "class weights must be finite and strictly positive".into(),
        });
    }
    if n_features == 0 {
        return Err(Error::InvalidParameter {
            reason: "n_features must be at least 1".into(),
        });
    }
    let k = weights.len();
    if n_samples < k {
        return Err(Error::InvalidParameter {
            reason: format!("n_samples {n_samples} is below the number of classes {k}"),
        });
    }
    let counts = largest_remainder_counts(n_samples, weights);

    // Class means: K standard-normal vectors rescaled so the minimum pairwise
    // distance is exactly 3.0.
    let mut means_rng = seed.derive("means", 0).rng();
    let means: Vec<Vec<f64>> = loop {
        let candidate: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..n_features).map(|_| means_rng.sample(StandardNormal)).collect())
            .collect();
        if k == 1 {
            break candidate;
        }
        let mut min_dist = f64::INFINITY;
        for a in 0..k {
            for b in (a + 1)..k {
                let d: f64 = candidate[a]
                    .iter()
                    .zip(&candidate[b])
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
                min_dist = min_dist.min(d);
            }
        }
        if min_dist > 1e-12 {
            let scale = 3.0 / min_dist;
            break candidate
                .into_iter()
                .map(|m| m.into_iter().map(|v| v * scale).collect())
                .collect();
        }
    };

    let mut features = Vec::with_capacity(n_samples * n_features);
    let mut labels = Vec::with_capacity(n_samples);
    for (c, &count) in counts.iter().enumerate() {
        let mut rng = seed.derive("samples", c as u64).rng();
        for _ in 0..count {
            for j in 0..n_features {
                let z: f64 = rng.sample(StandardNormal);
                features.push(means[c][j] + z);
            }
            labels.push(c);
        }
    }
    let full = Dataset::new(features, labels, n_features)?;
    train_test_split(&full, test_fraction, true, seed.derive("split", 0))
}

/// Downsample classes of `dataset` to the counts in `target_counts` by
/// uniform sampling without replacement. Classes absent from the targets keep
/// all of their rows. Surviving rows keep their original relative order.
pub fn make_imbalance(
    dataset: &Dataset,
    target_counts: &SamplingTargets,
    seed: RandomSeed,
) -> Result<Dataset> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let by_class = dataset.class_indices();
    for (&class, &target) in target_counts.counts() {
        let available = by_class.get(&class).map_or(0, |v| v.len());
        if available == 0 {
            return Err(Error::UnknownClass { class });
        }
        if target > available {
            return Err(Error::TargetExceedsAvailable { class, target, available });
        }
    }
    let mut keep: Vec<usize> = Vec::new();
    for (&class, indices) in &by_class {
        match target_counts.get(class) {
            Some(target) if target < indices.len() => {
                let mut rng = seed.derive("downsample", class as u64).rng();
                keep.extend(indices.choose_multiple(&mut rng, target).copied());
            }
            _ => keep.extend_from_slice(indices),
        }
    }
    keep.sort_unstable();
    Ok(dataset.subset(&keep))
}

/// Random train/test split, optionally stratified by class.
///
/// In stratified mode every class contributes `max(1, round(count *
/// test_fraction))` rows to the test side (round half up), so no class can
/// vanish from the test set; each class therefore needs at least 2 rows. Both
/// partitions keep the original relative row order.
pub fn train_test_split(
    dataset: &Dataset,
    test_fraction: f64,
    stratified: bool,
    seed: RandomSeed,
) -> Result<(Dataset, Dataset)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidFraction { value: test_fraction });
    }
    let mut train_idx: Vec<usize> = Vec::new();
    let mut test_idx: Vec<usize> = Vec::new();
    if stratified {
        for (&class, indices) in &dataset.class_indices() {
            let count = indices.len();
            if count < 2 {
                return Err(Error::InsufficientClassSamples { class, available: count });
            }
            let mut n_test = ((count as f64 * test_fraction).round() as usize).max(1);
            // round() can reach `count` only when test_fraction is close to 1;
            // keep at least one training row per class.
            if n_test >= count {
                n_test = count - 1;
            }
            let mut shuffled = indices.clone();
            shuffled.shuffle(&mut seed.derive("split-class", class as u64).rng());
            test_idx.extend_from_slice(&shuffled[..n_test]);
            train_idx.extend_from_slice(&shuffled[n_test..]);
        }
    } else {
        let count = dataset.n_samples();
        if count < 2 {
            return Err(Error::InsufficientClassSamples {
                class: dataset.label(0),
                available: count,
            });
        }
        let n_test = ((count as f64 * test_fraction).round() as usize).clamp(1, count - 1);
        let mut shuffled: Vec<usize> = (0..count).collect();
        shuffled.shuffle(&mut seed.derive("split-all", 0).rng());
        test_idx.extend_from_slice(&shuffled[..n_test]);
        train_idx.extend_from_slice(&shuffled[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((dataset.subset(&train_idx), dataset.subset(&test_idx)))
}
