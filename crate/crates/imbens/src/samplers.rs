//! Resampling primitives: random under/over-sampling, SMOTE, k-means SMOTE
//! and hardness-binned self-paced undersampling.
//!
//! Every sampler takes a complete [`SamplingTargets`] (one desired count per
//! class), returns a new [`Dataset`] whose per-class counts equal the targets
//! exactly, and reports provenance through a [`ResampleTrace`]. Classes
//! missing from the target map keep their current counts. All randomness
//! flows through per-class sub-streams derived from the given seed, so a
//! sampler's output for class `c` does not depend on what other classes need.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassDistribution, Dataset};
use crate::error::{Error, Result};
use crate::kmeans::lloyd_kmeans;
use crate::rng::RandomSeed;

/// Desired per-class sample counts for one resampling operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingTargets {
    targets: BTreeMap<usize, usize>,
}

impl SamplingTargets {
    /// Validate and wrap a per-class target map: it must be nonempty and at
    /// least one class must request a positive count.
    pub fn new(targets: BTreeMap<usize, usize>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::InvalidParameter {
                reason: "sampling targets must cover at least one class".into(),
            });
        }
        if targets.values().all(|&t| t == 0) {
            return Err(Error::InvalidParameter {
                reason: "at least one sampling target must be positive".into(),
            });
        }
        Ok(SamplingTargets { targets })
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(pairs.iter().copied().collect())
    }

    pub fn get(&self, class: usize) -> Option<usize> {
        self.targets.get(&class).copied()
    }

    pub fn counts(&self) -> &BTreeMap<usize, usize> {
        &self.targets
    }

    pub fn total(&self) -> usize {
        self.targets.values().sum()
    }
}

/// How [`resolve_sampling_targets`] turns a class distribution into targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetMode {
    /// Every class is brought down to the minority count.
    UnderToMinority,
    /// Every class is brought up to the majority count.
    OverToMajority,
    /// Targets come from `target_label` / `n_target_samples`.
    Explicit,
}

/// The `n_target_samples` argument: one count, or one count per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetSpec {
    Count(usize),
    PerClass(BTreeMap<usize, usize>),
}

/// Resolve the user-facing (mode, target_label, n_target_samples) triple into
/// a concrete per-class target map.
///
/// Explicit mode combinations:
/// * scalar count + label — only that class's target changes;
/// * per-class map — passed through, absent classes keep current counts;
/// * label alone — every class is resampled to the labelled class's count;
/// * a map together with a label may only restate that label's entry,
///   anything else is a conflict.
pub fn resolve_sampling_targets(
    dist: &ClassDistribution,
    mode: TargetMode,
    target_label: Option<usize>,
    n_target_samples: Option<&TargetSpec>,
) -> Result<SamplingTargets> {
    if let Some(label) = target_label {
        if dist.count(label) == 0 {
            return Err(Error::UnknownClass { class: label });
        }
    }
    if let Some(TargetSpec::PerClass(map)) = n_target_samples {
        for &class in map.keys() {
            if dist.count(class) == 0 {
                return Err(Error::UnknownClass { class });
            }
        }
    }

    let current: BTreeMap<usize, usize> = dist.counts().clone();
    let targets = match mode {
        TargetMode::UnderToMinority => {
            let min = *current.values().min().expect("nonempty distribution");
            current.keys().map(|&c| (c, min)).collect()
        }
        TargetMode::OverToMajority => {
            let max = *current.values().max().expect("nonempty distribution");
            current.keys().map(|&c| (c, max)).collect()
        }
        TargetMode::Explicit => match (target_label, n_target_samples) {
            (Some(label), Some(TargetSpec::Count(n))) => {
                let mut t = current;
                t.insert(label, *n);
                t
            }
            (None, Some(TargetSpec::Count(_))) => {
                return Err(Error::MissingTargets {
                    reason: "a scalar n_target_samples needs target_label to say which class it applies to".into(),
                })
            }
            (label, Some(TargetSpec::PerClass(map))) => {
                if let Some(label) = label {
                    if let Some(stray) = map.keys().find(|&&c| c != label) {
                        return Err(Error::ConflictingTargets {
                            reason: format!(
                                "target_label {label} given, but the target map also addresses class {stray}"
                            ),
                        });
                    }
                }
                let mut t = current;
                for (&class, &count) in map {
                    t.insert(class, count);
                }
                t
            }
            (Some(label), None) => {
                let anchor = dist.count(label);
                current.keys().map(|&c| (c, anchor)).collect()
            }
            (None, None) => {
                return Err(Error::MissingTargets {
                    reason: "explicit mode needs target_label and/or n_target_samples".into(),
                })
            }
        },
    };
    SamplingTargets::new(targets)
}

/// Provenance record for one synthetic (interpolated or duplicated) row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticRecord {
    pub class: usize,
    /// Source row the interpolation started from.
    pub seed_index: usize,
    /// Source row it interpolated toward (equal to `seed_index` for
    /// duplication fallbacks).
    pub neighbor_index: usize,
}

/// What a sampler did: which source rows survive (with multiplicity) and
/// which output rows were synthesized.
///
/// Output layout contract: the first `kept_indices.len()` output rows are the
/// listed source rows in order; the remaining `synthetic_count()` rows match
/// `synthetic` in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResampleTrace {
    pub kept_indices: Vec<usize>,
    pub synthetic: Vec<SyntheticRecord>,
}

impl ResampleTrace {
    pub fn synthetic_count(&self) -> usize {
        self.synthetic.len()
    }
}

/// Per-class view used by all samplers: label → row indices in source order,
/// with targets validated against it.
fn effective_targets(
    dataset: &Dataset,
    targets: &SamplingTargets,
) -> Result<Vec<(usize, Vec<usize>, usize)>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let by_class = dataset.class_indices();
    for &class in targets.counts().keys() {
        if !by_class.contains_key(&class) {
            return Err(Error::UnknownClass { class });
        }
    }
    Ok(by_class
        .into_iter()
        .map(|(class, rows)| {
            let target = targets.get(class).unwrap_or(rows.len());
            (class, rows, target)
        })
        .collect())
}

/// Uniform within-class undersampling (or bootstrap resampling when
/// `with_replacement` is set, in which case targets may exceed the current
/// counts). Output rows keep ascending source order.
pub fn random_under_sample(
    dataset: &Dataset,
    targets: &SamplingTargets,
    with_replacement: bool,
    seed: RandomSeed,
) -> Result<(Dataset, ResampleTrace)> {
    let classes = effective_targets(dataset, targets)?;
    let mut kept: Vec<usize> = Vec::new();
    for (class, rows, target) in classes {
        if with_replacement {
            let mut rng = seed.derive("under", class as u64).rng();
            for _ in 0..target {
                kept.push(rows[rng.gen_range(0..rows.len())]);
            }
        } else if target > rows.len() {
            return Err(Error::TargetExceedsAvailable {
                class,
                target,
                available: rows.len(),
            });
        } else if target == rows.len() {
            kept.extend_from_slice(&rows);
        } else {
            let mut rng = seed.derive("under", class as u64).rng();
            kept.extend(rows.choose_multiple(&mut rng, target).copied());
        }
    }
    kept.sort_unstable();
    let trace = ResampleTrace { kept_indices: kept.clone(), synthetic: Vec::new() };
    Ok((dataset.subset(&kept), trace))
}

/// Random oversampling by duplication: all original rows are retained in
/// place and each class's deficit is filled by uniform-with-replacement
/// copies appended after them (classes in ascending order).
pub fn random_over_sample(
    dataset: &Dataset,
    targets: &SamplingTargets,
    seed: RandomSeed,
) -> Result<(Dataset, ResampleTrace)> {
    let classes = effective_targets(dataset, targets)?;
    let mut kept: Vec<usize> = (0..dataset.n_samples()).collect();
    for (class, rows, target) in classes {
        if target < rows.len() {
            return Err(Error::TargetBelowAvailable {
                class,
                target,
                available: rows.len(),
            });
        }
        if target > rows.len() {
            let mut rng = seed.derive("over", class as u64).rng();
            for _ in 0..target - rows.len() {
                kept.push(rows[rng.gen_range(0..rows.len())]);
            }
        }
    }
    let trace = ResampleTrace { kept_indices: kept.clone(), synthetic: Vec::new() };
    Ok((dataset.subset(&kept), trace))
}

/// Each row's `k` nearest same-class neighbours (local indices into `rows`),
/// by Euclidean distance with ties broken toward the lower index; a row is
/// never its own neighbour.
fn nearest_neighbors(dataset: &Dataset, rows: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = rows.len();
    let k = k.min(n.saturating_sub(1));
    (0..n)
        .map(|i| {
            let xi = dataset.row(rows[i]);
            let mut order: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d2: f64 = xi
                        .iter()
                        .zip(dataset.row(rows[j]))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d2, j)
                })
                .collect();
            order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            order.truncate(k);
            order.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// One SMOTE draw: pick a seed row, one of its neighbours and an
/// interpolation coefficient, in that fixed order.
fn smote_draw(
    dataset: &Dataset,
    rows: &[usize],
    neighbors: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, usize, usize) {
    let si = rng.gen_range(0..rows.len());
    let nbrs = &neighbors[si];
    let zi = nbrs[rng.gen_range(0..nbrs.len())];
    let u: f64 = rng.gen();
    let xi = dataset.row(rows[si]);
    let xz = dataset.row(rows[zi]);
    let point = xi.iter().zip(xz).map(|(a, b)| a + u * (b - a)).collect();
    (point, rows[si], rows[zi])
}

/// Rounds a real-weighted share of `total` to integers by largest remainder;
/// remainder ties go to the lower index. All weights must be ≥ 0 with a
/// positive sum.
fn proportional_allocation(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(total - assigned) {
        out[i] += 1;
    }
    out
}

/// Shared tail of the SMOTE-family samplers: assemble the output dataset from
/// the originals plus generated rows.
fn assemble_oversampled(
    dataset: &Dataset,
    synthetic_rows: Vec<(Vec<f64>, SyntheticRecord)>,
) -> Result<(Dataset, ResampleTrace)> {
    let n = dataset.n_samples();
    let d = dataset.n_features();
    let mut features = Vec::with_capacity((n + synthetic_rows.len()) * d);
    features.extend_from_slice(dataset.features());
    let mut labels = Vec::with_capacity(n + synthetic_rows.len());
    labels.extend_from_slice(dataset.labels());
    let mut synthetic = Vec::with_capacity(synthetic_rows.len());
    for (row, record) in synthetic_rows {
        features.extend_from_slice(&row);
        labels.push(record.class);
        synthetic.push(record);
    }
    let out = Dataset::new(features, labels, d)?;
    let trace = ResampleTrace { kept_indices: (0..n).collect(), synthetic };
    Ok((out, trace))
}

fn check_oversample_targets(classes: &[(usize, Vec<usize>, usize)]) -> Result<()> {
    for (class, rows, target) in classes {
        if target < &rows.len() {
            return Err(Error::TargetBelowAvailable {
                class: *class,
                target: *target,
                available: rows.len(),
            });
        }
    }
    Ok(())
}

/// SMOTE oversampling: originals are retained and each class's deficit is
/// filled with points interpolated between a random class member and one of
/// its `k_neighbors` nearest same-class neighbours.
///
/// `k` shrinks to the number of available neighbours for small classes; a
/// single-member class falls back to duplicating that member.
pub fn smote_sample(
    dataset: &Dataset,
    targets: &SamplingTargets,
    k_neighbors: usize,
    seed: RandomSeed,
) -> Result<(Dataset, ResampleTrace)> {
    if k_neighbors == 0 {
        return Err(Error::InvalidParameter {
            reason: "k_neighbors must be at least 1".into(),
        });
    }
    let classes = effective_targets(dataset, targets)?;
    check_oversample_targets(&classes)?;
    let mut synthetic_rows: Vec<(Vec<f64>, SyntheticRecord)> = Vec::new();
    for (class, rows, target) in classes {
        let deficit = target - rows.len();
        if deficit == 0 {
            continue;
        }
        if rows.len() == 1 {
            let record = SyntheticRecord { class, seed_index: rows[0], neighbor_index: rows[0] };
            for _ in 0..deficit {
                synthetic_rows.push((dataset.row(rows[0]).to_vec(), record));
            }
            continue;
        }
        let neighbors = nearest_neighbors(dataset, &rows, k_neighbors);
        let mut rng = seed.derive("smote", class as u64).rng();
        for _ in 0..deficit {
            let (point, seed_index, neighbor_index) =
                smote_draw(dataset, &rows, &neighbors, &mut rng);
            synthetic_rows.push((point, SyntheticRecord { class, seed_index, neighbor_index }));
        }
    }
    assemble_oversampled(dataset, synthetic_rows)
}

/// k-means SMOTE: cluster the whole dataset, then generate each class's
/// synthetic points inside clusters where that class is sufficiently
/// represented, spending more of the budget in sparser clusters.
///
/// A cluster is eligible for class `c` when the fraction of its members
/// belonging to `c` is at least `imbalance_ratio_threshold`. The class budget
/// is split across eligible clusters proportionally to the mean pairwise
/// distance of the cluster's class-`c` members. Classes with no eligible
/// cluster fall back to plain SMOTE over the whole class (bit-identical to
/// [`smote_sample`] thanks to the shared per-class seed stream).
pub fn kmeans_smote_sample(
    dataset: &Dataset,
    targets: &SamplingTargets,
    n_clusters: usize,
    k_neighbors: usize,
    imbalance_ratio_threshold: f64,
    seed: RandomSeed,
) -> Result<(Dataset, ResampleTrace)> {
    if k_neighbors == 0 {
        return Err(Error::InvalidParameter {
            reason: "k_neighbors must be at least 1".into(),
        });
    }
    if n_clusters == 0 {
        return Err(Error::InvalidParameter {
            reason: "n_clusters must be at least 1".into(),
        });
    }
    if !imbalance_ratio_threshold.is_finite() || imbalance_ratio_threshold < 0.0 {
        return Err(Error::InvalidParameter {
            reason: "imbalance_ratio_threshold must be finite and nonnegative".into(),
        });
    }
    let classes = effective_targets(dataset, targets)?;
    check_oversample_targets(&classes)?;

    let k_eff = n_clusters.min(dataset.n_samples());
    let assignment = lloyd_kmeans(
        dataset.features(),
        dataset.n_features(),
        k_eff,
        seed.derive("kmeans", 0),
    );
    let mut cluster_sizes = vec![0usize; k_eff];
    for &c in &assignment {
        cluster_sizes[c] += 1;
    }

    let mut synthetic_rows: Vec<(Vec<f64>, SyntheticRecord)> = Vec::new();
    for (class, rows, target) in classes {
        let deficit = target - rows.len();
        if deficit == 0 {
            continue;
        }
        if rows.len() == 1 {
            let record = SyntheticRecord { class, seed_index: rows[0], neighbor_index: rows[0] };
            for _ in 0..deficit {
                synthetic_rows.push((dataset.row(rows[0]).to_vec(), record));
            }
            continue;
        }

        // Class members per cluster, in source order.
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); k_eff];
        for &r in &rows {
            members[assignment[r]].push(r);
        }
        let eligible: Vec<usize> = (0..k_eff)
            .filter(|&j| {
                !members[j].is_empty()
                    && members[j].len() as f64 / cluster_sizes[j] as f64
                        >= imbalance_ratio_threshold
            })
            .collect();

        let mut rng = seed.derive("smote", class as u64).rng();
        if eligible.is_empty() {
            // Plain SMOTE over the whole class.
            let neighbors = nearest_neighbors(dataset, &rows, k_neighbors);
            for _ in 0..deficit {
                let (point, seed_index, neighbor_index) =
                    smote_draw(dataset, &rows, &neighbors, &mut rng);
                synthetic_rows.push((point, SyntheticRecord { class, seed_index, neighbor_index }));
            }
            continue;
        }

        // Sparser clusters (larger mean pairwise distance) get more budget.
        let sparsity: Vec<f64> = eligible
            .iter()
            .map(|&j| {
                let m = &members[j];
                if m.len() < 2 {
                    return 0.0;
                }
                let mut sum = 0.0;
                for a in 0..m.len() {
                    for b in (a + 1)..m.len() {
                        let d2: f64 = dataset
                            .row(m[a])
                            .iter()
                            .zip(dataset.row(m[b]))
                            .map(|(x, y)| (x - y) * (x - y))
                            .sum();
                        sum += d2.sqrt();
                    }
                }
                sum / (m.len() * (m.len() - 1) / 2) as f64
            })
            .collect();
        let budgets = if sparsity.iter().sum::<f64>() > 0.0 {
            proportional_allocation(deficit, &sparsity)
        } else {
            proportional_allocation(deficit, &vec![1.0; eligible.len()])
        };

        for (slot, &j) in eligible.iter().enumerate() {
            let budget = budgets[slot];
            if budget == 0 {
                continue;
            }
            let m = &members[j];
            if m.len() == 1 {
                let record = SyntheticRecord { class, seed_index: m[0], neighbor_index: m[0] };
                for _ in 0..budget {
                    synthetic_rows.push((dataset.row(m[0]).to_vec(), record));
                }
                continue;
            }
            let neighbors = nearest_neighbors(dataset, m, k_neighbors);
            for _ in 0..budget {
                let (point, seed_index, neighbor_index) = smote_draw(dataset, m, &neighbors, &mut rng);
                synthetic_rows.push((point, SyntheticRecord { class, seed_index, neighbor_index }));
            }
        }
    }
    assemble_oversampled(dataset, synthetic_rows)
}

/// Hardness-binned undersampling: rows of each over-target class are split
/// into `k_bins` equal-width bins over that class's hardness range; bin `b`
/// receives budget proportional to `1/(mean_hardness_b + alpha)` (empty bins
/// none), rounded by largest remainder; selection within a bin is uniform
/// without replacement. Budgets exceeding a bin's occupancy are clamped and
/// the excess reflows to the remaining bins by the same rule.
pub fn self_paced_under_sample(
    dataset: &Dataset,
    targets: &SamplingTargets,
    hardness: &[f64],
    k_bins: usize,
    alpha: f64,
    seed: RandomSeed,
) -> Result<(Dataset, ResampleTrace)> {
    if hardness.len() != dataset.n_samples() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} hardness values", dataset.n_samples()),
            got: format!("{}", hardness.len()),
        });
    }
    if hardness.iter().any(|h| !(0.0..=1.0).contains(h)) {
        return Err(Error::InvalidParameter {
            reason: "hardness values must lie in [0, 1]".into(),
        });
    }
    if k_bins == 0 {
        return Err(Error::InvalidParameter {
            reason: "k_bins must be at least 1".into(),
        });
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidParameter {
            reason: "alpha must be finite and nonnegative".into(),
        });
    }
    let classes = effective_targets(dataset, targets)?;
    let mut kept: Vec<usize> = Vec::new();
    for (class, rows, target) in classes {
        if target > rows.len() {
            return Err(Error::TargetExceedsAvailable {
                class,
                target,
                available: rows.len(),
            });
        }
        if target == rows.len() {
            kept.extend_from_slice(&rows);
            continue;
        }

        // Partition the class's rows into equal-width hardness bins.
        let h_min = rows.iter().map(|&r| hardness[r]).fold(f64::INFINITY, f64::min);
        let h_max = rows.iter().map(|&r| hardness[r]).fold(f64::NEG_INFINITY, f64::max);
        let mut bins: Vec<Vec<usize>> = vec![Vec::new(); k_bins];
        if h_max - h_min <= 0.0 {
            bins[0].extend_from_slice(&rows);
        } else {
            let width = (h_max - h_min) / k_bins as f64;
            for &r in &rows {
                let b = (((hardness[r] - h_min) / width) as usize).min(k_bins - 1);
                bins[b].push(r);
            }
        }

        // Easier bins (lower mean hardness) weigh more; 1e12 stands in for
        // the alpha=0 / zero-hardness singularity.
        let weights: Vec<f64> = bins
            .iter()
            .map(|bin| {
                if bin.is_empty() {
                    return 0.0;
                }
                let mean: f64 = bin.iter().map(|&r| hardness[r]).sum::<f64>() / bin.len() as f64;
                if mean + alpha < 1e-12 {
                    1e12
                } else {
                    1.0 / (mean + alpha)
                }
            })
            .collect();

        // Allocate, then reflow any budget that exceeds a bin's occupancy.
        let mut budgets = proportional_allocation(target, &weights);
        loop {
            let mut overflow = 0usize;
            for (b, bin) in bins.iter().enumerate() {
                if budgets[b] > bin.len() {
                    overflow += budgets[b] - bin.len();
                    budgets[b] = bin.len();
                }
            }
            if overflow == 0 {
                break;
            }
            let spare_weights: Vec<f64> = bins
                .iter()
                .enumerate()
                .map(|(b, bin)| if budgets[b] < bin.len() { weights[b] } else { 0.0 })
                .collect();
            let extra = proportional_allocation(overflow, &spare_weights);
            for (b, e) in extra.into_iter().enumerate() {
                budgets[b] += e;
            }
        }

        let mut rng = seed.derive("self-paced", class as u64).rng();
        for (b, bin) in bins.iter().enumerate() {
            if budgets[b] == bin.len() {
                kept.extend_from_slice(bin);
            } else if budgets[b] > 0 {
                kept.extend(bin.choose_multiple(&mut rng, budgets[b]).copied());
            }
        }
    }
    kept.sort_unstable();
    let trace = ResampleTrace { kept_indices: kept.clone(), synthetic: Vec::new() };
    Ok((dataset.subset(&kept), trace))
}
