//! Ensemble trainers for imbalanced classification: boosting over resampled
//! data, cost-sensitive reweighting boosting, parallel balanced bagging,
//! self-paced ensembling and cascaded undersampling — all behind one
//! fit / predict / predict_proba surface with per-iteration training logs.

mod bagging;
mod boosting;
mod cascade;
mod self_paced;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassDistribution, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{confusion_matrix, metric_by_name, metric_names, MetricFn};
use crate::rng::RandomSeed;
use crate::samplers::{resolve_sampling_targets, SamplingTargets, TargetMode, TargetSpec};
use crate::scheduler::BalancingSchedule;
use crate::tree::{FittedTree, TreeParams};

pub use bagging::{fit_bagging_ensemble, BaggingVariant};
pub use boosting::{
    fit_adaboost, fit_resample_boost, fit_reweight_boost, ResampleBoostVariant,
    ReweightBoostVariant,
};
pub use cascade::fit_balance_cascade;
pub use self_paced::fit_self_paced_ensemble;

/// Identifier of one of the fourteen ensemble methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MethodId {
    SelfPacedEnsemble,
    BalanceCascade,
    RusBoost,
    SmoteBoost,
    KmeansSmoteBoost,
    OverBoost,
    UnderBagging,
    OverBagging,
    SmoteBagging,
    BalancedRandomForest,
    EasyEnsemble,
    AdaCost,
    AdaUboost,
    AsymBoost,
}

const METHOD_NAMES: [(MethodId, &str); 14] = [
    (MethodId::SelfPacedEnsemble, "self-paced-ensemble"),
    (MethodId::BalanceCascade, "balance-cascade"),
    (MethodId::RusBoost, "rus-boost"),
    (MethodId::SmoteBoost, "smote-boost"),
    (MethodId::KmeansSmoteBoost, "kmeans-smote-boost"),
    (MethodId::OverBoost, "over-boost"),
    (MethodId::UnderBagging, "under-bagging"),
    (MethodId::OverBagging, "over-bagging"),
    (MethodId::SmoteBagging, "smote-bagging"),
    (MethodId::BalancedRandomForest, "balanced-random-forest"),
    (MethodId::EasyEnsemble, "easy-ensemble"),
    (MethodId::AdaCost, "ada-cost"),
    (MethodId::AdaUboost, "ada-uboost"),
    (MethodId::AsymBoost, "asym-boost"),
];

impl MethodId {
    /// Every method, in the canonical listing order.
    pub const ALL: [MethodId; 14] = [
        MethodId::SelfPacedEnsemble,
        MethodId::BalanceCascade,
        MethodId::RusBoost,
        MethodId::SmoteBoost,
        MethodId::KmeansSmoteBoost,
        MethodId::OverBoost,
        MethodId::UnderBagging,
        MethodId::OverBagging,
        MethodId::SmoteBagging,
        MethodId::BalancedRandomForest,
        MethodId::EasyEnsemble,
        MethodId::AdaCost,
        MethodId::AdaUboost,
        MethodId::AsymBoost,
    ];

    pub fn as_str(&self) -> &'static str {
        METHOD_NAMES.iter().find(|(m, _)| m == self).unwrap().1
    }

    /// True for the cost-sensitive reweighting methods (they accept a cost
    /// matrix; all other methods reject one).
    pub fn uses_cost_matrix(&self) -> bool {
        matches!(self, MethodId::AdaCost | MethodId::AdaUboost | MethodId::AsymBoost)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        METHOD_NAMES
            .iter()
            .find(|(_, name)| *name == s)
            .map(|(m, _)| *m)
            .ok_or_else(|| Error::UnknownName { name: s.to_string() })
    }
}

impl Serialize for MethodId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MethodId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// K×K misclassification costs: entry `[i][j]` is the cost of predicting
/// class `j` when the truth is class `i`. The diagonal is zero and at least
/// one off-diagonal entry must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    costs: Vec<f64>,
    n_classes: usize,
}

impl CostMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidCostMatrix { reason: "matrix is empty".into() });
        }
        let mut costs = Vec::with_capacity(k * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidCostMatrix {
                    reason: format!("row {i} has {} entries, expected {k}", row.len()),
                });
            }
            costs.extend_from_slice(row);
        }
        let matrix = CostMatrix { costs, n_classes: k };
        matrix.check()?;
        Ok(matrix)
    }

    /// All off-diagonal costs 1 — the cost-neutral matrix.
    pub fn uniform(n_classes: usize) -> Result<Self> {
        let mut costs = vec![1.0; n_classes * n_classes];
        for i in 0..n_classes {
            costs[i * n_classes + i] = 0.0;
        }
        let matrix = CostMatrix { costs, n_classes };
        matrix.check()?;
        Ok(matrix)
    }

    /// Off-diagonal cost of misclassifying class `i` set to
    /// `n_total / (K · n_i)`, so rare classes are expensive to get wrong.
    pub fn inverse_frequency(distribution: &ClassDistribution) -> Result<Self> {
        let k = distribution
            .counts()
            .keys()
            .max()
            .map(|m| m + 1)
            .unwrap_or(0);
        let total = distribution.total() as f64;
        let mut costs = vec![0.0; k * k];
        for i in 0..k {
            let count = distribution.count(i);
            let cost = if count == 0 { 1.0 } else { total / (k as f64 * count as f64) };
            for j in 0..k {
                if i != j {
                    costs[i * k + j] = cost;
                }
            }
        }
        let matrix = CostMatrix { costs, n_classes: k };
        matrix.check()?;
        Ok(matrix)
    }

    fn check(&self) -> Result<()> {
        let k = self.n_classes;
        let mut any_positive = false;
        for i in 0..k {
            for j in 0..k {
                let value = self.get(i, j);
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::InvalidCostMatrix {
                        reason: format!("entry [{i}][{j}] = {value} is not a finite nonnegative number"),
                    });
                }
                if i == j && value != 0.0 {
                    return Err(Error::InvalidCostMatrix {
                        reason: format!("diagonal entry [{i}][{i}] = {value} must be 0"),
                    });
                }
                if i != j && value > 0.0 {
                    any_positive = true;
                }
            }
        }
        if !any_positive {
            return Err(Error::InvalidCostMatrix {
                reason: "at least one off-diagonal entry must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Cost of predicting `predicted` when the truth is `truth`.
    pub fn get(&self, truth: usize, predicted: usize) -> f64 {
        self.costs[truth * self.n_classes + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.costs.chunks_exact(self.n_classes).map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn max_cost(&self) -> f64 {
        self.costs.iter().cloned().fold(0.0, f64::max)
    }

    pub(crate) fn row_max(&self, truth: usize) -> f64 {
        (0..self.n_classes).map(|j| self.get(truth, j)).fold(0.0, f64::max)
    }

    pub(crate) fn col_max(&self, predicted: usize) -> f64 {
        (0..self.n_classes).map(|i| self.get(i, predicted)).fold(0.0, f64::max)
    }
}

/// Training-time logging cadence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainVerbose {
    Off,
    /// Log iterations 0, n, 2n, … plus the final one.
    EveryN(usize),
    Full,
}

/// Everything a fit needs beyond the data itself. `tree_params: None` picks
/// the method's own default base learner (depth-1 stumps inside boosting,
/// depth-10 trees elsewhere).
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub n_estimators: usize,
    pub tree_params: Option<TreeParams>,
    pub schedule: BalancingSchedule,
    /// Explicit resampling anchor class (see `resolve_sampling_targets`).
    pub target_label: Option<usize>,
    /// Explicit resampling target specification; presence of either explicit
    /// field overrides the method's default under/over direction.
    pub n_target_samples: Option<TargetSpec>,
    pub eval_datasets: BTreeMap<String, Dataset>,
    pub eval_metrics: Vec<String>,
    pub train_verbose: TrainVerbose,
    pub seed: RandomSeed,
    /// Worker threads for the parallel (bagging-family) methods; `None`
    /// uses the ambient rayon pool. Results never depend on this.
    pub n_jobs: Option<usize>,
    /// Boosting rounds inside each easy-ensemble member.
    pub inner_rounds: usize,
    /// Hardness bins for self-paced undersampling.
    pub k_bins: usize,
    /// Neighbours for the SMOTE-based samplers.
    pub k_neighbors: usize,
    /// Clusters for the k-means SMOTE sampler.
    pub n_clusters: usize,
    /// Cluster eligibility threshold for the k-means SMOTE sampler.
    pub imbalance_ratio_threshold: f64,
    /// Record the full boosting weight vector after every round into the
    /// training log (diagnostic; off by default).
    pub record_weight_history: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_estimators: 50,
            tree_params: None,
            schedule: BalancingSchedule::Uniform,
            target_label: None,
            n_target_samples: None,
            eval_datasets: BTreeMap::new(),
            eval_metrics: metric_names().iter().map(|s| s.to_string()).collect(),
            train_verbose: TrainVerbose::Off,
            seed: RandomSeed(0),
            n_jobs: None,
            inner_rounds: 10,
            k_bins: 5,
            k_neighbors: 5,
            n_clusters: 5,
            imbalance_ratio_threshold: 0.5,
            record_weight_history: false,
        }
    }
}

impl TrainConfig {
    pub fn with_seed(seed: RandomSeed) -> Self {
        TrainConfig { seed, ..TrainConfig::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter { reason: "n_estimators must be at least 1".into() });
        }
        if self.train_verbose == TrainVerbose::EveryN(0) {
            return Err(Error::InvalidParameter { reason: "every_n interval must be at least 1".into() });
        }
        for (name, value) in [
            ("inner_rounds", self.inner_rounds),
            ("k_bins", self.k_bins),
            ("k_neighbors", self.k_neighbors),
            ("n_clusters", self.n_clusters),
        ] {
            if value == 0 {
                return Err(Error::InvalidParameter {
                    reason: format!("{name} must be at least 1"),
                });
            }
        }
        if !self.imbalance_ratio_threshold.is_finite() || self.imbalance_ratio_threshold < 0.0 {
            return Err(Error::InvalidParameter {
                reason: "imbalance_ratio_threshold must be finite and nonnegative".into(),
            });
        }
        for name in &self.eval_metrics {
            metric_by_name(name)?;
        }
        Ok(())
    }
}

/// One logged training iteration: metric values per evaluation dataset plus
/// the class counts of the round's resampled training set. Boosting methods
/// additionally record the post-update weight mass per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub iteration: usize,
    /// dataset name → metric name → value.
    pub metrics: BTreeMap<String, BTreeMap<String, f64>>,
    pub resampled_counts: BTreeMap<usize, usize>,
    /// Total boosting weight per class after this round's update (empty for
    /// methods without boosting weights).
    pub class_weight_mass: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
    /// Balance-cascade only: per trained round, the size of each remaining
    /// majority-pool class at training time.
    pub pool_sizes: Vec<BTreeMap<usize, usize>>,
    /// Boosting weight vectors after each round, recorded only when
    /// `TrainConfig::record_weight_history` is set.
    pub weight_history: Vec<Vec<f64>>,
}

/// One voting member: a single tree, or a boosting chain treated as a unit
/// (easy-ensemble's inner chains).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MemberLearner {
    Tree(FittedTree),
    Chain(Vec<ChainLink>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub tree: FittedTree,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub learner: MemberLearner,
    pub vote_weight: f64,
}

impl MemberLearner {
    fn first_tree(&self) -> &FittedTree {
        match self {
            MemberLearner::Tree(tree) => tree,
            MemberLearner::Chain(links) => &links[0].tree,
        }
    }
}

/// A fitted ensemble: ordered members with vote weights, the class space,
/// and the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    method: MethodId,
    n_classes: usize,
    class_names: Vec<String>,
    members: Vec<EnsembleMember>,
    training_log: TrainingLog,
}

impl EnsembleModel {
    pub(crate) fn from_training(
        method: MethodId,
        n_classes: usize,
        members: Vec<EnsembleMember>,
        training_log: TrainingLog,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::AllRoundsRejected);
        }
        let model = EnsembleModel {
            method,
            n_classes,
            class_names: (0..n_classes).map(|c| c.to_string()).collect(),
            members,
            training_log,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn method(&self) -> MethodId {
        self.method
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.members[0].learner.first_tree().n_features()
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Replace the default "0", "1", … class names (one per class).
    pub fn set_class_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.n_classes {
            return Err(Error::ShapeMismatch {
                expected: format!("{} class names", self.n_classes),
                got: format!("{}", names.len()),
            });
        }
        self.class_names = names;
        Ok(())
    }

    pub fn training_log(&self) -> &TrainingLog {
        &self.training_log
    }

    /// Structural consistency: used after fitting and after deserializing.
    pub fn validate(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::InvalidModelFile { reason: "model has no members".into() });
        }
        if self.class_names.len() != self.n_classes {
            return Err(Error::InvalidModelFile {
                reason: format!(
                    "{} class names for {} classes",
                    self.class_names.len(),
                    self.n_classes
                ),
            });
        }
        if !self.members.iter().any(|m| m.vote_weight > 0.0) {
            return Err(Error::InvalidModelFile {
                reason: "no member has a positive vote weight".into(),
            });
        }
        let width = self.n_features();
        for member in &self.members {
            if !member.vote_weight.is_finite() || member.vote_weight < 0.0 {
                return Err(Error::InvalidModelFile {
                    reason: format!("vote weight {} is not finite and nonnegative", member.vote_weight),
                });
            }
            let trees: Vec<&FittedTree> = match &member.learner {
                MemberLearner::Tree(tree) => vec![tree],
                MemberLearner::Chain(links) => {
                    if links.is_empty() {
                        return Err(Error::InvalidModelFile {
                            reason: "chain member has no trees".into(),
                        });
                    }
                    links.iter().map(|l| &l.tree).collect()
                }
            };
            for tree in trees {
                tree.validate()?;
                if tree.n_classes() != self.n_classes || tree.n_features() != width {
                    return Err(Error::InvalidModelFile {
                        reason: "member tree shape disagrees with the model header".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// α-weighted average of member probabilities, renormalized per row.
    pub fn predict_proba(&self, features: &[f64]) -> Result<Vec<Vec<f64>>> {
        predict_proba_members(&self.members, self.n_classes, self.n_features(), features)
    }

    /// Argmax of [`Self::predict_proba`]; ties go to the lowest class id.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(features)?.iter().map(|row| argmax(row)).collect())
    }

    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<usize>> {
        if dataset.n_features() != self.n_features() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features()),
                got: format!("{}", dataset.n_features()),
            });
        }
        self.predict(dataset.features())
    }
}

pub fn ensemble_predict_proba(model: &EnsembleModel, features: &[f64]) -> Result<Vec<Vec<f64>>> {
    model.predict_proba(features)
}

pub fn ensemble_predict(model: &EnsembleModel, features: &[f64]) -> Result<Vec<usize>> {
    model.predict(features)
}

/// Train `method` on `dataset`. The cost matrix is only meaningful for the
/// reweighting methods; those default to the cost-neutral uniform matrix
/// when none is given, and every other method rejects one.
pub fn fit_ensemble(
    method: MethodId,
    dataset: &Dataset,
    cost_matrix: Option<&CostMatrix>,
    config: &TrainConfig,
) -> Result<EnsembleModel> {
    if cost_matrix.is_some() && !method.uses_cost_matrix() {
        return Err(Error::InvalidParameter {
            reason: format!("{method} does not take a cost matrix"),
        });
    }
    match method {
        MethodId::SelfPacedEnsemble => fit_self_paced_ensemble(dataset, config),
        MethodId::BalanceCascade => fit_balance_cascade(dataset, config),
        MethodId::RusBoost => fit_resample_boost(ResampleBoostVariant::RusBoost, dataset, config),
        MethodId::SmoteBoost => {
            fit_resample_boost(ResampleBoostVariant::SmoteBoost, dataset, config)
        }
        MethodId::KmeansSmoteBoost => {
            fit_resample_boost(ResampleBoostVariant::KmeansSmoteBoost, dataset, config)
        }
        MethodId::OverBoost => fit_resample_boost(ResampleBoostVariant::OverBoost, dataset, config),
        MethodId::UnderBagging => {
            fit_bagging_ensemble(BaggingVariant::UnderBagging, dataset, config)
        }
        MethodId::OverBagging => fit_bagging_ensemble(BaggingVariant::OverBagging, dataset, config),
        MethodId::SmoteBagging => {
            fit_bagging_ensemble(BaggingVariant::SmoteBagging, dataset, config)
        }
        MethodId::BalancedRandomForest => {
            fit_bagging_ensemble(BaggingVariant::BalancedRandomForest, dataset, config)
        }
        MethodId::EasyEnsemble => {
            fit_bagging_ensemble(BaggingVariant::EasyEnsemble, dataset, config)
        }
        MethodId::AdaCost | MethodId::AdaUboost | MethodId::AsymBoost => {
            let variant = match method {
                MethodId::AdaCost => ReweightBoostVariant::AdaCost,
                MethodId::AdaUboost => ReweightBoostVariant::AdaUboost,
                _ => ReweightBoostVariant::AsymBoost,
            };
            match cost_matrix {
                Some(matrix) => fit_reweight_boost(variant, dataset, matrix, config),
                None => {
                    let uniform = CostMatrix::uniform(dataset.n_classes())?;
                    fit_reweight_boost(variant, dataset, &uniform, config)
                }
            }
        }
    }
}

/// Run `f` on the ambient rayon pool, or on a dedicated pool of `n_jobs`
/// threads. Callers guarantee the result does not depend on the worker count.
pub(crate) fn with_worker_pool<R: Send>(
    n_jobs: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R> {
    match n_jobs {
        Some(jobs) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParameter {
                reason: format!("could not build a {jobs}-thread worker pool: {e}"),
            })?
            .install(f)),
        None => Ok(f()),
    }
}

/// First index of the row maximum — the shared tie-to-lowest-class rule.
pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, &value) in row.iter().enumerate() {
        if value > best_value {
            best = i;
            best_value = value;
        }
    }
    best
}

/// Flat n×K probabilities of one member on a flat row-major feature matrix.
pub(crate) fn member_probabilities(learner: &MemberLearner, features: &[f64]) -> Result<Vec<f64>> {
    match learner {
        MemberLearner::Tree(tree) => flat_tree_probabilities(tree, features),
        MemberLearner::Chain(links) => {
            let k = links[0].tree.n_classes();
            let n = features.len() / links[0].tree.n_features();
            let mut acc = vec![0.0; n * k];
            let mut alpha_sum = 0.0;
            for link in links {
                let probs = flat_tree_probabilities(&link.tree, features)?;
                for (a, p) in acc.iter_mut().zip(&probs) {
                    *a += link.alpha * p;
                }
                alpha_sum += link.alpha;
            }
            for value in &mut acc {
                *value /= alpha_sum;
            }
            Ok(acc)
        }
    }
}

fn flat_tree_probabilities(tree: &FittedTree, features: &[f64]) -> Result<Vec<f64>> {
    let width = tree.n_features();
    if features.len() % width != 0 {
        return Err(Error::ShapeMismatch {
            expected: format!("a multiple of {width} feature values"),
            got: format!("{}", features.len()),
        });
    }
    let mut out = Vec::with_capacity(features.len() / width * tree.n_classes());
    for row in features.chunks_exact(width) {
        out.extend_from_slice(tree.predict_proba_row(row));
    }
    Ok(out)
}

/// Core combination rule shared by final prediction and partial-ensemble
/// evaluation during logging: Σ_t α_t·P_t / Σ_t α_t, rows renormalized.
/// Members are accumulated strictly in order, so an incremental evaluation
/// after round t is bit-identical to a post-hoc evaluation of the first
/// t+1 members.
pub(crate) fn predict_proba_members(
    members: &[EnsembleMember],
    n_classes: usize,
    n_features: usize,
    features: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if members.is_empty() {
        return Err(Error::EmptyInput);
    }
    if features.len() % n_features != 0 {
        return Err(Error::ShapeMismatch {
            expected: format!("a multiple of {n_features} feature values"),
            got: format!("{}", features.len()),
        });
    }
    let n = features.len() / n_features;
    let mut acc = vec![0.0f64; n * n_classes];
    let mut vote_sum = 0.0;
    for member in members {
        let probs = member_probabilities(&member.learner, features)?;
        for (a, p) in acc.iter_mut().zip(&probs) {
            *a += member.vote_weight * p;
        }
        vote_sum += member.vote_weight;
    }
    Ok(acc
        .chunks_exact(n_classes)
        .map(|row| {
            let scaled: Vec<f64> = row.iter().map(|v| v / vote_sum).collect();
            let sum: f64 = scaled.iter().sum();
            scaled.iter().map(|v| v / sum).collect()
        })
        .collect())
}

pub(crate) fn predict_members_labels(
    members: &[EnsembleMember],
    n_classes: usize,
    n_features: usize,
    features: &[f64],
) -> Result<Vec<usize>> {
    Ok(predict_proba_members(members, n_classes, n_features, features)?
        .iter()
        .map(|row| argmax(row))
        .collect())
}

/// Shared fit-entry checks; returns the class count (max label + 1).
pub(crate) fn preflight(dataset: &Dataset, config: &TrainConfig) -> Result<usize> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate()?;
    Ok(dataset.n_classes())
}

/// Final (end-of-training) resampling targets: the method's own direction by
/// default, or explicit user targets when either explicit field is present.
pub(crate) fn resolve_final_targets(
    distribution: &ClassDistribution,
    default_mode: TargetMode,
    config: &TrainConfig,
) -> Result<SamplingTargets> {
    let mode = if config.target_label.is_some() || config.n_target_samples.is_some() {
        TargetMode::Explicit
    } else {
        default_mode
    };
    resolve_sampling_targets(distribution, mode, config.target_label, config.n_target_samples.as_ref())
}

pub(crate) fn should_log(verbose: TrainVerbose, iteration: usize) -> bool {
    match verbose {
        TrainVerbose::Off => false,
        TrainVerbose::Full => true,
        TrainVerbose::EveryN(interval) => iteration % interval == 0,
    }
}

/// Pre-validated evaluation plan for training logs. Building it fails fast
/// on unknown metrics, shape mismatches, or evaluation sets missing classes,
/// so logging itself can never error mid-training.
pub(crate) struct EvalPlan<'a> {
    datasets: Vec<(&'a str, &'a Dataset)>,
    metrics: Vec<(&'a str, MetricFn)>,
    n_classes: usize,
}

impl<'a> EvalPlan<'a> {
    pub(crate) fn build(config: &'a TrainConfig, n_classes: usize, n_features: usize) -> Result<Self> {
        let mut datasets = Vec::new();
        for (name, dataset) in &config.eval_datasets {
            if dataset.is_empty() {
                return Err(Error::EmptyDataset);
            }
            if dataset.n_features() != n_features {
                return Err(Error::ShapeMismatch {
                    expected: format!("{n_features} features in eval dataset '{name}'"),
                    got: format!("{}", dataset.n_features()),
                });
            }
            if let Some(&label) = dataset.labels().iter().find(|&&y| y >= n_classes) {
                return Err(Error::LabelOutOfRange { label, n_classes });
            }
            for class in 0..n_classes {
                if !dataset.labels().contains(&class) {
                    return Err(Error::AbsentTrueClass { class });
                }
            }
            datasets.push((name.as_str(), dataset));
        }
        let metrics = config
            .eval_metrics
            .iter()
            .map(|name| metric_by_name(name).map(|f| (name.as_str(), f)))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalPlan { datasets, metrics, n_classes })
    }

    /// Evaluate the partial ensemble `members` and assemble one log record.
    pub(crate) fn record(
        &self,
        iteration: usize,
        members: &[EnsembleMember],
        n_features: usize,
        resampled_counts: BTreeMap<usize, usize>,
        class_weight_mass: BTreeMap<usize, f64>,
    ) -> Result<LogRecord> {
        let mut metrics = BTreeMap::new();
        for (name, dataset) in &self.datasets {
            let predictions =
                predict_members_labels(members, self.n_classes, n_features, dataset.features())?;
            let cm = confusion_matrix(dataset.labels(), &predictions, self.n_classes)?;
            let mut values = BTreeMap::new();
            for (metric_name, metric) in &self.metrics {
                values.insert(metric_name.to_string(), metric(&cm)?);
            }
            metrics.insert(name.to_string(), values);
        }
        Ok(LogRecord {
            iteration,
            metrics,
            resampled_counts,
            class_weight_mass,
        })
    }
}

/// Per-class totals of a boosting weight vector.
pub(crate) fn class_weight_mass(weights: &[f64], labels: &[usize]) -> BTreeMap<usize, f64> {
    let mut mass = BTreeMap::new();
    for (&w, &y) in weights.iter().zip(labels) {
        *mass.entry(y).or_insert(0.0) += w;
    }
    mass
}
