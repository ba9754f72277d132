//! Multi-class (SAMME-style) boosting: the shared round engine plus the
//! resampling variants (random under/over, SMOTE, k-means SMOTE) and the
//! cost-sensitive reweighting variants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassDistribution, Dataset};
use crate::error::{Error, Result};
use crate::rng::RandomSeed;
use crate::samplers::{
    kmeans_smote_sample, random_over_sample, random_under_sample, smote_sample, ResampleTrace,
    SamplingTargets, TargetMode,
};
use crate::scheduler::{schedule_targets, BalancingSchedule};
use crate::tree::{fit_tree_with_classes, FittedTree, TreeParams};

use super::{
    class_weight_mass, preflight, resolve_final_targets, should_log, ChainLink, CostMatrix,
    EnsembleMember, EnsembleModel, EvalPlan, MemberLearner, MethodId, TrainConfig, TrainVerbose,
    TrainingLog,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResampleBoostVariant {
    RusBoost,
    OverBoost,
    SmoteBoost,
    KmeansSmoteBoost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReweightBoostVariant {
    AdaCost,
    AdaUboost,
    AsymBoost,
}

/// Vote weight assigned to a round with zero training error; training stops
/// early after such a round.
fn capped_alpha(n_classes: usize) -> f64 {
    1e9f64.ln() + (n_classes as f64 - 1.0).ln()
}

/// One boosting round's member production and weight update. Implementations
/// differ in whether they resample before fitting and in how weights react
/// to mistakes; the surrounding SAMME bookkeeping is shared.
trait BoostRound {
    /// Fit this round's tree from the current weights; also report the class
    /// counts of the data the tree actually saw (for the training log).
    /// `retry` selects fresh derived seed streams after a rejected round.
    fn fit_round(
        &mut self,
        round: usize,
        retry: bool,
        weights: &[f64],
    ) -> Result<(FittedTree, BTreeMap<usize, usize>)>;

    /// Multiply each weight by the round's update factor (no normalization).
    fn adjust_weights(&self, weights: &mut [f64], alpha: f64, predictions: &[usize], labels: &[usize]);
}

struct BoostOutcome {
    members: Vec<EnsembleMember>,
    log: TrainingLog,
}

/// The shared SAMME loop. Per round: fit via the round implementation,
/// measure the weighted error ε on the ORIGINAL dataset, reject the member
/// when ε ≥ 1 − 1/K (reset weights to uniform and retry the round once; a
/// second consecutive rejection stops training), stop early with a capped
/// vote weight when ε = 0, otherwise α = ln((1−ε)/ε) + ln(K−1), update and
/// renormalize weights, and log per the verbosity rule (the final trained
/// round is always logged when logging is on at all).
fn run_boost_rounds<R: BoostRound>(
    dataset: &Dataset,
    n_classes: usize,
    n_rounds: usize,
    verbose: TrainVerbose,
    record_weight_history: bool,
    eval: Option<&EvalPlan<'_>>,
    mut round_impl: R,
) -> Result<BoostOutcome> {
    let n = dataset.n_samples();
    let labels = dataset.labels();
    let k = n_classes as f64;
    let rejection_threshold = 1.0 - 1.0 / k;
    let uniform = 1.0 / n as f64;

    let mut weights = vec![uniform; n];
    let mut members: Vec<EnsembleMember> = Vec::new();
    let mut log = TrainingLog::default();
    let mut consecutive_rejections = 0u32;
    let mut last_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut last_logged: Option<usize> = None;
    let mut last_round = 0;
    let mut round = 0;

    while round < n_rounds {
        let retry = consecutive_rejections > 0;
        let (tree, counts) = round_impl
            .fit_round(round, retry, &weights)
            .map_err(|e| e.in_round(round))?;
        let predictions: Vec<usize> = dataset
            .features()
            .chunks_exact(dataset.n_features())
            .map(|row| super::argmax(tree.predict_proba_row(row)))
            .collect();
        let epsilon: f64 = weights
            .iter()
            .zip(&predictions)
            .zip(labels)
            .filter(|((_, p), y)| p != y)
            .map(|((w, _), _)| *w)
            .sum();

        if epsilon >= rejection_threshold {
            consecutive_rejections += 1;
            if consecutive_rejections >= 2 {
                break;
            }
            weights = vec![uniform; n];
            continue;
        }
        consecutive_rejections = 0;

        let zero_error = epsilon <= 0.0;
        let alpha = if zero_error {
            capped_alpha(n_classes)
        } else {
            ((1.0 - epsilon) / epsilon).ln() + (k - 1.0).ln()
        };
        if !zero_error {
            round_impl.adjust_weights(&mut weights, alpha, &predictions, labels);
            let total: f64 = weights.iter().sum();
            if !total.is_finite() || total <= 0.0 {
                return Err(Error::DegenerateWeights {
                    reason: format!("boosting weights summed to {total} after the update"),
                }
                .in_round(round));
            }
            for w in &mut weights {
                *w /= total;
            }
        }

        members.push(EnsembleMember {
            learner: MemberLearner::Tree(tree),
            vote_weight: alpha,
        });
        if record_weight_history {
            log.weight_history.push(weights.clone());
        }
        last_counts = counts;
        last_round = round;
        if let Some(plan) = eval {
            if should_log(verbose, round) {
                log.records.push(plan.record(
                    round,
                    &members,
                    dataset.n_features(),
                    last_counts.clone(),
                    class_weight_mass(&weights, labels),
                )?);
                last_logged = Some(round);
            }
        }
        round += 1;
        if zero_error {
            break;
        }
    }

    if members.is_empty() {
        return Err(Error::AllRoundsRejected);
    }
    if let Some(plan) = eval {
        if verbose != TrainVerbose::Off && last_logged != Some(last_round) {
            log.records.push(plan.record(
                last_round,
                &members,
                dataset.n_features(),
                last_counts,
                class_weight_mass(&weights, labels),
            )?);
        }
    }
    Ok(BoostOutcome { members, log })
}

/// Plain SAMME rounds: fit directly on the full dataset with the current
/// weights; mistakes are multiplied by e^α.
struct PlainRound<'a> {
    dataset: &'a Dataset,
    params: TreeParams,
    n_classes: usize,
    seed: RandomSeed,
    seed_tags: (&'static str, &'static str),
    counts: BTreeMap<usize, usize>,
}

impl<'a> PlainRound<'a> {
    fn new(
        dataset: &'a Dataset,
        params: TreeParams,
        n_classes: usize,
        seed: RandomSeed,
        seed_tags: (&'static str, &'static str),
    ) -> Self {
        PlainRound {
            dataset,
            params,
            n_classes,
            seed,
            seed_tags,
            counts: dataset.distribution().counts().clone(),
        }
    }
}

impl BoostRound for PlainRound<'_> {
    fn fit_round(
        &mut self,
        round: usize,
        retry: bool,
        weights: &[f64],
    ) -> Result<(FittedTree, BTreeMap<usize, usize>)> {
        let tag = if retry { self.seed_tags.1 } else { self.seed_tags.0 };
        let tree = fit_tree_with_classes(
            self.dataset,
            weights,
            &self.params,
            self.n_classes,
            self.seed.derive(tag, round as u64),
        )?;
        Ok((tree, self.counts.clone()))
    }

    fn adjust_weights(&self, weights: &mut [f64], alpha: f64, predictions: &[usize], labels: &[usize]) {
        let factor = alpha.exp();
        for i in 0..weights.len() {
            if predictions[i] != labels[i] {
                weights[i] *= factor;
            }
        }
    }
}

/// Resampling rounds: per-round schedule targets, variant sampler, then a
/// tree on the resample. Kept rows inherit their source row's weight;
/// synthetic rows take the mean current weight of their class.
struct ResampleRound<'a> {
    dataset: &'a Dataset,
    distribution: ClassDistribution,
    final_targets: SamplingTargets,
    schedule: &'a BalancingSchedule,
    variant: ResampleBoostVariant,
    params: TreeParams,
    n_classes: usize,
    n_rounds: usize,
    seed: RandomSeed,
    k_neighbors: usize,
    n_clusters: usize,
    imbalance_ratio_threshold: f64,
}

impl ResampleRound<'_> {
    fn resample_weights(&self, trace: &ResampleTrace, weights: &[f64]) -> Vec<f64> {
        let mut resampled = Vec::with_capacity(trace.kept_indices.len() + trace.synthetic.len());
        resampled.extend(trace.kept_indices.iter().map(|&i| weights[i]));
        if !trace.synthetic.is_empty() {
            let mut mass = vec![0.0; self.n_classes];
            let mut count = vec![0usize; self.n_classes];
            for (i, &y) in self.dataset.labels().iter().enumerate() {
                mass[y] += weights[i];
                count[y] += 1;
            }
            resampled.extend(
                trace
                    .synthetic
                    .iter()
                    .map(|record| mass[record.class] / count[record.class] as f64),
            );
        }
        resampled
    }
}

impl BoostRound for ResampleRound<'_> {
    fn fit_round(
        &mut self,
        round: usize,
        retry: bool,
        weights: &[f64],
    ) -> Result<(FittedTree, BTreeMap<usize, usize>)> {
        let targets = schedule_targets(
            self.schedule,
            &self.distribution,
            &self.final_targets,
            round,
            self.n_rounds,
        )?;
        let sampler_seed = self
            .seed
            .derive(if retry { "round-retry" } else { "round" }, round as u64);
        let (resampled, trace) = match self.variant {
            ResampleBoostVariant::RusBoost => {
                random_under_sample(self.dataset, &targets, false, sampler_seed)?
            }
            ResampleBoostVariant::OverBoost => {
                random_over_sample(self.dataset, &targets, sampler_seed)?
            }
            ResampleBoostVariant::SmoteBoost => {
                smote_sample(self.dataset, &targets, self.k_neighbors, sampler_seed)?
            }
            ResampleBoostVariant::KmeansSmoteBoost => kmeans_smote_sample(
                self.dataset,
                &targets,
                self.n_clusters,
                self.k_neighbors,
                self.imbalance_ratio_threshold,
                sampler_seed,
            )?,
        };
        let resampled_weights = self.resample_weights(&trace, weights);
        let tree_seed = self
            .seed
            .derive(if retry { "member-retry" } else { "member" }, round as u64);
        let tree = fit_tree_with_classes(
            &resampled,
            &resampled_weights,
            &self.params,
            self.n_classes,
            tree_seed,
        )?;
        Ok((tree, resampled.distribution().counts().clone()))
    }

    fn adjust_weights(&self, weights: &mut [f64], alpha: f64, predictions: &[usize], labels: &[usize]) {
        let factor = alpha.exp();
        for i in 0..weights.len() {
            if predictions[i] != labels[i] {
                weights[i] *= factor;
            }
        }
    }
}

/// Cost-sensitive rounds: plain fits, variant-specific weight updates. With
/// the uniform cost matrix every update reduces exactly to plain SAMME.
struct CostRound<'a> {
    plain: PlainRound<'a>,
    variant: ReweightBoostVariant,
    cost: &'a CostMatrix,
    max_cost: f64,
    /// Per-class max misclassification cost (the "how expensive is it to get
    /// this class wrong" scale used on correctly classified rows).
    row_max: Vec<f64>,
    /// AsymBoost per-class multiplier k^(1/(2T)), 1.0 for other variants.
    asym_multiplier: Vec<f64>,
}

impl BoostRound for CostRound<'_> {
    fn fit_round(
        &mut self,
        round: usize,
        retry: bool,
        weights: &[f64],
    ) -> Result<(FittedTree, BTreeMap<usize, usize>)> {
        self.plain.fit_round(round, retry, weights)
    }

    fn adjust_weights(&self, weights: &mut [f64], alpha: f64, predictions: &[usize], labels: &[usize]) {
        match self.variant {
            // Misclassified rows grow by exp(α·(0.5c+0.5)) with c the
            // normalized cost of the actual confusion; correct rows decay by
            // exp(α·(0.5c−0.5)) with c the normalized worst-case cost of
            // their class, so expensive classes keep their mass longer.
            ReweightBoostVariant::AdaCost => {
                for i in 0..weights.len() {
                    let truth = labels[i];
                    if predictions[i] != truth {
                        let c = self.cost.get(truth, predictions[i]) / self.max_cost;
                        weights[i] *= (alpha * (0.5 * c + 0.5)).exp();
                    } else {
                        let c = self.row_max[truth] / self.max_cost;
                        weights[i] *= (alpha * (0.5 * c - 0.5)).exp();
                    }
                }
            }
            // Cost scales only the misclassified-row updates.
            ReweightBoostVariant::AdaUboost => {
                let factor = alpha.exp();
                for i in 0..weights.len() {
                    let truth = labels[i];
                    if predictions[i] != truth {
                        let c = self.cost.get(truth, predictions[i]) / self.max_cost;
                        weights[i] *= c * factor;
                    }
                }
            }
            // Every round tilts each row by its class asymmetry ratio,
            // spreading the total k_i tilt evenly across the T rounds, on
            // top of the plain SAMME update.
            ReweightBoostVariant::AsymBoost => {
                let factor = alpha.exp();
                for i in 0..weights.len() {
                    weights[i] *= self.asym_multiplier[labels[i]];
                    if predictions[i] != labels[i] {
                        weights[i] *= factor;
                    }
                }
            }
        }
    }
}

fn boosting_params(config: &TrainConfig) -> TreeParams {
    config.tree_params.unwrap_or_else(TreeParams::stump)
}

fn require_multiclass(n_classes: usize) -> Result<()> {
    if n_classes < 2 {
        return Err(Error::InvalidParameter {
            reason: "boosting requires at least two classes".into(),
        });
    }
    Ok(())
}

/// Boosting over per-round resampled data (random under/over, SMOTE or
/// k-means SMOTE, per `variant`), with per-round targets supplied by the
/// balancing schedule.
pub fn fit_resample_boost(
    variant: ResampleBoostVariant,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<EnsembleModel> {
    let n_classes = preflight(dataset, config)?;
    require_multiclass(n_classes)?;
    let distribution = dataset.distribution();
    let default_mode = match variant {
        ResampleBoostVariant::RusBoost => TargetMode::UnderToMinority,
        _ => TargetMode::OverToMajority,
    };
    let final_targets = resolve_final_targets(&distribution, default_mode, config)?;
    let eval = EvalPlan::build(config, n_classes, dataset.n_features())?;
    let round_impl = ResampleRound {
        dataset,
        distribution,
        final_targets,
        schedule: &config.schedule,
        variant,
        params: boosting_params(config),
        n_classes,
        n_rounds: config.n_estimators,
        seed: config.seed,
        k_neighbors: config.k_neighbors,
        n_clusters: config.n_clusters,
        imbalance_ratio_threshold: config.imbalance_ratio_threshold,
    };
    let outcome = run_boost_rounds(
        dataset,
        n_classes,
        config.n_estimators,
        config.train_verbose,
        config.record_weight_history,
        Some(&eval),
        round_impl,
    )?;
    let method = match variant {
        ResampleBoostVariant::RusBoost => MethodId::RusBoost,
        ResampleBoostVariant::OverBoost => MethodId::OverBoost,
        ResampleBoostVariant::SmoteBoost => MethodId::SmoteBoost,
        ResampleBoostVariant::KmeansSmoteBoost => MethodId::KmeansSmoteBoost,
    };
    EnsembleModel::from_training(method, n_classes, outcome.members, outcome.log)
}

/// Cost-sensitive boosting without resampling: AdaCost, AdaUBoost or
/// AsymBoost weight updates driven by `cost_matrix`.
pub fn fit_reweight_boost(
    variant: ReweightBoostVariant,
    dataset: &Dataset,
    cost_matrix: &CostMatrix,
    config: &TrainConfig,
) -> Result<EnsembleModel> {
    let n_classes = preflight(dataset, config)?;
    require_multiclass(n_classes)?;
    if cost_matrix.n_classes() != n_classes {
        return Err(Error::InvalidCostMatrix {
            reason: format!(
                "matrix is {0}×{0} but the dataset has {1} classes",
                cost_matrix.n_classes(),
                n_classes
            ),
        });
    }
    let row_max: Vec<f64> = (0..n_classes).map(|c| cost_matrix.row_max(c)).collect();
    let mut asym_multiplier = vec![1.0; n_classes];
    if variant == ReweightBoostVariant::AsymBoost {
        let distribution = dataset.distribution();
        for (&class, _) in distribution.counts() {
            let col_max = cost_matrix.col_max(class);
            if row_max[class] <= 0.0 || col_max <= 0.0 {
                return Err(Error::InvalidCostMatrix {
                    reason: format!(
                        "asymmetry ratio for class {class} is undefined: its cost row or column is all zero"
                    ),
                });
            }
            let ratio = row_max[class] / col_max;
            asym_multiplier[class] = ratio.powf(1.0 / (2.0 * config.n_estimators as f64));
        }
    }
    let eval = EvalPlan::build(config, n_classes, dataset.n_features())?;
    let round_impl = CostRound {
        plain: PlainRound::new(
            dataset,
            boosting_params(config),
            n_classes,
            config.seed,
            ("member", "member-retry"),
        ),
        variant,
        cost: cost_matrix,
        max_cost: cost_matrix.max_cost(),
        row_max,
        asym_multiplier,
    };
    let outcome = run_boost_rounds(
        dataset,
        n_classes,
        config.n_estimators,
        config.train_verbose,
        config.record_weight_history,
        Some(&eval),
        round_impl,
    )?;
    let method = match variant {
        ReweightBoostVariant::AdaCost => MethodId::AdaCost,
        ReweightBoostVariant::AdaUboost => MethodId::AdaUboost,
        ReweightBoostVariant::AsymBoost => MethodId::AsymBoost,
    };
    EnsembleModel::from_training(method, n_classes, outcome.members, outcome.log)
}

/// Plain multi-class AdaBoost (no resampling, no costs) — the cost-neutral
/// reference every reweighting variant must collapse to under the uniform
/// cost matrix. Returned with the ada-cost method id's skeleton but kept as
/// its own entry point because it is not one of the imbalance methods.
pub fn fit_adaboost(dataset: &Dataset, config: &TrainConfig) -> Result<EnsembleModel> {
    let n_classes = preflight(dataset, config)?;
    require_multiclass(n_classes)?;
    let eval = EvalPlan::build(config, n_classes, dataset.n_features())?;
    let round_impl = PlainRound::new(
        dataset,
        boosting_params(config),
        n_classes,
        config.seed,
        ("member", "member-retry"),
    );
    let outcome = run_boost_rounds(
        dataset,
        n_classes,
        config.n_estimators,
        config.train_verbose,
        config.record_weight_history,
        Some(&eval),
        round_impl,
    )?;
    EnsembleModel::from_training(MethodId::AdaCost, n_classes, outcome.members, outcome.log)
}

/// Inner boosting chain for easy-ensemble members: plain SAMME on the
/// member's resampled data, no logging, seeds derived from the member seed.
pub(super) fn fit_inner_chain(
    dataset: &Dataset,
    n_classes: usize,
    inner_rounds: usize,
    params: TreeParams,
    seed: RandomSeed,
) -> Result<Vec<ChainLink>> {
    let round_impl = PlainRound::new(dataset, params, n_classes, seed, ("inner", "inner-retry"));
    let outcome = run_boost_rounds(
        dataset,
        n_classes,
        inner_rounds,
        TrainVerbose::Off,
        false,
        None,
        round_impl,
    )?;
    Ok(outcome
        .members
        .into_iter()
        .map(|member| match member.learner {
            MemberLearner::Tree(tree) => ChainLink { tree, alpha: member.vote_weight },
            MemberLearner::Chain(_) => unreachable!("inner chains contain only trees"),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_imbalance_data;
    use crate::metrics::{balanced_accuracy, confusion_matrix};

    fn two_class(n: usize, seed: u64) -> (Dataset, Dataset) {
        generate_imbalance_data(n, &[0.9, 0.1], 2, 0.5, RandomSeed(seed)).unwrap()
    }

    fn config(seed: u64) -> TrainConfig {
        TrainConfig {
            n_estimators: 10,
            seed: RandomSeed(seed),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_data_reaches_perfect_training_balance() {
        // Two well-separated blobs: every variant should nail the training set.
        let data = Dataset::from_rows(
            &[
                vec![0.0, 0.0],
                vec![0.2, 0.1],
                vec![0.1, 0.3],
                vec![0.3, 0.2],
                vec![0.2, 0.4],
                vec![0.0, 0.2],
                vec![5.0, 5.0],
                vec![5.2, 5.1],
            ],
            vec![0, 0, 0, 0, 0, 0, 1, 1],
        )
        .unwrap();
        for variant in [
            ResampleBoostVariant::RusBoost,
            ResampleBoostVariant::OverBoost,
            ResampleBoostVariant::SmoteBoost,
            ResampleBoostVariant::KmeansSmoteBoost,
        ] {
            let model = fit_resample_boost(variant, &data, &config(3)).unwrap();
            let predictions = model.predict_dataset(&data).unwrap();
            let cm = confusion_matrix(data.labels(), &predictions, 2).unwrap();
            assert_eq!(balanced_accuracy(&cm).unwrap(), 1.0, "{variant:?}");
        }
    }

    #[test]
    fn single_round_rusboost_with_original_targets_is_one_tree() {
        let (train, _) = two_class(60, 11);
        let counts = train.distribution().counts().clone();
        let cfg = TrainConfig {
            n_estimators: 1,
            n_target_samples: Some(crate::samplers::TargetSpec::PerClass(counts)),
            ..config(11)
        };
        let model = fit_resample_boost(ResampleBoostVariant::RusBoost, &train, &cfg).unwrap();
        assert_eq!(model.n_members(), 1);
        // Identity targets keep every row, so the member is a tree fit on
        // the full data with uniform weights.
        let tree = fit_tree_with_classes(
            &train,
            &vec![1.0 / train.n_samples() as f64; train.n_samples()],
            &TreeParams::stump(),
            2,
            RandomSeed(11).derive("member", 0),
        )
        .unwrap();
        let expected: Vec<usize> = train
            .features()
            .chunks_exact(2)
            .map(|row| super::super::argmax(tree.predict_proba_row(row)))
            .collect();
        assert_eq!(model.predict_dataset(&train).unwrap(), expected);
    }

    #[test]
    fn boosting_is_deterministic_per_seed() {
        let (train, _) = two_class(80, 21);
        for variant in [ResampleBoostVariant::RusBoost, ResampleBoostVariant::SmoteBoost] {
            let a = fit_resample_boost(variant, &train, &config(5)).unwrap();
            let b = fit_resample_boost(variant, &train, &config(5)).unwrap();
            assert_eq!(a, b);
            let c = fit_resample_boost(variant, &train, &config(6)).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn kmeans_smote_boost_with_one_cluster_matches_smote_boost() {
        let (train, _) = two_class(80, 31);
        let smote = fit_resample_boost(ResampleBoostVariant::SmoteBoost, &train, &config(9)).unwrap();
        let cfg = TrainConfig { n_clusters: 1, ..config(9) };
        let kmeans =
            fit_resample_boost(ResampleBoostVariant::KmeansSmoteBoost, &train, &cfg).unwrap();
        assert_eq!(smote.members(), kmeans.members());
    }

    #[test]
    fn uniform_costs_reduce_every_variant_to_plain_samme() {
        let (train, _) = two_class(40, 41);
        let uniform = CostMatrix::uniform(2).unwrap();
        let cfg = TrainConfig { record_weight_history: true, ..config(13) };
        let reference = fit_adaboost(&train, &cfg).unwrap();
        for variant in [
            ReweightBoostVariant::AdaCost,
            ReweightBoostVariant::AdaUboost,
            ReweightBoostVariant::AsymBoost,
        ] {
            let model = fit_reweight_boost(variant, &train, &uniform, &cfg).unwrap();
            assert_eq!(
                model.training_log().weight_history.len(),
                reference.training_log().weight_history.len(),
                "{variant:?}"
            );
            for (ours, reference_round) in model
                .training_log()
                .weight_history
                .iter()
                .zip(&reference.training_log().weight_history)
            {
                for (a, b) in ours.iter().zip(reference_round) {
                    assert!((a - b).abs() < 1e-9, "{variant:?}: {a} vs {b}");
                }
            }
            // Same trees, same vote weights.
            for (m, r) in model.members().iter().zip(reference.members()) {
                assert_eq!(m.learner, r.learner, "{variant:?}");
                assert!((m.vote_weight - r.vote_weight).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expensive_class_accumulates_more_weight_than_cost_neutral() {
        // A stump cannot split this data perfectly: the best boundary (2.5)
        // misclassifies exactly one row of each class, so every variant's
        // cost adjustment has a mistake of both kinds to act on.
        let data = Dataset::from_rows(
            &[
                vec![0.0],
                vec![1.0],
                vec![2.0],
                vec![5.5], // class-0 straggler in class-1 territory
                vec![3.0],
                vec![4.0],
                vec![0.5], // class-1 straggler in class-0 territory
                vec![5.0],
            ],
            vec![0, 0, 0, 0, 1, 1, 1, 1],
        )
        .unwrap();
        let skewed = CostMatrix::new(&[vec![0.0, 1.0], vec![10.0, 0.0]]).unwrap();
        let uniform = CostMatrix::uniform(2).unwrap();
        let cfg = TrainConfig {
            n_estimators: 1,
            record_weight_history: true,
            ..config(2)
        };
        for variant in [
            ReweightBoostVariant::AdaCost,
            ReweightBoostVariant::AdaUboost,
            ReweightBoostVariant::AsymBoost,
        ] {
            let neutral = fit_reweight_boost(variant, &data, &uniform, &cfg).unwrap();
            let skewed_run = fit_reweight_boost(variant, &data, &skewed, &cfg).unwrap();
            let mass = |model: &EnsembleModel| -> f64 {
                model.training_log().weight_history[0]
                    .iter()
                    .zip(data.labels())
                    .filter(|(_, &y)| y == 1)
                    .map(|(w, _)| *w)
                    .sum()
            };
            assert!(
                mass(&skewed_run) > mass(&neutral) + 1e-12,
                "{variant:?}: {} vs {}",
                mass(&skewed_run),
                mass(&neutral)
            );
        }
    }

    #[test]
    fn reweight_boost_rejects_mismatched_cost_matrix() {
        let (train, _) = two_class(40, 51);
        let three = CostMatrix::uniform(3).unwrap();
        assert!(matches!(
            fit_reweight_boost(ReweightBoostVariant::AdaCost, &train, &three, &config(1)),
            Err(Error::InvalidCostMatrix { .. })
        ));
        // AsymBoost needs both cost directions for every present class.
        let one_sided = CostMatrix::new(&[vec![0.0, 0.0], vec![10.0, 0.0]]).unwrap();
        assert!(matches!(
            fit_reweight_boost(ReweightBoostVariant::AsymBoost, &train, &one_sided, &config(1)),
            Err(Error::InvalidCostMatrix { .. })
        ));
    }

    #[test]
    fn zero_error_round_caps_alpha_and_stops() {
        let data = Dataset::from_rows(
            &[vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let model = fit_adaboost(&data, &config(1)).unwrap();
        assert_eq!(model.n_members(), 1);
        let expected = 1e9f64.ln(); // binary: ln(K−1) = 0
        assert!((model.members()[0].vote_weight - expected).abs() < 1e-9);
    }

    #[test]
    fn hopeless_rounds_reject_and_error_out() {
        // Identical features with mixed labels: every tree is a single leaf
        // predicting class 0, so ε = 0.5 ≥ 1 − 1/2 on every attempt.
        let data = Dataset::from_rows(
            &[vec![1.0], vec![1.0], vec![1.0], vec![1.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        assert!(matches!(
            fit_adaboost(&data, &config(1)),
            Err(Error::AllRoundsRejected)
        ));
    }

    #[test]
    fn multiclass_boosting_produces_valid_probabilities() {
        let (train, test) =
            generate_imbalance_data(160, &[0.7, 0.2, 0.1], 2, 0.25, RandomSeed(61)).unwrap();
        for variant in [
            ResampleBoostVariant::RusBoost,
            ResampleBoostVariant::OverBoost,
            ResampleBoostVariant::SmoteBoost,
            ResampleBoostVariant::KmeansSmoteBoost,
        ] {
            let model = fit_resample_boost(variant, &train, &config(7)).unwrap();
            for row in model.predict_proba(test.features()).unwrap() {
                assert_eq!(row.len(), 3);
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "{variant:?}");
            }
        }
    }

    #[test]
    fn scheduler_drives_per_round_counts() {
        let (train, _) = two_class(100, 71);
        let counts = train.distribution().counts().clone();
        let t = 5;
        let cfg = TrainConfig {
            n_estimators: t,
            schedule: BalancingSchedule::Progressive,
            train_verbose: TrainVerbose::Full,
            eval_datasets: BTreeMap::from([("train".to_string(), train.clone())]),
            eval_metrics: vec!["balanced_acc".to_string()],
            ..config(19)
        };
        let model = fit_resample_boost(ResampleBoostVariant::RusBoost, &train, &cfg).unwrap();
        let final_targets = crate::samplers::resolve_sampling_targets(
            &train.distribution(),
            TargetMode::UnderToMinority,
            None,
            None,
        )
        .unwrap();
        for record in &model.training_log().records {
            let expected = schedule_targets(
                &BalancingSchedule::Progressive,
                &train.distribution(),
                &final_targets,
                record.iteration,
                t,
            )
            .unwrap();
            assert_eq!(&record.resampled_counts, expected.counts(), "round {}", record.iteration);
        }
        // Progressive round 0 keeps the original counts.
        assert_eq!(model.training_log().records[0].resampled_counts, counts);
    }

    #[test]
    fn every_n_logging_includes_the_final_round() {
        // Boosting may stop before round 25 (a perfect round ends training),
        // so derive the expected log points from however many members were
        // actually trained: every multiple of n, plus the last round.
        let (train, _) = two_class(60, 81);
        let cfg = TrainConfig {
            n_estimators: 25,
            train_verbose: TrainVerbose::EveryN(10),
            eval_datasets: BTreeMap::from([("train".to_string(), train.clone())]),
            eval_metrics: vec!["accuracy".to_string()],
            ..config(23)
        };
        let model = fit_resample_boost(ResampleBoostVariant::RusBoost, &train, &cfg).unwrap();
        let iterations: Vec<usize> =
            model.training_log().records.iter().map(|r| r.iteration).collect();
        let last = model.n_members() - 1;
        let mut expected: Vec<usize> = (0..=last).step_by(10).collect();
        if *expected.last().unwrap() != last {
            expected.push(last);
        }
        assert_eq!(iterations, expected);
    }

    #[test]
    fn final_log_record_matches_post_hoc_evaluation() {
        let (train, test) = two_class(80, 91);
        let cfg = TrainConfig {
            n_estimators: 8,
            train_verbose: TrainVerbose::EveryN(3),
            eval_datasets: BTreeMap::from([("test".to_string(), test.clone())]),
            eval_metrics: vec!["balanced_acc".to_string()],
            ..config(29)
        };
        let model = fit_resample_boost(ResampleBoostVariant::SmoteBoost, &train, &cfg).unwrap();
        let last = model.training_log().records.last().unwrap();
        let predictions = model.predict_dataset(&test).unwrap();
        let cm = confusion_matrix(test.labels(), &predictions, 2).unwrap();
        let direct = balanced_accuracy(&cm).unwrap();
        assert_eq!(last.metrics["test"]["balanced_acc"], direct);
    }

    #[test]
    fn unknown_eval_metric_fails_before_training() {
        let (train, _) = two_class(40, 99);
        let cfg = TrainConfig {
            eval_metrics: vec!["made-up".to_string()],
            ..config(1)
        };
        assert!(matches!(
            fit_resample_boost(ResampleBoostVariant::RusBoost, &train, &cfg),
            Err(Error::UnknownMetric { .. })
        ));
    }
}
