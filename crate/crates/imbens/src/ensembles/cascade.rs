//! Balance-cascade: iterative undersampling over a shrinking majority pool.
//! Each round trains a tree on the pool undersampled to the minority count,
//! then permanently drops the pool rows the current ensemble already gets
//! right with the highest confidence, shrinking every majority class by a
//! fixed per-round factor until it reaches the minority count.

use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::samplers::{random_under_sample, SamplingTargets, TargetMode};
use crate::scheduler::schedule_targets;
use crate::tree::fit_tree_with_classes;

use super::{
    predict_proba_members, preflight, resolve_final_targets, should_log, EnsembleMember,
    EnsembleModel, EvalPlan, MemberLearner, MethodId, TrainConfig, TrainVerbose, TrainingLog,
};

pub fn fit_balance_cascade(dataset: &Dataset, config: &TrainConfig) -> Result<EnsembleModel> {
    let n_classes = preflight(dataset, config)?;
    let distribution = dataset.distribution();
    let n_min = distribution
        .minority_class()
        .map(|c| distribution.count(c))
        .unwrap_or(0);
    // The pool holds every class that outnumbers the minority; each shrinks
    // by its own factor f = (n_min/n_c)^(1/(T−1)) per round. Targets are the
    // closed-form round(n_c·f^t) rather than repeated rounding of the
    // current size, so the pool lands on exactly n_min after the last
    // inter-round removal instead of drifting above it.
    let mut pool: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut shrink: BTreeMap<usize, f64> = BTreeMap::new();
    let mut initial: BTreeMap<usize, usize> = BTreeMap::new();
    let total = config.n_estimators;
    for (&class, rows) in &dataset.class_indices() {
        if rows.len() > n_min {
            let factor = if total > 1 {
                (n_min as f64 / rows.len() as f64).powf(1.0 / (total as f64 - 1.0))
            } else {
                1.0
            };
            shrink.insert(class, factor);
            initial.insert(class, rows.len());
            pool.insert(class, rows.clone());
        }
    }
    if pool.is_empty() {
        return Err(Error::TooFewMajority { minority_count: n_min });
    }
    let rest: Vec<usize> = dataset
        .labels()
        .iter()
        .enumerate()
        .filter(|(_, y)| !pool.contains_key(y))
        .map(|(i, _)| i)
        .collect();

    let final_targets = resolve_final_targets(&distribution, TargetMode::UnderToMinority, config)?;
    let params = config.tree_params.unwrap_or_default();
    let eval = EvalPlan::build(config, n_classes, dataset.n_features())?;
    let labels = dataset.labels();

    let mut members: Vec<EnsembleMember> = Vec::new();
    let mut log = TrainingLog::default();
    let mut last_logged: Option<usize> = None;
    let mut last_counts = BTreeMap::new();
    let mut last_round = 0;

    for round in 0..total {
        if round > 0 {
            // Shrink each pool class toward round(size·f), clamped at the
            // minority count, removing the most confidently correct rows.
            // A fully saturated pool cannot shrink further; training more
            // members on identical pools adds nothing, so stop early.
            if pool.values().all(|rows| rows.len() <= n_min) {
                break;
            }
            let probabilities = predict_proba_members(
                &members,
                n_classes,
                dataset.n_features(),
                dataset.features(),
            )?;
            for (&class, rows) in pool.iter_mut() {
                let scheduled_size =
                    initial[&class] as f64 * shrink[&class].powi(round as i32);
                let target = (scheduled_size.round() as usize).max(n_min);
                let to_remove = rows.len().saturating_sub(target);
                if to_remove == 0 {
                    continue;
                }
                let mut correct: Vec<(f64, usize)> = rows
                    .iter()
                    .filter(|&&r| super::argmax(&probabilities[r]) == labels[r])
                    .map(|&r| (probabilities[r][labels[r]], r))
                    .collect();
                correct.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
                let removed: BTreeSet<usize> =
                    correct.iter().take(to_remove).map(|&(_, r)| r).collect();
                rows.retain(|r| !removed.contains(r));
            }
        }
        log.pool_sizes
            .push(pool.iter().map(|(&c, rows)| (c, rows.len())).collect());

        // Train on the remaining pool plus every non-pool row, undersampled
        // to this round's schedule targets (capped by what the pool holds).
        let mut view_rows = rest.clone();
        for rows in pool.values() {
            view_rows.extend_from_slice(rows);
        }
        view_rows.sort_unstable();
        let view = dataset.subset(&view_rows);
        let view_counts = view.distribution();
        let scheduled =
            schedule_targets(&config.schedule, &distribution, &final_targets, round, total)
                .map_err(|e| e.in_round(round))?;
        let capped: BTreeMap<usize, usize> = scheduled
            .counts()
            .iter()
            .map(|(&class, &target)| (class, target.min(view_counts.count(class))))
            .collect();
        let (resampled, _) = random_under_sample(
            &view,
            &SamplingTargets::new(capped)?,
            false,
            config.seed.derive("round", round as u64),
        )
        .map_err(|e| e.in_round(round))?;
        let tree = fit_tree_with_classes(
            &resampled,
            &vec![1.0; resampled.n_samples()],
            &params,
            n_classes,
            config.seed.derive("member", round as u64),
        )
        .map_err(|e| e.in_round(round))?;
        members.push(EnsembleMember { learner: MemberLearner::Tree(tree), vote_weight: 1.0 });
        last_counts = resampled.distribution().counts().clone();
        last_round = round;

        if should_log(config.train_verbose, round) {
            log.records.push(eval.record(
                round,
                &members,
                dataset.n_features(),
                last_counts.clone(),
                BTreeMap::new(),
            )?);
            last_logged = Some(round);
        }
    }
    if config.train_verbose != TrainVerbose::Off && last_logged != Some(last_round) {
        log.records.push(eval.record(
            last_round,
            &members,
            dataset.n_features(),
            last_counts,
            BTreeMap::new(),
        )?);
    }
    EnsembleModel::from_training(MethodId::BalanceCascade, n_classes, members, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_imbalance_data;
    use crate::rng::RandomSeed;
    use crate::tree::TreeParams;

    fn config(seed: u64, t: usize) -> TrainConfig {
        TrainConfig {
            n_estimators: t,
            seed: RandomSeed(seed),
            ..TrainConfig::default()
        }
    }

    /// 100 majority rows in a tight blob, 10 minority rows far away — the
    /// ensemble classifies everything correctly, so removals are never
    /// starved of candidates.
    fn separable_100_10() -> Dataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            rows.push(vec![(i % 10) as f64 * 0.1, (i / 10) as f64 * 0.1]);
            labels.push(0);
        }
        for i in 0..10 {
            rows.push(vec![8.0 + i as f64 * 0.1, 8.0]);
            labels.push(1);
        }
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn pool_shrinks_along_the_keep_factor() {
        let data = separable_100_10();
        let model = fit_balance_cascade(&data, &config(5, 3)).unwrap();
        assert_eq!(model.n_members(), 3);
        // f = (10/100)^(1/2) ≈ 0.3162 → pool sizes 100, 32, 10.
        let sizes: Vec<usize> = model
            .training_log()
            .pool_sizes
            .iter()
            .map(|m| m[&0])
            .collect();
        assert_eq!(sizes, vec![100, 32, 10]);
    }

    #[test]
    fn long_cascade_lands_exactly_on_the_minority_count() {
        let data = separable_100_10();
        let model = fit_balance_cascade(&data, &config(5, 20)).unwrap();
        assert_eq!(model.n_members(), 20);
        let sizes: Vec<usize> = model
            .training_log()
            .pool_sizes
            .iter()
            .map(|m| m[&0])
            .collect();
        assert_eq!(sizes[0], 100);
        assert_eq!(*sizes.last().unwrap(), 10);
        assert!(sizes.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn saturated_pool_stops_training_early() {
        // 12 vs 10: the geometric schedule flattens out, the pool reaches 10
        // well before round 50, and training stops instead of producing
        // dozens of members on identical pools.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..12 {
            rows.push(vec![i as f64 * 0.1, 0.0]);
            labels.push(0);
        }
        for i in 0..10 {
            rows.push(vec![9.0 + i as f64 * 0.1, 9.0]);
            labels.push(1);
        }
        let data = Dataset::from_rows(&rows, labels).unwrap();
        let model = fit_balance_cascade(&data, &config(7, 50)).unwrap();
        assert!(model.n_members() < 50, "trained {} members", model.n_members());
        assert_eq!(model.n_members(), model.training_log().pool_sizes.len());
        let sizes: Vec<usize> = model
            .training_log()
            .pool_sizes
            .iter()
            .map(|m| m[&0])
            .collect();
        assert_eq!(*sizes.last().unwrap(), 10);
    }

    #[test]
    fn single_round_is_plain_undersample_plus_tree() {
        let (train, _) = generate_imbalance_data(90, &[0.8, 0.2], 2, 0.2, RandomSeed(3)).unwrap();
        let model = fit_balance_cascade(&train, &config(9, 1)).unwrap();
        assert_eq!(model.n_members(), 1);
        let targets = crate::samplers::resolve_sampling_targets(
            &train.distribution(),
            TargetMode::UnderToMinority,
            None,
            None,
        )
        .unwrap();
        let (resampled, _) =
            random_under_sample(&train, &targets, false, RandomSeed(9).derive("round", 0)).unwrap();
        let tree = fit_tree_with_classes(
            &resampled,
            &vec![1.0; resampled.n_samples()],
            &TreeParams::default(),
            2,
            RandomSeed(9).derive("member", 0),
        )
        .unwrap();
        assert_eq!(model.members()[0].learner, MemberLearner::Tree(tree));
    }

    #[test]
    fn balanced_data_has_no_majority_pool() {
        let data = Dataset::from_rows(
            &[vec![0.0], vec![1.0], vec![5.0], vec![6.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        assert!(matches!(
            fit_balance_cascade(&data, &config(1, 3)),
            Err(Error::TooFewMajority { minority_count: 2 })
        ));
    }

    #[test]
    fn multiclass_pools_shrink_per_class() {
        let (train, _) =
            generate_imbalance_data(170, &[0.6, 0.3, 0.1], 2, 0.2, RandomSeed(7)).unwrap();
        let counts = train.distribution().counts().clone();
        let n_min = *counts.values().min().unwrap();
        let model = fit_balance_cascade(&train, &config(13, 4)).unwrap();
        let first = &model.training_log().pool_sizes[0];
        // Every class above the minority starts in the pool at full size.
        for (&class, &count) in &counts {
            if count > n_min {
                assert_eq!(first[&class], count);
            } else {
                assert!(!first.contains_key(&class));
            }
        }
        // Pool sizes never grow and never drop below the minority count.
        for window in model.training_log().pool_sizes.windows(2) {
            for (class, &size) in &window[1] {
                assert!(size <= window[0][class]);
                assert!(size >= n_min);
            }
        }
    }

    #[test]
    fn removed_rows_were_correctly_classified() {
        let data = separable_100_10();
        let cfg = config(21, 3);
        // Track pool membership across rounds by re-running the removal
        // logic's observable effect: rows that vanish between rounds must be
        // classified correctly by the ensemble trained so far.
        let model = fit_balance_cascade(&data, &cfg).unwrap();
        // With fully separable data every prediction is correct, so this
        // reduces to checking the removal actually happened.
        let predictions = model.predict_dataset(&data).unwrap();
        assert_eq!(&predictions, data.labels());
        assert!(model.training_log().pool_sizes[1][&0] < 100);
    }
}
