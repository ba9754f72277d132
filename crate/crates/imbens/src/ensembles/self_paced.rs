//! Self-paced ensemble: iterative undersampling that concentrates on hard
//! examples as training progresses. Member 0 trains on a plain random
//! undersample; every later member undersamples with hardness-bin weighting
//! under a growing self-paced factor, where a row's hardness is the current
//! ensemble's distance from certainty on its true class.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::samplers::{random_under_sample, self_paced_under_sample, TargetMode};
use crate::scheduler::schedule_targets;
use crate::tree::fit_tree_with_classes;

use super::{
    predict_proba_members, preflight, resolve_final_targets, should_log, EnsembleMember,
    EnsembleModel, EvalPlan, MemberLearner, MethodId, TrainConfig, TrainVerbose, TrainingLog,
};

/// Self-paced factor for iteration `i` of `total`: tan(i·π / (2·total)),
/// growing from 0 toward hard-example-only sampling.
fn self_paced_alpha(iteration: usize, total: usize) -> f64 {
    (iteration as f64 * PI / (2.0 * total as f64)).tan()
}

pub fn fit_self_paced_ensemble(dataset: &Dataset, config: &TrainConfig) -> Result<EnsembleModel> {
    let n_classes = preflight(dataset, config)?;
    if n_classes < 2 {
        return Err(Error::InvalidParameter {
            reason: "self-paced ensembling requires at least two classes".into(),
        });
    }
    let distribution = dataset.distribution();
    let final_targets = resolve_final_targets(&distribution, TargetMode::UnderToMinority, config)?;
    let params = config.tree_params.unwrap_or_default();
    let eval = EvalPlan::build(config, n_classes, dataset.n_features())?;
    let total = config.n_estimators;
    let labels = dataset.labels();

    let mut members: Vec<EnsembleMember> = Vec::new();
    let mut log = TrainingLog::default();
    let mut last_logged: Option<usize> = None;
    let mut last_counts = BTreeMap::new();

    for i in 0..total {
        let targets = schedule_targets(&config.schedule, &distribution, &final_targets, i, total)?;
        let sampler_seed = config.seed.derive("round", i as u64);
        let (resampled, _) = if i == 0 {
            random_under_sample(dataset, &targets, false, sampler_seed)
        } else {
            let probabilities =
                predict_proba_members(&members, n_classes, dataset.n_features(), dataset.features())?;
            let hardness: Vec<f64> = probabilities
                .iter()
                .zip(labels)
                .map(|(row, &y)| (row[y] - 1.0).abs().clamp(0.0, 1.0))
                .collect();
            self_paced_under_sample(
                dataset,
                &targets,
                &hardness,
                config.k_bins,
                self_paced_alpha(i, total),
                sampler_seed,
            )
        }
        .map_err(|e| e.in_round(i))?;

        let unit_weights = vec![1.0; resampled.n_samples()];
        let tree = fit_tree_with_classes(
            &resampled,
            &unit_weights,
            &params,
            n_classes,
            config.seed.derive("member", i as u64),
        )
        .map_err(|e| e.in_round(i))?;
        members.push(EnsembleMember { learner: MemberLearner::Tree(tree), vote_weight: 1.0 });
        last_counts = resampled.distribution().counts().clone();

        if should_log(config.train_verbose, i) {
            log.records.push(eval.record(
                i,
                &members,
                dataset.n_features(),
                last_counts.clone(),
                BTreeMap::new(),
            )?);
            last_logged = Some(i);
        }
    }
    if config.train_verbose != TrainVerbose::Off && last_logged != Some(total - 1) {
        log.records.push(eval.record(
            total - 1,
            &members,
            dataset.n_features(),
            last_counts,
            BTreeMap::new(),
        )?);
    }
    EnsembleModel::from_training(MethodId::SelfPacedEnsemble, n_classes, members, log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_imbalance_data;
    use crate::metrics::{balanced_accuracy, confusion_matrix};
    use crate::rng::RandomSeed;
    use crate::tree::TreeParams;

    fn config(seed: u64, t: usize) -> TrainConfig {
        TrainConfig {
            n_estimators: t,
            seed: RandomSeed(seed),
            ..TrainConfig::default()
        }
    }

    #[test]
    fn single_member_is_a_plain_undersample_tree() {
        let (train, _) = generate_imbalance_data(100, &[0.8, 0.2], 2, 0.25, RandomSeed(1)).unwrap();
        let model = fit_self_paced_ensemble(&train, &config(7, 1)).unwrap();
        assert_eq!(model.n_members(), 1);
        // Reproduce by hand: undersample to the minority count, then a tree.
        let targets = crate::samplers::resolve_sampling_targets(
            &train.distribution(),
            TargetMode::UnderToMinority,
            None,
            None,
        )
        .unwrap();
        let (resampled, _) =
            random_under_sample(&train, &targets, false, RandomSeed(7).derive("round", 0)).unwrap();
        let tree = fit_tree_with_classes(
            &resampled,
            &vec![1.0; resampled.n_samples()],
            &TreeParams::default(),
            2,
            RandomSeed(7).derive("member", 0),
        )
        .unwrap();
        assert_eq!(model.members()[0].learner, MemberLearner::Tree(tree));
    }

    #[test]
    fn later_members_differ_and_counts_follow_targets() {
        let (train, _) = generate_imbalance_data(200, &[0.9, 0.1], 2, 0.5, RandomSeed(3)).unwrap();
        let n_min = *train.distribution().counts().values().min().unwrap();
        let cfg = TrainConfig {
            train_verbose: TrainVerbose::Full,
            eval_datasets: BTreeMap::from([("train".to_string(), train.clone())]),
            eval_metrics: vec!["balanced_acc".to_string()],
            ..config(11, 10)
        };
        let model = fit_self_paced_ensemble(&train, &cfg).unwrap();
        assert_eq!(model.n_members(), 10);
        for record in &model.training_log().records {
            assert!(record.resampled_counts.values().all(|&c| c == n_min));
        }
        assert_ne!(model.members()[0], model.members()[5]);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let (train, _) = generate_imbalance_data(120, &[0.85, 0.15], 2, 0.25, RandomSeed(5)).unwrap();
        let a = fit_self_paced_ensemble(&train, &config(21, 8)).unwrap();
        let b = fit_self_paced_ensemble(&train, &config(21, 8)).unwrap();
        let c = fit_self_paced_ensemble(&train, &config(22, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn separates_imbalanced_gaussians_well() {
        // Individual draws are noisy (the test fold holds just 10 minority
        // points), so assert on the median across seeds rather than one run.
        let mut scores = Vec::new();
        for seed in 0..10u64 {
            let (train, test) =
                generate_imbalance_data(200, &[0.9, 0.1], 2, 0.5, RandomSeed(seed)).unwrap();
            let model = fit_self_paced_ensemble(&train, &config(seed, 50)).unwrap();
            let predictions = model.predict_dataset(&test).unwrap();
            let cm = confusion_matrix(test.labels(), &predictions, 2).unwrap();
            scores.push(balanced_accuracy(&cm).unwrap());
        }
        scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = (scores[4] + scores[5]) / 2.0;
        assert!(median > 0.88, "median balanced accuracy {median}, scores {scores:?}");
    }

    #[test]
    fn three_class_hardness_is_one_vs_rest() {
        let (train, test) =
            generate_imbalance_data(180, &[0.6, 0.3, 0.1], 2, 0.25, RandomSeed(13)).unwrap();
        let model = fit_self_paced_ensemble(&train, &config(31, 12)).unwrap();
        for row in model.predict_proba(test.features()).unwrap() {
            assert_eq!(row.len(), 3);
            let sum: f64 = row.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
