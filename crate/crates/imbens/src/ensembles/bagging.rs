//! Parallel bagging-family trainers: independently resampled members fit in
//! parallel, combined by unweighted probability averaging. Per-member seeds
//! are derived from the master seed, so results never depend on the worker
//! count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::samplers::{random_over_sample, random_under_sample, smote_sample, TargetMode};
use crate::tree::{fit_tree_with_classes, MaxFeatures, TreeParams};

use super::boosting::fit_inner_chain;
use super::{
    preflight, resolve_final_targets, should_log, EnsembleMember, EnsembleModel, EvalPlan,
    MemberLearner, MethodId, TrainConfig, TrainVerbose, TrainingLog,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaggingVariant {
    UnderBagging,
    OverBagging,
    SmoteBagging,
    BalancedRandomForest,
    EasyEnsemble,
}

impl BaggingVariant {
    fn method(self) -> MethodId {
        match self {
            BaggingVariant::UnderBagging => MethodId::UnderBagging,
            BaggingVariant::OverBagging => MethodId::OverBagging,
            BaggingVariant::SmoteBagging => MethodId::SmoteBagging,
            BaggingVariant::BalancedRandomForest => MethodId::BalancedRandomForest,
            BaggingVariant::EasyEnsemble => MethodId::EasyEnsemble,
        }
    }
}

/// Run `fit_member` for every member index, on the ambient rayon pool or a
/// dedicated one of `n_jobs` threads. Output order and content are those of
/// sequential execution.
fn run_members<F>(
    n_members: usize,
    n_jobs: Option<usize>,
    fit_member: F,
) -> Result<Vec<(EnsembleMember, BTreeMap<usize, usize>)>>
where
    F: Fn(usize) -> Result<(EnsembleMember, BTreeMap<usize, usize>)> + Sync,
{
    let results = super::with_worker_pool(n_jobs, || {
        (0..n_members)
            .into_par_iter()
            .map(&fit_member)
            .collect::<Vec<Result<_>>>()
    })?;
    results.into_iter().collect()
}

/// Default member trees per variant. The oversampling baggers fill every bag
/// with duplicated (or tightly interpolated) minority rows; single-row leaves
/// then memorise the same points in every member and the vote degenerates to
/// one overfitted tree, so those variants get a five-row leaf floor.
fn default_member_params(variant: BaggingVariant) -> TreeParams {
    match variant {
        BaggingVariant::OverBagging | BaggingVariant::SmoteBagging => TreeParams {
            min_samples_leaf: 5,
            ..TreeParams::default()
        },
        _ => TreeParams::default(),
    }
}

/// Bagging-family training: under-bagging, over-bagging, SMOTE-bagging,
/// balanced random forest (undersampled members with per-node feature
/// subsets) and easy-ensemble (undersampled members that are small boosting
/// chains). All members vote with weight 1.
pub fn fit_bagging_ensemble(
    variant: BaggingVariant,
    dataset: &Dataset,
    config: &TrainConfig,
) -> Result<EnsembleModel> {
    let n_classes = preflight(dataset, config)?;
    if variant == BaggingVariant::EasyEnsemble && n_classes < 2 {
        return Err(Error::InvalidParameter {
            reason: "boosting requires at least two classes".into(),
        });
    }
    let distribution = dataset.distribution();
    let default_mode = match variant {
        BaggingVariant::OverBagging | BaggingVariant::SmoteBagging => TargetMode::OverToMajority,
        _ => TargetMode::UnderToMinority,
    };
    let final_targets = resolve_final_targets(&distribution, default_mode, config)?;
    let eval = EvalPlan::build(config, n_classes, dataset.n_features())?;

    let mut params = config.tree_params.unwrap_or_else(|| default_member_params(variant));
    if variant == BaggingVariant::BalancedRandomForest {
        params.max_features = MaxFeatures::Sqrt;
    }
    let inner_params = config.tree_params.unwrap_or_else(TreeParams::stump);

    let fit_member = |m: usize| -> Result<(EnsembleMember, BTreeMap<usize, usize>)> {
        let member_seed = config.seed.derive("member", m as u64);
        let (resampled, _) = match variant {
            BaggingVariant::OverBagging => random_over_sample(dataset, &final_targets, member_seed)?,
            BaggingVariant::SmoteBagging => {
                smote_sample(dataset, &final_targets, config.k_neighbors, member_seed)?
            }
            _ => random_under_sample(dataset, &final_targets, false, member_seed)?,
        };
        let counts = resampled.distribution().counts().clone();
        let learner = if variant == BaggingVariant::EasyEnsemble {
            MemberLearner::Chain(fit_inner_chain(
                &resampled,
                n_classes,
                config.inner_rounds,
                inner_params,
                member_seed,
            )?)
        } else {
            let unit_weights = vec![1.0; resampled.n_samples()];
            MemberLearner::Tree(fit_tree_with_classes(
                &resampled,
                &unit_weights,
                &params,
                n_classes,
                member_seed.derive("tree", 0),
            )?)
        };
        Ok((EnsembleMember { learner, vote_weight: 1.0 }, counts))
    };

    let fitted = run_members(config.n_estimators, config.n_jobs, |m| {
        fit_member(m).map_err(|e| e.in_round(m))
    })?;
    let (members, member_counts): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();

    let mut log = TrainingLog::default();
    if config.train_verbose != TrainVerbose::Off {
        for m in 0..members.len() {
            if should_log(config.train_verbose, m) || m == members.len() - 1 {
                log.records.push(eval.record(
                    m,
                    &members[..=m],
                    dataset.n_features(),
                    member_counts[m].clone(),
                    BTreeMap::new(),
                )?);
            }
        }
    }
    EnsembleModel::from_training(variant.method(), n_classes, members, log)
}
