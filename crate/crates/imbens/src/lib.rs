//! Ensemble learning toolkit for class-imbalanced classification.
//!
//! The crate bundles the pieces needed to train, evaluate and compare
//! resampling- and reweighting-based ensembles on skewed datasets:
//!
//! * [`dataset`] — dense datasets, synthetic imbalanced data, stratified
//!   splits;
//! * [`samplers`] — random under/over-sampling, SMOTE and its k-means
//!   variant, hardness-driven self-paced undersampling;
//! * [`scheduler`] — per-round balancing schedules for iterative ensembles;
//! * [`tree`] — the weighted CART decision tree used as the base learner;
//! * [`ensembles`] — fourteen ensemble trainers sharing one boosting /
//!   bagging backbone, plus prediction;
//! * [`metrics`] — imbalance-aware evaluation (balanced accuracy, macro F1,
//!   macro G-mean) and the confusion matrix;
//! * [`visualizer`] — ensemble-size performance curves and grouped metric
//!   summaries, exportable as CSV and SVG;
//! * [`model_io`] — a versioned, byte-deterministic JSON model format.
//!
//! Everything stochastic is driven by an explicit [`rng::RandomSeed`];
//! results are bit-identical across runs and thread counts.

pub mod dataset;
pub mod ensembles;
pub mod error;
pub mod metrics;
pub mod model_io;
pub mod rng;
pub mod samplers;
pub mod scheduler;
pub mod tree;
pub mod visualizer;

mod kmeans;
mod svg;

pub use dataset::{
    class_distribution, generate_imbalance_data, make_imbalance, train_test_split,
    ClassDistribution, Dataset,
};
pub use ensembles::{
    ensemble_predict, ensemble_predict_proba, fit_adaboost, fit_bagging_ensemble,
    fit_balance_cascade, fit_ensemble, fit_resample_boost, fit_reweight_boost,
    fit_self_paced_ensemble, BaggingVariant, CostMatrix, EnsembleMember, EnsembleModel,
    LogRecord, MemberLearner, MethodId, ResampleBoostVariant, ReweightBoostVariant, TrainConfig,
    TrainVerbose, TrainingLog,
};
pub use error::{Error, Result};
pub use metrics::{
    accuracy, balanced_accuracy, confusion_matrix, evaluate_print, macro_fscore, macro_gmean,
    metric_by_name, metric_names, ConfusionMatrix,
};
pub use model_io::{write_atomic, ConfigEcho, ModelFile, MODEL_FORMAT_VERSION};
pub use rng::RandomSeed;
pub use samplers::{
    kmeans_smote_sample, random_over_sample, random_under_sample, resolve_sampling_targets,
    self_paced_under_sample, smote_sample, ResampleTrace, SamplingTargets, SyntheticRecord,
    TargetMode, TargetSpec,
};
pub use scheduler::{schedule_targets, BalancingSchedule, ScheduleRule};
pub use tree::{
    fit_tree, fit_tree_with_classes, tree_predict_proba, FittedTree, MaxFeatures, TreeParams,
};
pub use visualizer::{
    confusion_matrix_csv, fit_visualizer, performance_table_csv, render_heatmap_svg,
    render_lineplot_svg, HeatmapData, PerformanceRow, VisualizerState,
};
