//! Error type shared by every module of the toolkit.
//!
//! Variant names are stable identifiers: they appear verbatim in CLI
//! diagnostics and in test assertions, so renaming one is a breaking change.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("EmptyDataset: operation requires at least one sample")]
    EmptyDataset,

    #[error("NonFiniteFeature: feature value at row {row}, column {column} is not finite")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("InvalidWeights: {reason}")]
    InvalidWeights { reason: String },

    #[error("InvalidFraction: test fraction must lie strictly between 0 and 1, got {value}")]
    InvalidFraction { value: f64 },

    #[error("InsufficientClassSamples: class {class} has {available} samples, stratified split needs at least 2")]
    InsufficientClassSamples { class: usize, available: usize },

    #[error("TargetExceedsAvailable: class {class} target {target} exceeds the {available} available samples")]
    TargetExceedsAvailable {
        class: usize,
        target: usize,
        available: usize,
    },

    #[error("TargetBelowAvailable: class {class} target {target} is below the {available} existing samples")]
    TargetBelowAvailable {
        class: usize,
        target: usize,
        available: usize,
    },

    #[error("UnknownClass: class {class} does not exist in the dataset")]
    UnknownClass { class: usize },

    #[error("ConflictingTargets: {reason}")]
    ConflictingTargets { reason: String },

    #[error("MissingTargets: explicit sampling mode needs a target_label and/or n_target_samples ({reason})")]
    MissingTargets { reason: String },

    #[error("InvalidScheduleOutput: {reason}")]
    InvalidScheduleOutput { reason: String },

    #[error("DegenerateWeights: {reason}")]
    DegenerateWeights { reason: String },

    #[error("ShapeMismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("InvalidCostMatrix: {reason}")]
    InvalidCostMatrix { reason: String },

    #[error("AllRoundsRejected: every boosting round was rejected (weighted error never left the random-guess regime)")]
    AllRoundsRejected,

    #[error("TooFewMajority: no class outnumbers the minority ({minority_count} samples), nothing to cascade over")]
    TooFewMajority { minority_count: usize },

    #[error("TrainingRound: round {round}: {source}")]
    TrainingRound {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("LengthMismatch: y_true has {true_len} labels, y_pred has {pred_len}")]
    LengthMismatch { true_len: usize, pred_len: usize },

    #[error("LabelOutOfRange: label {label} is outside [0, {n_classes})")]
    LabelOutOfRange { label: usize, n_classes: usize },

    #[error("AbsentTrueClass: class {class} has no true samples, per-class recall is undefined")]
    AbsentTrueClass { class: usize },

    #[error("UnknownMetric: \"{name}\" is not a registered metric")]
    UnknownMetric { name: String },

    #[error("UnknownName: \"{name}\" was not fitted into the visualizer")]
    UnknownName { name: String },

    #[error("EmptyInput: visualizer needs at least one model and one dataset")]
    EmptyInput,

    #[error("EmptyData: nothing to render")]
    EmptyData,

    #[error("IncompatibleFeatureWidth: model \"{model}\" expects {expected} features, dataset \"{dataset}\" has {got}")]
    IncompatibleFeatureWidth {
        model: String,
        dataset: String,
        expected: usize,
        got: usize,
    },

    #[error("Io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("InvalidModelFile: {reason}")]
    InvalidModelFile { reason: String },

    #[error("UnsupportedFormatVersion: found {found}, this build reads version 1")]
    UnsupportedFormatVersion { found: i64 },

    #[error("InvalidParameter: {reason}")]
    InvalidParameter { reason: String },
}

impl Error {
    /// Attach boosting-round / bagging-member context to a propagated error.
    pub(crate) fn in_round(self, round: usize) -> Error {
        Error::TrainingRound {
            round,
            source: Box::new(self),
        }
    }
}
