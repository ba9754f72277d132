//! Saving and loading fitted ensembles.
//!
//! A model file is a single UTF-8 JSON document, grammar frozen at
//! `format_version` 1:
//!
//! ```text
//! {
//!   "format_version": 1,
//!   "config": {            // echo of the training request
//!     "n_estimators", "seed", "tree_params", "schedule", "target_label",
//!     "n_target_samples", "inner_rounds", "k_bins", "k_neighbors",
//!     "n_clusters", "imbalance_ratio_threshold", "cost_matrix"
//!   },
//!   "model": {
//!     "method": "<kebab-case method id>",
//!     "n_classes", "class_names",
//!     "members": [ { "learner": Tree|Chain, "vote_weight" }, ... ],
//!     "training_log": { "records", "pool_sizes", "weight_history" }
//!   }
//! }
//! ```
//!
//! The version field is checked before anything else is interpreted, so an
//! unsupported document is rejected without being partially read. Numbers are
//! printed in shortest round-trip form, making save → load → save
//! byte-identical and loaded models predict bit-exactly like the originals.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensembles::{CostMatrix, EnsembleModel, TrainConfig};
use crate::error::{Error, Result};
use crate::samplers::TargetSpec;
use crate::tree::TreeParams;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// The reproducibility-relevant slice of a training request, echoed into the
/// model file so a saved model documents how it was produced. Evaluation
/// datasets, logging cadence and worker counts do not influence the fitted
/// model and are not recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub n_estimators: usize,
    pub seed: u64,
    pub tree_params: Option<TreeParams>,
    /// Schedule kind name; custom rules are closures, only the kind is kept.
    pub schedule: String,
    pub target_label: Option<usize>,
    pub n_target_samples: Option<TargetSpec>,
    pub inner_rounds: usize,
    pub k_bins: usize,
    pub k_neighbors: usize,
    pub n_clusters: usize,
    pub imbalance_ratio_threshold: f64,
    /// Present only for the cost-sensitive reweighting methods.
    pub cost_matrix: Option<CostMatrix>,
}

impl ConfigEcho {
    pub fn new(config: &TrainConfig, cost_matrix: Option<&CostMatrix>) -> Self {
        ConfigEcho {
            n_estimators: config.n_estimators,
            seed: config.seed.0,
            tree_params: config.tree_params,
            schedule: config.schedule.kind_name().to_string(),
            target_label: config.target_label,
            n_target_samples: config.n_target_samples.clone(),
            inner_rounds: config.inner_rounds,
            k_bins: config.k_bins,
            k_neighbors: config.k_neighbors,
            n_clusters: config.n_clusters,
            imbalance_ratio_threshold: config.imbalance_ratio_threshold,
            cost_matrix: cost_matrix.cloned(),
        }
    }
}

/// A fitted ensemble plus its config echo, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub config: ConfigEcho,
    pub model: EnsembleModel,
}

/// Only the version field; parsed first so unsupported documents are
/// rejected before any other content is interpreted.
#[derive(Deserialize)]
struct VersionProbe {
    format_version: i64,
}

impl ModelFile {
    pub fn new(model: EnsembleModel, config: ConfigEcho) -> Self {
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config,
            model,
        }
    }

    /// Serialize to the canonical document text (pretty-printed JSON with a
    /// trailing newline). Equal inputs produce byte-identical output.
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidModelFile {
            reason: format!("serialization failed: {e}"),
        })?;
        text.push('\n');
        Ok(text)
    }

    /// Parse and validate a document produced by [`ModelFile::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let probe: VersionProbe =
            serde_json::from_str(text).map_err(|e| Error::InvalidModelFile {
                reason: format!("not a model document: {e}"),
            })?;
        if probe.format_version != MODEL_FORMAT_VERSION as i64 {
            return Err(Error::UnsupportedFormatVersion {
                found: probe.format_version,
            });
        }
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::InvalidModelFile {
            reason: format!("malformed version-{MODEL_FORMAT_VERSION} document: {e}"),
        })?;
        file.model.validate()?;
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_json(&text)
    }
}

/// Whole-file atomic write: the content lands under a temporary sibling name
/// and is renamed into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter {
            reason: format!("\"{}\" has no file name to write to", path.display()),
        })?
        .to_os_string();
    let mut tmp_name = file_name;
    tmp_name.push(".tmp");
    let tmp_path = path.with_file_name(tmp_name);
    fs::write(&tmp_path, bytes).map_err(io_err)?;
    fs::rename(&tmp_path, path).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_imbalance_data;
    use crate::ensembles::{fit_bagging_ensemble, fit_resample_boost, BaggingVariant, ResampleBoostVariant};
    use crate::rng::RandomSeed;

    fn fitted_pair() -> (EnsembleModel, EnsembleModel, crate::dataset::Dataset) {
        let (train, test) =
            generate_imbalance_data(120, &[0.8, 0.2], 3, 0.25, RandomSeed(3)).unwrap();
        let cfg = TrainConfig {
            n_estimators: 6,
            seed: RandomSeed(9),
            ..TrainConfig::default()
        };
        let boost = fit_resample_boost(ResampleBoostVariant::SmoteBoost, &train, &cfg).unwrap();
        let chains = fit_bagging_ensemble(BaggingVariant::EasyEnsemble, &train, &cfg).unwrap();
        (boost, chains, test)
    }

    #[test]
    fn round_trip_preserves_model_and_predictions() {
        let (boost, chains, test) = fitted_pair();
        for model in [boost, chains] {
            let echo = ConfigEcho::new(&TrainConfig::default(), None);
            let file = ModelFile::new(model.clone(), echo);
            let text = file.to_json().unwrap();
            let reloaded = ModelFile::from_json(&text).unwrap();
            assert_eq!(reloaded, file);
            assert_eq!(
                reloaded.model.predict_proba(test.features()).unwrap(),
                model.predict_proba(test.features()).unwrap()
            );
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let (boost, _, _) = fitted_pair();
        let dir = std::env::temp_dir().join("imbens-model-io-test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        let file = ModelFile::new(boost, ConfigEcho::new(&TrainConfig::default(), None));
        file.save(&path).unwrap();
        let first = fs::read(&path).unwrap();
        ModelFile::load(&path).unwrap().save(&path).unwrap();
        let second = fs::read(&path).unwrap();
        assert_eq!(first, second);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unsupported_version_is_rejected_up_front() {
        let (boost, _, _) = fitted_pair();
        let file = ModelFile::new(boost, ConfigEcho::new(&TrainConfig::default(), None));
        let text = file
            .to_json()
            .unwrap()
            .replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            ModelFile::from_json(&text),
            Err(Error::UnsupportedFormatVersion { found: 2 })
        ));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(matches!(
            ModelFile::from_json("not json"),
            Err(Error::InvalidModelFile { .. })
        ));
        assert!(matches!(
            ModelFile::from_json("{\"format_version\": 1}"),
            Err(Error::InvalidModelFile { .. })
        ));
    }

    #[test]
    fn tampered_vote_weights_fail_validation() {
        let (boost, _, _) = fitted_pair();
        let file = ModelFile::new(boost, ConfigEcho::new(&TrainConfig::default(), None));
        let text = file.to_json().unwrap();
        assert!(text.contains("\"vote_weight\""));
        let broken = text.replacen("\"vote_weight\": ", "\"vote_weight\": -", 1);
        assert!(ModelFile::from_json(&broken).is_err());
    }

    #[test]
    fn config_echo_records_the_request() {
        let cfg = TrainConfig {
            n_estimators: 7,
            seed: RandomSeed(123),
            target_label: Some(1),
            ..TrainConfig::default()
        };
        let cost = CostMatrix::uniform(2).unwrap();
        let echo = ConfigEcho::new(&cfg, Some(&cost));
        assert_eq!(echo.n_estimators, 7);
        assert_eq!(echo.seed, 123);
        assert_eq!(echo.schedule, "uniform");
        assert_eq!(echo.target_label, Some(1));
        assert_eq!(echo.cost_matrix, Some(cost));
    }
}
