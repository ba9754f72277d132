//! Performance-versus-ensemble-size analysis across fitted models.
//!
//! [`fit_visualizer`] evaluates every prefix sub-ensemble (the first `p`
//! members with their vote weights) of every model on every dataset, for all
//! registered metrics, over the prefix grid `{1, g, 2g, …, T}`. The cache
//! then feeds long-format line-plot tables, confusion heatmaps, and their
//! CSV / SVG renderings. Prefix evaluation accumulates members in order with
//! the same arithmetic as full prediction, so the curve's endpoint is
//! bit-identical to evaluating the finished model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::ensembles::{argmax, member_probabilities, with_worker_pool, EnsembleModel};
use crate::error::{Error, Result};
use crate::metrics::{confusion_matrix, metric_by_name, metric_names, ConfusionMatrix};

pub use crate::svg::{render_heatmap_svg, render_lineplot_svg};

/// One evaluated (model, dataset, prefix size) point.
#[derive(Debug, Clone, PartialEq)]
struct CachePoint {
    /// metric name → value.
    values: BTreeMap<String, f64>,
    matrix: ConfusionMatrix,
}

/// One row of the long-format performance table.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceRow {
    pub model: String,
    pub dataset: String,
    pub prefix_size: usize,
    pub metric: String,
    pub value: f64,
}

/// Full-model confusion counts for one (model, dataset) pair, with the
/// model's class names for row/column labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapData {
    pub matrix: ConfusionMatrix,
    pub class_names: Vec<String>,
}

/// Precomputed prefix-ensemble evaluations; immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualizerState {
    models: BTreeMap<String, EnsembleModel>,
    datasets: BTreeMap<String, Dataset>,
    /// model name → evaluated prefix sizes (ascending, ends at that model's
    /// member count).
    grids: BTreeMap<String, Vec<usize>>,
    cache: BTreeMap<(String, String, usize), CachePoint>,
}

/// Prefix sizes `{1, g, 2g, …}` clamped to `t`, always including `1` and `t`.
fn prefix_grid(t: usize, granularity: usize) -> Vec<usize> {
    let mut grid: BTreeSet<usize> = [1, t].into_iter().collect();
    grid.extend((1..).map(|i| i * granularity).take_while(|&p| p <= t));
    grid.into_iter().collect()
}

/// Evaluate every prefix in `grid` of `model` on `dataset`: one in-order
/// accumulation pass over the members, snapshotting at grid sizes with the
/// exact arithmetic of full prediction.
fn evaluate_pair(
    model: &EnsembleModel,
    dataset: &Dataset,
    grid: &[usize],
) -> Result<Vec<(usize, CachePoint)>> {
    let k = model.n_classes();
    let n = dataset.n_samples();
    let mut acc = vec![0.0f64; n * k];
    let mut vote_sum = 0.0;
    let mut points = Vec::with_capacity(grid.len());
    for (m, member) in model.members().iter().enumerate() {
        let probs = member_probabilities(&member.learner, dataset.features())?;
        for (a, p) in acc.iter_mut().zip(&probs) {
            *a += member.vote_weight * p;
        }
        vote_sum += member.vote_weight;
        let prefix = m + 1;
        if !grid.contains(&prefix) {
            continue;
        }
        let predictions: Vec<usize> = acc
            .chunks_exact(k)
            .map(|row| {
                let scaled: Vec<f64> = row.iter().map(|v| v / vote_sum).collect();
                let sum: f64 = scaled.iter().sum();
                let normalized: Vec<f64> = scaled.iter().map(|v| v / sum).collect();
                argmax(&normalized)
            })
            .collect();
        let matrix = confusion_matrix(dataset.labels(), &predictions, k)?;
        let mut values = BTreeMap::new();
        for name in metric_names() {
            values.insert(name.to_string(), metric_by_name(name)?(&matrix)?);
        }
        points.push((prefix, CachePoint { values, matrix }));
    }
    Ok(points)
}

/// Evaluate every model-prefix on every dataset and freeze the results.
///
/// Every (model, dataset) pair must agree on feature width, and every
/// dataset must contain at least one sample of each class its models know,
/// since per-class recall underlies the registered metrics. Pair evaluation
/// parallelizes across `n_jobs` workers (ambient pool when `None`); the
/// result never depends on the worker count.
pub fn fit_visualizer(
    models: BTreeMap<String, EnsembleModel>,
    datasets: BTreeMap<String, Dataset>,
    granularity: usize,
    n_jobs: Option<usize>,
) -> Result<VisualizerState> {
    if models.is_empty() || datasets.is_empty() {
        return Err(Error::EmptyInput);
    }
    if granularity == 0 {
        return Err(Error::InvalidParameter {
            reason: "granularity must be at least 1".into(),
        });
    }
    for (model_name, model) in &models {
        for (dataset_name, dataset) in &datasets {
            if dataset.n_features() != model.n_features() {
                return Err(Error::IncompatibleFeatureWidth {
                    model: model_name.clone(),
                    dataset: dataset_name.clone(),
                    expected: model.n_features(),
                    got: dataset.n_features(),
                });
            }
            let mut support = vec![0usize; model.n_classes()];
            for &label in dataset.labels() {
                if label >= model.n_classes() {
                    return Err(Error::LabelOutOfRange {
                        label,
                        n_classes: model.n_classes(),
                    });
                }
                support[label] += 1;
            }
            if let Some(class) = support.iter().position(|&s| s == 0) {
                return Err(Error::AbsentTrueClass { class });
            }
        }
    }

    let grids: BTreeMap<String, Vec<usize>> = models
        .iter()
        .map(|(name, model)| (name.clone(), prefix_grid(model.n_members(), granularity)))
        .collect();
    let pairs: Vec<(&String, &String)> = models
        .keys()
        .flat_map(|m| datasets.keys().map(move |d| (m, d)))
        .collect();
    let evaluated = with_worker_pool(n_jobs, || {
        pairs
            .into_par_iter()
            .map(|(model_name, dataset_name)| {
                let points = evaluate_pair(
                    &models[model_name],
                    &datasets[dataset_name],
                    &grids[model_name],
                )?;
                Ok((model_name.clone(), dataset_name.clone(), points))
            })
            .collect::<Vec<Result<_>>>()
    })?;
    let mut cache = BTreeMap::new();
    for result in evaluated {
        let (model_name, dataset_name, points) = result?;
        for (prefix, point) in points {
            cache.insert((model_name.clone(), dataset_name.clone(), prefix), point);
        }
    }
    Ok(VisualizerState {
        models,
        datasets,
        grids,
        cache,
    })
}

impl VisualizerState {
    pub fn model_names(&self) -> Vec<&str> {
        self.models.keys().map(String::as_str).collect()
    }

    pub fn dataset_names(&self) -> Vec<&str> {
        self.datasets.keys().map(String::as_str).collect()
    }

    /// Evaluated prefix sizes for one model.
    pub fn grid(&self, model: &str) -> Result<&[usize]> {
        self.grids
            .get(model)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnknownName {
                name: model.to_string(),
            })
    }

    /// Long-format performance table over all models, restricted to the
    /// selected metrics and datasets; rows sorted by
    /// (model, dataset, prefix_size, metric). Selections must be nonempty
    /// subsets of what was fitted.
    pub fn performance_lineplot_data(
        &self,
        metrics: &[String],
        datasets: &[String],
    ) -> Result<Vec<PerformanceRow>> {
        if metrics.is_empty() || datasets.is_empty() {
            return Err(Error::UnknownName {
                name: "(empty selection)".into(),
            });
        }
        let registered: BTreeSet<&str> = metric_names().into_iter().collect();
        for metric in metrics {
            if !registered.contains(metric.as_str()) {
                return Err(Error::UnknownName {
                    name: metric.clone(),
                });
            }
        }
        for dataset in datasets {
            if !self.datasets.contains_key(dataset) {
                return Err(Error::UnknownName {
                    name: dataset.clone(),
                });
            }
        }
        let metric_selection: BTreeSet<&String> = metrics.iter().collect();
        let dataset_selection: BTreeSet<&String> = datasets.iter().collect();
        let mut rows = Vec::new();
        for (model_name, _) in &self.models {
            for dataset_name in &dataset_selection {
                for &prefix in &self.grids[model_name] {
                    let point =
                        &self.cache[&(model_name.clone(), (*dataset_name).clone(), prefix)];
                    for metric in &metric_selection {
                        rows.push(PerformanceRow {
                            model: model_name.clone(),
                            dataset: (*dataset_name).clone(),
                            prefix_size: prefix,
                            metric: (*metric).clone(),
                            value: point.values[metric.as_str()],
                        });
                    }
                }
            }
        }
        Ok(rows)
    }

    /// Full-model confusion matrix of `model` on `dataset`, with class names.
    pub fn confusion_matrix_heatmap_data(&self, model: &str, dataset: &str) -> Result<HeatmapData> {
        let fitted = self.models.get(model).ok_or_else(|| Error::UnknownName {
            name: model.to_string(),
        })?;
        if !self.datasets.contains_key(dataset) {
            return Err(Error::UnknownName {
                name: dataset.to_string(),
            });
        }
        let full = fitted.n_members();
        let point = &self.cache[&(model.to_string(), dataset.to_string(), full)];
        Ok(HeatmapData {
            matrix: point.matrix.clone(),
            class_names: fitted.class_names().to_vec(),
        })
    }
}

/// Render a long-format performance table as CSV
/// (`model,dataset,prefix_size,metric,value`). Name fields must be free of
/// CSV structure characters; values are printed with 17 significant digits.
pub fn performance_table_csv(rows: &[PerformanceRow]) -> Result<String> {
    let mut out = String::from("model,dataset,prefix_size,metric,value\n");
    for row in rows {
        for name in [&row.model, &row.dataset, &row.metric] {
            if name.contains([',', '"', '\n', '\r']) {
                return Err(Error::InvalidParameter {
                    reason: format!("name \"{name}\" contains CSV structure characters"),
                });
            }
        }
        writeln!(
            out,
            "{},{},{},{},{:.16e}",
            row.model, row.dataset, row.prefix_size, row.metric, row.value
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

/// Render a confusion matrix as CSV: a `truth\predicted` corner header, one
/// row per true class.
pub fn confusion_matrix_csv(data: &HeatmapData) -> Result<String> {
    let k = data.matrix.n_classes();
    if data.class_names.len() != k {
        return Err(Error::ShapeMismatch {
            expected: format!("{k} class names"),
            got: format!("{}", data.class_names.len()),
        });
    }
    for name in &data.class_names {
        if name.contains([',', '"', '\n', '\r']) {
            return Err(Error::InvalidParameter {
                reason: format!("class name \"{name}\" contains CSV structure characters"),
            });
        }
    }
    let mut out = String::from("truth\\predicted");
    for name in &data.class_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..k {
        out.push_str(&data.class_names[i]);
        for j in 0..k {
            write!(out, ",{}", data.matrix.get(i, j)).expect("writing to a String cannot fail");
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_imbalance_data;
    use crate::ensembles::{
        fit_bagging_ensemble, fit_resample_boost, BaggingVariant, ResampleBoostVariant,
        TrainConfig,
    };
    use crate::metrics::{balanced_accuracy, macro_fscore};
    use crate::rng::RandomSeed;

    fn fitted() -> (EnsembleModel, Dataset, Dataset) {
        let (train, test) =
            generate_imbalance_data(150, &[0.8, 0.2], 2, 0.3, RandomSeed(5)).unwrap();
        let cfg = TrainConfig {
            n_estimators: 12,
            seed: RandomSeed(17),
            ..TrainConfig::default()
        };
        let model = fit_bagging_ensemble(BaggingVariant::UnderBagging, &train, &cfg).unwrap();
        (model, train, test)
    }

    fn state_of(model: EnsembleModel, test: Dataset, granularity: usize) -> VisualizerState {
        fit_visualizer(
            BTreeMap::from([("M".to_string(), model)]),
            BTreeMap::from([("test".to_string(), test)]),
            granularity,
            None,
        )
        .unwrap()
    }

    #[test]
    fn grid_covers_one_multiples_and_the_member_count() {
        assert_eq!(prefix_grid(50, 10), vec![1, 10, 20, 30, 40, 50]);
        assert_eq!(prefix_grid(5, 100), vec![1, 5]);
        assert_eq!(prefix_grid(1, 3), vec![1]);
        assert_eq!(prefix_grid(4, 1), vec![1, 2, 3, 4]);
        let (model, _, test) = fitted();
        let state = state_of(model, test, 5);
        assert_eq!(state.grid("M").unwrap(), &[1, 5, 10, 12]);
        assert!(state.grid("nope").is_err());
    }

    #[test]
    fn full_prefix_equals_direct_evaluation() {
        let (model, _, test) = fitted();
        let state = state_of(model.clone(), test.clone(), 5);
        let rows = state
            .performance_lineplot_data(
                &["balanced_acc".to_string(), "macro_f1".to_string()],
                &["test".to_string()],
            )
            .unwrap();
        let predictions = model.predict_dataset(&test).unwrap();
        let cm = confusion_matrix(test.labels(), &predictions, 2).unwrap();
        let last_balanced = rows
            .iter()
            .find(|r| r.prefix_size == 12 && r.metric == "balanced_acc")
            .unwrap();
        let last_f1 = rows
            .iter()
            .find(|r| r.prefix_size == 12 && r.metric == "macro_f1")
            .unwrap();
        assert_eq!(last_balanced.value, balanced_accuracy(&cm).unwrap());
        assert_eq!(last_f1.value, macro_fscore(&cm).unwrap());
    }

    #[test]
    fn row_count_is_the_full_cartesian_product() {
        let (model, train, test) = fitted();
        let second = model.clone();
        let state = fit_visualizer(
            BTreeMap::from([("A".to_string(), model), ("B".to_string(), second)]),
            BTreeMap::from([("train".to_string(), train), ("test".to_string(), test)]),
            4,
            None,
        )
        .unwrap();
        let metrics: Vec<String> = metric_names().iter().map(|n| n.to_string()).collect();
        let datasets = vec!["train".to_string(), "test".to_string()];
        let rows = state.performance_lineplot_data(&metrics, &datasets).unwrap();
        // grid(12, 4) = {1, 4, 8, 12}: 2 models × 2 datasets × 4 prefixes × 4 metrics.
        assert_eq!(rows.len(), 2 * 2 * 4 * 4);
        // Identical models produce identical curves.
        let by_model = |name: &str| -> Vec<(String, usize, String, f64)> {
            rows.iter()
                .filter(|r| r.model == name)
                .map(|r| (r.dataset.clone(), r.prefix_size, r.metric.clone(), r.value))
                .collect()
        };
        assert_eq!(by_model("A"), by_model("B"));
        // Sorted by (model, dataset, prefix_size, metric).
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.model.clone(), r.dataset.clone(), r.prefix_size, r.metric.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn unknown_selections_are_rejected() {
        let (model, _, test) = fitted();
        let state = state_of(model, test, 6);
        assert!(matches!(
            state.performance_lineplot_data(&["nope".to_string()], &["test".to_string()]),
            Err(Error::UnknownName { .. })
        ));
        assert!(matches!(
            state.performance_lineplot_data(
                &["accuracy".to_string()],
                &["missing".to_string()]
            ),
            Err(Error::UnknownName { .. })
        ));
        assert!(matches!(
            state.performance_lineplot_data(&[], &["test".to_string()]),
            Err(Error::UnknownName { .. })
        ));
        assert!(matches!(
            state.confusion_matrix_heatmap_data("nope", "test"),
            Err(Error::UnknownName { .. })
        ));
    }

    #[test]
    fn heatmap_matches_post_hoc_confusion_matrix() {
        let (model, _, test) = fitted();
        let state = state_of(model.clone(), test.clone(), 6);
        let heatmap = state.confusion_matrix_heatmap_data("M", "test").unwrap();
        let predictions = model.predict_dataset(&test).unwrap();
        let direct = confusion_matrix(test.labels(), &predictions, 2).unwrap();
        assert_eq!(heatmap.matrix, direct);
        assert_eq!(heatmap.matrix.total(), test.n_samples());
        assert_eq!(heatmap.class_names, vec!["0".to_string(), "1".to_string()]);
    }

    #[test]
    fn worker_count_does_not_change_the_state() {
        let (model, train, test) = fitted();
        let build = |jobs| {
            fit_visualizer(
                BTreeMap::from([("M".to_string(), model.clone())]),
                BTreeMap::from([("train".to_string(), train.clone()), ("test".to_string(), test.clone())]),
                3,
                Some(jobs),
            )
            .unwrap()
        };
        assert_eq!(build(1), build(4));
    }

    #[test]
    fn incompatible_inputs_fail_at_fit_time() {
        let (model, _, test) = fitted();
        let (wide, _) = generate_imbalance_data(60, &[0.7, 0.3], 5, 0.2, RandomSeed(2)).unwrap();
        assert!(matches!(
            fit_visualizer(
                BTreeMap::from([("M".to_string(), model.clone())]),
                BTreeMap::from([("wide".to_string(), wide)]),
                5,
                None,
            ),
            Err(Error::IncompatibleFeatureWidth { expected: 2, got: 5, .. })
        ));
        assert!(matches!(
            fit_visualizer(BTreeMap::new(), BTreeMap::from([("t".to_string(), test)]), 5, None),
            Err(Error::EmptyInput)
        ));
        assert!(matches!(
            fit_visualizer(
                BTreeMap::from([("M".to_string(), model)]),
                BTreeMap::new(),
                5,
                None,
            ),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn boosted_models_visualize_with_vote_weights() {
        // Weighted votes exercise the non-uniform accumulation path.
        let (train, test) =
            generate_imbalance_data(120, &[0.75, 0.25], 2, 0.3, RandomSeed(31)).unwrap();
        let cfg = TrainConfig {
            n_estimators: 9,
            seed: RandomSeed(3),
            ..TrainConfig::default()
        };
        let model = fit_resample_boost(ResampleBoostVariant::RusBoost, &train, &cfg).unwrap();
        let full = model.n_members();
        let state = fit_visualizer(
            BTreeMap::from([("boost".to_string(), model.clone())]),
            BTreeMap::from([("test".to_string(), test.clone())]),
            2,
            None,
        )
        .unwrap();
        let rows = state
            .performance_lineplot_data(&["balanced_acc".to_string()], &["test".to_string()])
            .unwrap();
        let predictions = model.predict_dataset(&test).unwrap();
        let cm = confusion_matrix(test.labels(), &predictions, 2).unwrap();
        let last = rows.iter().find(|r| r.prefix_size == full).unwrap();
        assert_eq!(last.value, balanced_accuracy(&cm).unwrap());
    }

    #[test]
    fn csv_outputs_are_deterministic_and_structured() {
        let (model, _, test) = fitted();
        let state = state_of(model, test, 6);
        let rows = state
            .performance_lineplot_data(&["accuracy".to_string()], &["test".to_string()])
            .unwrap();
        let csv = performance_table_csv(&rows).unwrap();
        assert_eq!(csv, performance_table_csv(&rows).unwrap());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("model,dataset,prefix_size,metric,value"));
        assert_eq!(csv.lines().count(), 1 + rows.len());
        assert!(csv.lines().nth(1).unwrap().starts_with("M,test,1,accuracy,"));

        let heatmap = state.confusion_matrix_heatmap_data("M", "test").unwrap();
        let matrix_csv = confusion_matrix_csv(&heatmap).unwrap();
        assert!(matrix_csv.starts_with("truth\\predicted,0,1\n"));
        assert_eq!(matrix_csv.lines().count(), 3);

        let bad = vec![PerformanceRow {
            model: "a,b".to_string(),
            dataset: "d".to_string(),
            prefix_size: 1,
            metric: "accuracy".to_string(),
            value: 0.5,
        }];
        assert!(performance_table_csv(&bad).is_err());
    }
}
