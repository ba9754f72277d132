use std::path::PathBuf;

use clap::Args;
use imbens::{
    confusion_matrix, fit_ensemble, metric_by_name, metric_names, write_atomic, CostMatrix,
    MethodId, RandomSeed, TrainConfig,
};

use crate::commands::parse_method;
use crate::csvio::{load_dataset, load_dataset_mapped};
use crate::{resolve_seed, Failure};

#[derive(Args)]
pub struct CompareArgs {
    /// Comma-separated method ids, or `all` for every method.
    #[arg(long)]
    pub methods: String,
    /// Training data CSV.
    #[arg(long)]
    pub train: PathBuf,
    /// Test data CSV (same label vocabulary as the training data).
    #[arg(long)]
    pub test: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Number of master seeds per method (seed, seed+1, …).
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// First master seed (default: IMBENS_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of ensemble members per model.
    #[arg(long, default_value_t = 50)]
    pub n_estimators: usize,
    /// Worker threads for the parallel methods; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output CSV path.
    #[arg(long, default_value = "compare.csv")]
    pub out: PathBuf,
}

/// One output row: a measured value, or `NA` plus the failure reason.
struct Row {
    method: &'static str,
    seed: String,
    metric: String,
    value: Option<f64>,
    reason: String,
}

/// Quote a CSV field if it contains a delimiter, quote, or line break.
fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn parse_methods(text: &str) -> Result<Vec<MethodId>, Failure> {
    let mut methods = Vec::new();
    if text == "all" {
        methods.extend(MethodId::ALL);
    } else {
        for part in text.split(',') {
            let method = parse_method(part.trim())?;
            if !methods.contains(&method) {
                methods.push(method);
            }
        }
    }
    if methods.is_empty() {
        return Err(Failure::usage("--methods: need at least one method"));
    }
    Ok(methods)
}

pub fn run(args: CompareArgs) -> Result<(), Failure> {
    let methods = parse_methods(&args.methods)?;
    if args.seeds == 0 {
        return Err(Failure::usage("--seeds: must be at least 1"));
    }
    let base_seed = resolve_seed(args.seed)?;

    let (train, class_names) = load_dataset(&args.train, &args.label_column)?;
    let test = load_dataset_mapped(&args.test, &args.label_column, &class_names)?;
    let metrics = metric_names();

    let mut rows: Vec<Row> = Vec::new();
    let mut any_success = false;
    for &method in &methods {
        let mut ok_seeds = 0u64;
        for i in 0..args.seeds {
            let seed = base_seed.wrapping_add(i);
            let config = TrainConfig {
                n_estimators: args.n_estimators,
                n_jobs: args.jobs,
                ..TrainConfig::with_seed(RandomSeed(seed))
            };
            let outcome = (|| {
                let cost_matrix = if method.uses_cost_matrix() {
                    Some(CostMatrix::inverse_frequency(&train.distribution())?)
                } else {
                    None
                };
                let model = fit_ensemble(method, &train, cost_matrix.as_ref(), &config)?;
                let y_pred = model.predict_dataset(&test)?;
                confusion_matrix(test.labels(), &y_pred, train.n_classes())
            })();
            match outcome {
                Ok(cm) => {
                    ok_seeds += 1;
                    any_success = true;
                    for metric in &metrics {
                        // Registry names were just listed, so lookup cannot fail.
                        let value = metric_by_name(metric).and_then(|f| f(&cm));
                        match value {
                            Ok(v) => rows.push(Row {
                                method: method.as_str(),
                                seed: seed.to_string(),
                                metric: metric.to_string(),
                                value: Some(v),
                                reason: String::new(),
                            }),
                            Err(e) => rows.push(Row {
                                method: method.as_str(),
                                seed: seed.to_string(),
                                metric: metric.to_string(),
                                value: None,
                                reason: e.to_string(),
                            }),
                        }
                    }
                }
                Err(e) => {
                    let reason = e.to_string();
                    for metric in &metrics {
                        rows.push(Row {
                            method: method.as_str(),
                            seed: seed.to_string(),
                            metric: metric.to_string(),
                            value: None,
                            reason: reason.clone(),
                        });
                    }
                }
            }
        }
        println!("{}: {}/{} seeds ok", method.as_str(), ok_seeds, args.seeds);
    }

    // Median summary block: per method and metric over the successful seeds.
    let mut summary: Vec<Row> = Vec::new();
    for &method in &methods {
        for metric in &metrics {
            let mut values: Vec<f64> = rows
                .iter()
                .filter(|r| r.method == method.as_str() && r.metric == *metric)
                .filter_map(|r| r.value)
                .collect();
            values.sort_by(|a, b| a.total_cmp(b));
            if values.is_empty() {
                summary.push(Row {
                    method: method.as_str(),
                    seed: "median".to_string(),
                    metric: metric.to_string(),
                    value: None,
                    reason: "no successful seeds".to_string(),
                });
            } else {
                summary.push(Row {
                    method: method.as_str(),
                    seed: "median".to_string(),
                    metric: metric.to_string(),
                    value: Some(median(&values)),
                    reason: String::new(),
                });
            }
        }
    }
    rows.extend(summary);

    let mut text = String::from("method,seed,metric,value,reason\n");
    for row in &rows {
        let value = match row.value {
            Some(v) => format!("{v:.16e}"),
            None => "NA".to_string(),
        };
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            row.method,
            row.seed,
            row.metric,
            value,
            csv_field(&row.reason)
        ));
    }
    write_atomic(&args.out, text.as_bytes()).map_err(Failure::data)?;
    println!("wrote {}", args.out.display());

    if any_success {
        Ok(())
    } else {
        Err(Failure::training("NoMethodSucceeded: every method failed on every seed"))
    }
}
