use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use imbens::{
    fit_ensemble, metric_by_name, ConfigEcho, CostMatrix, Dataset, LogRecord, MaxFeatures,
    ModelFile, RandomSeed, TargetSpec, TrainConfig, TrainVerbose, TreeParams,
};

use crate::commands::{parse_comma_floats, parse_method, parse_named_path};
use crate::csvio::{load_dataset, load_dataset_mapped};
use crate::{resolve_seed, Failure};

#[derive(Args)]
pub struct TrainArgs {
    /// Method id, e.g. `self-paced-ensemble` (see the error message of an
    /// unknown id for the full list).
    #[arg(long)]
    pub method: String,
    /// Training data CSV.
    #[arg(long)]
    pub train: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Output path for the model file.
    #[arg(long, default_value = "model.json")]
    pub model_out: PathBuf,
    /// Number of ensemble members.
    #[arg(long, default_value_t = 50)]
    pub n_estimators: usize,
    /// Maximum tree depth; 0 means unlimited. When no tree flag is given the
    /// method's own preset applies (stumps inside boosting, depth 10 elsewhere).
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum number of samples in each leaf.
    #[arg(long)]
    pub min_samples_leaf: Option<usize>,
    /// Features considered per split: `all`, `sqrt`, or a count.
    #[arg(long)]
    pub max_features: Option<String>,
    /// Resampling schedule across rounds: `uniform` or `progressive`.
    #[arg(long, default_value = "uniform")]
    pub balancing_schedule: String,
    /// Anchor class for the resampling targets.
    #[arg(long)]
    pub target_label: Option<usize>,
    /// Per-class sample targets: a single count or pairs like `0:50,1:10`.
    #[arg(long)]
    pub n_target_samples: Option<String>,
    /// Named evaluation dataset `NAME=PATH`; repeatable.
    #[arg(long = "eval-dataset", value_name = "NAME=PATH")]
    pub eval_dataset: Vec<String>,
    /// Comma-separated metric names evaluated into the training log.
    #[arg(long)]
    pub eval_metrics: Option<String>,
    /// Log every N rounds (plus the final round) and print the records.
    #[arg(long, value_name = "N")]
    pub train_verbose: Option<usize>,
    /// Master RNG seed (default: IMBENS_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the parallel methods; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Misclassification costs for the cost-sensitive methods: `uniform`,
    /// `inverse`, or K*K row-major comma-separated values (default: inverse).
    #[arg(long)]
    pub cost_matrix: Option<String>,
    /// Boosting rounds inside each easy-ensemble member.
    #[arg(long, default_value_t = 10)]
    pub inner_rounds: usize,
    /// Hardness bins for self-paced undersampling.
    #[arg(long, default_value_t = 5)]
    pub k_bins: usize,
    /// Neighbours for the SMOTE-based samplers.
    #[arg(long, default_value_t = 5)]
    pub k_neighbors: usize,
    /// Clusters for the k-means SMOTE sampler.
    #[arg(long, default_value_t = 5)]
    pub n_clusters: usize,
    /// Cluster eligibility threshold for the k-means SMOTE sampler.
    #[arg(long, default_value_t = 0.5)]
    pub imbalance_ratio_threshold: f64,
}

pub fn parse_tree_params(
    max_depth: Option<usize>,
    min_samples_leaf: Option<usize>,
    max_features: Option<&str>,
) -> Result<Option<TreeParams>, Failure> {
    if max_depth.is_none() && min_samples_leaf.is_none() && max_features.is_none() {
        return Ok(None);
    }
    let mut params = TreeParams::default();
    if let Some(depth) = max_depth {
        params.max_depth = if depth == 0 { None } else { Some(depth) };
    }
    if let Some(leaf) = min_samples_leaf {
        if leaf == 0 {
            return Err(Failure::usage("--min-samples-leaf: must be at least 1"));
        }
        params.min_samples_leaf = leaf;
    }
    if let Some(text) = max_features {
        params.max_features = match text {
            "all" => MaxFeatures::All,
            "sqrt" => MaxFeatures::Sqrt,
            other => MaxFeatures::Count(other.parse().map_err(|_| {
                Failure::usage(format!(
                    "--max-features: expected `all`, `sqrt` or a count, got \"{other}\""
                ))
            })?),
        };
    }
    Ok(Some(params))
}

pub fn parse_schedule(text: &str) -> Result<imbens::BalancingSchedule, Failure> {
    match text {
        "uniform" => Ok(imbens::BalancingSchedule::Uniform),
        "progressive" => Ok(imbens::BalancingSchedule::Progressive),
        other => Err(Failure::usage(format!(
            "--balancing-schedule: expected `uniform` or `progressive`, got \"{other}\""
        ))),
    }
}

pub fn parse_target_spec(text: &str) -> Result<TargetSpec, Failure> {
    if text.contains(':') {
        let mut targets = BTreeMap::new();
        for part in text.split(',') {
            let (class, count) = part.split_once(':').ok_or_else(|| {
                Failure::usage(format!("--n-target-samples: expected CLASS:COUNT, got \"{part}\""))
            })?;
            let class: usize = class.trim().parse().map_err(|_| {
                Failure::usage(format!("--n-target-samples: \"{class}\" is not a class index"))
            })?;
            let count: usize = count.trim().parse().map_err(|_| {
                Failure::usage(format!("--n-target-samples: \"{count}\" is not a count"))
            })?;
            if targets.insert(class, count).is_some() {
                return Err(Failure::usage(format!(
                    "--n-target-samples: class {class} listed twice"
                )));
            }
        }
        Ok(TargetSpec::PerClass(targets))
    } else {
        let count = text.trim().parse().map_err(|_| {
            Failure::usage(format!("--n-target-samples: \"{text}\" is not a count"))
        })?;
        Ok(TargetSpec::Count(count))
    }
}

/// `uniform`, `inverse`, or an explicit row-major matrix, resolved against
/// the training distribution. `None` spec means the `inverse` default.
pub fn resolve_cost_matrix(
    spec: Option<&str>,
    dataset: &Dataset,
) -> Result<CostMatrix, Failure> {
    let wrap = |e: imbens::Error| Failure::usage(format!("--cost-matrix: {e}"));
    match spec {
        None | Some("inverse") => CostMatrix::inverse_frequency(&dataset.distribution()).map_err(wrap),
        Some("uniform") => CostMatrix::uniform(dataset.n_classes()).map_err(wrap),
        Some(text) => {
            let values = parse_comma_floats(text, "--cost-matrix")?;
            let k = dataset.n_classes();
            if values.len() != k * k {
                return Err(Failure::usage(format!(
                    "--cost-matrix: expected {k}x{k} = {} row-major values, got {}",
                    k * k,
                    values.len()
                )));
            }
            let rows: Vec<Vec<f64>> = values.chunks(k).map(|chunk| chunk.to_vec()).collect();
            CostMatrix::new(&rows).map_err(wrap)
        }
    }
}

pub fn parse_eval_metrics(text: &str) -> Result<Vec<String>, Failure> {
    let names: Vec<String> = text.split(',').map(|s| s.trim().to_string()).collect();
    for name in &names {
        metric_by_name(name).map_err(|e| Failure::usage(format!("--eval-metrics: {e}")))?;
    }
    Ok(names)
}

pub fn format_log_record(record: &LogRecord) -> String {
    let counts: Vec<String> =
        record.resampled_counts.iter().map(|(class, n)| format!("{class}:{n}")).collect();
    let mut line = format!("round {:>3} | resampled {{{}}}", record.iteration, counts.join(", "));
    for (dataset, metrics) in &record.metrics {
        line.push_str(&format!(" | {dataset}:"));
        for (metric, value) in metrics {
            line.push_str(&format!(" {metric}={value:.6}"));
        }
    }
    line
}

pub fn run(args: TrainArgs) -> Result<(), Failure> {
    let method = parse_method(&args.method)?;
    let tree_params =
        parse_tree_params(args.max_depth, args.min_samples_leaf, args.max_features.as_deref())?;
    let schedule = parse_schedule(&args.balancing_schedule)?;
    let n_target_samples =
        args.n_target_samples.as_deref().map(parse_target_spec).transpose()?;
    let eval_metrics = match args.eval_metrics.as_deref() {
        Some(text) => parse_eval_metrics(text)?,
        None => TrainConfig::default().eval_metrics,
    };
    let train_verbose = match args.train_verbose {
        Some(0) => return Err(Failure::usage("--train-verbose: must be at least 1")),
        Some(n) => TrainVerbose::EveryN(n),
        None => TrainVerbose::Off,
    };
    if args.cost_matrix.is_some() && !method.uses_cost_matrix() {
        return Err(Failure::usage(format!(
            "--cost-matrix: method {} does not take a cost matrix (only ada-cost, ada-uboost, asym-boost do)",
            method.as_str()
        )));
    }
    let seed = resolve_seed(args.seed)?;

    let (train, class_names) = load_dataset(&args.train, &args.label_column)?;
    let mut eval_datasets = BTreeMap::new();
    for entry in &args.eval_dataset {
        let (name, path) = parse_named_path(entry, "--eval-dataset")?;
        let dataset = load_dataset_mapped(&path, &args.label_column, &class_names)?;
        if eval_datasets.insert(name.clone(), dataset).is_some() {
            return Err(Failure::usage(format!(
                "--eval-dataset: name \"{name}\" given twice"
            )));
        }
    }

    let cost_matrix = if method.uses_cost_matrix() {
        Some(resolve_cost_matrix(args.cost_matrix.as_deref(), &train)?)
    } else {
        None
    };

    let config = TrainConfig {
        n_estimators: args.n_estimators,
        tree_params,
        schedule,
        target_label: args.target_label,
        n_target_samples,
        eval_datasets,
        eval_metrics,
        train_verbose,
        seed: RandomSeed(seed),
        n_jobs: args.jobs,
        inner_rounds: args.inner_rounds,
        k_bins: args.k_bins,
        k_neighbors: args.k_neighbors,
        n_clusters: args.n_clusters,
        imbalance_ratio_threshold: args.imbalance_ratio_threshold,
        ..TrainConfig::default()
    };

    let mut model =
        fit_ensemble(method, &train, cost_matrix.as_ref(), &config).map_err(Failure::training)?;
    model.set_class_names(class_names).map_err(Failure::training)?;

    if let Some(matrix) = &cost_matrix {
        println!("cost matrix: {:?}", matrix.rows());
    }
    if train_verbose != TrainVerbose::Off {
        for record in &model.training_log().records {
            println!("{}", format_log_record(record));
        }
    }

    let n_members = model.n_members();
    let echo = ConfigEcho::new(&config, cost_matrix.as_ref());
    ModelFile::new(model, echo).save(&args.model_out).map_err(Failure::data)?;
    println!(
        "saved {} ({}, {} members)",
        args.model_out.display(),
        method.as_str(),
        n_members
    );
    Ok(())
}
