use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use imbens::{
    confusion_matrix_csv, fit_visualizer, metric_names, performance_table_csv,
    render_heatmap_svg, render_lineplot_svg, write_atomic, Dataset, EnsembleModel, ModelFile,
};

use crate::commands::parse_named_path;
use crate::csvio::load_dataset_mapped;
use crate::Failure;

#[derive(Args)]
pub struct VisualizeArgs {
    /// Saved model `NAME=PATH`; repeatable.
    #[arg(long = "model", value_name = "NAME=PATH", required = true)]
    pub model: Vec<String>,
    /// Evaluation dataset CSV `NAME=PATH`; repeatable.
    #[arg(long = "dataset", value_name = "NAME=PATH", required = true)]
    pub dataset: Vec<String>,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Ensemble-prefix step between evaluation points.
    #[arg(long, default_value_t = 10)]
    pub granularity: usize,
    /// Directory receiving the CSV and SVG files.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for the evaluation cache; results do not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

fn write_output(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, text.as_bytes()).map_err(Failure::data)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run(args: VisualizeArgs) -> Result<(), Failure> {
    if args.granularity == 0 {
        return Err(Failure::usage("--granularity: must be at least 1"));
    }

    let mut models: BTreeMap<String, EnsembleModel> = BTreeMap::new();
    let mut class_names: Option<(String, Vec<String>)> = None;
    for entry in &args.model {
        let (name, path) = parse_named_path(entry, "--model")?;
        let file = ModelFile::load(&path).map_err(Failure::data)?;
        match &class_names {
            None => class_names = Some((name.clone(), file.model.class_names().to_vec())),
            Some((first, names)) => {
                if file.model.class_names() != names.as_slice() {
                    return Err(Failure::data(format!(
                        "ClassNameMismatch: model \"{name}\" has classes {:?} but model \"{first}\" has {names:?}",
                        file.model.class_names()
                    )));
                }
            }
        }
        if models.insert(name.clone(), file.model).is_some() {
            return Err(Failure::usage(format!("--model: name \"{name}\" given twice")));
        }
    }
    let (_, class_names) = class_names.expect("at least one model is required");

    let mut datasets: BTreeMap<String, Dataset> = BTreeMap::new();
    for entry in &args.dataset {
        let (name, path) = parse_named_path(entry, "--dataset")?;
        let dataset = load_dataset_mapped(&path, &args.label_column, &class_names)?;
        if datasets.insert(name.clone(), dataset).is_some() {
            return Err(Failure::usage(format!("--dataset: name \"{name}\" given twice")));
        }
    }

    let state =
        fit_visualizer(models, datasets, args.granularity, args.jobs).map_err(Failure::data)?;

    std::fs::create_dir_all(&args.out_dir).map_err(|e| {
        Failure::data(format!("Io: {}: {e}", args.out_dir.display()))
    })?;

    let metrics: Vec<String> = metric_names().iter().map(|s| s.to_string()).collect();
    let dataset_names: Vec<String> =
        state.dataset_names().iter().map(|s| s.to_string()).collect();
    let rows = state.performance_lineplot_data(&metrics, &dataset_names).map_err(Failure::data)?;
    write_output(&args.out_dir.join("performance.csv"), &performance_table_csv(&rows).map_err(Failure::data)?)?;
    write_output(&args.out_dir.join("performance.svg"), &render_lineplot_svg(&rows).map_err(Failure::data)?)?;

    for model in state.model_names() {
        for dataset in &dataset_names {
            let heatmap = state.confusion_matrix_heatmap_data(model, dataset).map_err(Failure::data)?;
            let base = format!("confusion_{model}_{dataset}");
            write_output(&args.out_dir.join(format!("{base}.csv")), &confusion_matrix_csv(&heatmap).map_err(Failure::data)?)?;
            write_output(&args.out_dir.join(format!("{base}.svg")), &render_heatmap_svg(&heatmap).map_err(Failure::data)?)?;
        }
    }
    Ok(())
}
