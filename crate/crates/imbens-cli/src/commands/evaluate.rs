use std::path::PathBuf;

use clap::Args;
use imbens::{evaluate_print, Dataset, Error, ModelFile};

use crate::csvio::{map_labels, read_labeled_csv};
use crate::Failure;

#[derive(Args)]
pub struct EvaluateArgs {
    /// Saved model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Test data CSV.
    #[arg(long)]
    pub test: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Display name in the printed line (default: the method id).
    #[arg(long)]
    pub name: Option<String>,
}

pub fn run(args: EvaluateArgs) -> Result<(), Failure> {
    let file = ModelFile::load(&args.model).map_err(Failure::data)?;
    let model = file.model;

    let csv = read_labeled_csv(&args.test, &args.label_column)?;
    if csv.feature_names.len() != model.n_features() {
        return Err(Failure::data(Error::IncompatibleFeatureWidth {
            model: args.model.display().to_string(),
            dataset: args.test.display().to_string(),
            expected: model.n_features(),
            got: csv.feature_names.len(),
        }));
    }
    let y_true = map_labels(model.class_names(), &csv.labels, &args.test)?;
    let dataset = Dataset::from_rows(&csv.rows, y_true.clone()).map_err(Failure::data)?;

    let y_pred = model.predict_dataset(&dataset).map_err(Failure::data)?;
    let name = args.name.unwrap_or_else(|| model.method().as_str().to_string());
    let line = evaluate_print(&name, &y_true, &y_pred).map_err(Failure::data)?;
    println!("{line}");
    Ok(())
}
