use std::path::PathBuf;

use clap::Args;
use imbens::{generate_imbalance_data, RandomSeed};

use crate::commands::parse_comma_floats;
use crate::csvio::write_dataset_csv;
use crate::{resolve_seed, Failure};

#[derive(Args)]
pub struct GenerateArgs {
    /// Total number of samples before the train/test split.
    #[arg(long, default_value_t = 200)]
    pub n_samples: usize,
    /// Comma-separated positive class weights, one per class (at least two),
    /// e.g. `0.9,0.1`.
    #[arg(long)]
    pub weights: String,
    /// Number of feature dimensions.
    #[arg(long, default_value_t = 2)]
    pub n_features: usize,
    /// Fraction of samples held out as the test split.
    #[arg(long, default_value_t = 0.5)]
    pub test_fraction: f64,
    /// Master RNG seed (default: IMBENS_SEED, then 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output path for the training split.
    #[arg(long, default_value = "train.csv")]
    pub train_out: PathBuf,
    /// Output path for the test split.
    #[arg(long, default_value = "test.csv")]
    pub test_out: PathBuf,
}

pub fn run(args: GenerateArgs) -> Result<(), Failure> {
    let weights = parse_comma_floats(&args.weights, "--weights")?;
    if weights.len() < 2 {
        return Err(Failure::usage("--weights: need ≥2 classes"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(Failure::usage("--weights: all weights must be finite and positive"));
    }
    if args.n_features == 0 {
        return Err(Failure::usage("--n-features: must be at least 1"));
    }
    if !(0.0..1.0).contains(&args.test_fraction) {
        return Err(Failure::usage("--test-fraction: must lie in [0, 1)"));
    }
    let seed = resolve_seed(args.seed)?;

    let (train, test) = generate_imbalance_data(
        args.n_samples,
        &weights,
        args.n_features,
        args.test_fraction,
        RandomSeed(seed),
    )
    .map_err(|e| Failure::usage(format!("--n-samples/--weights: {e}")))?;

    // The generator labels classes 0..K-1 in weight order; name them by index.
    let class_names: Vec<String> = (0..weights.len()).map(|c| c.to_string()).collect();
    write_dataset_csv(&args.train_out, &train, &class_names)?;
    write_dataset_csv(&args.test_out, &test, &class_names)?;
    println!("wrote {}: {} rows", args.train_out.display(), train.n_samples());
    println!("wrote {}: {} rows", args.test_out.display(), test.n_samples());
    Ok(())
}
