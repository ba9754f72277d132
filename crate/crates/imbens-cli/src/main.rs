//! `imbens` — benchmark harness for ensemble learning on class-imbalanced
//! data. Five subcommands cover the full loop: `generate` synthetic data,
//! `train` one method, `evaluate` a saved model, `compare` several methods
//! across seeds, and `visualize` training trajectories and confusion
//! matrices.
//!
//! Exit codes: 0 success, 2 usage/flag errors, 3 data errors (CSV, labels,
//! model files), 4 training or other runtime errors.

mod commands;
mod csvio;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::compare::CompareArgs;
use commands::evaluate::EvaluateArgs;
use commands::generate::GenerateArgs;
use commands::train::TrainArgs;
use commands::visualize::VisualizeArgs;

/// Ensemble learning toolkit for class-imbalanced classification.
#[derive(Parser)]
#[command(name = "imbens", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic imbalanced Gaussian dataset as train/test CSVs.
    Generate(GenerateArgs),
    /// Train one ensemble method on a labeled CSV and save the model file.
    Train(TrainArgs),
    /// Evaluate a saved model on a labeled CSV and print one metric line.
    Evaluate(EvaluateArgs),
    /// Train several methods over several seeds and tabulate test metrics.
    Compare(CompareArgs),
    /// Emit performance tables/plots and confusion matrices for saved models.
    Visualize(VisualizeArgs),
}

/// A command failure carrying the process exit code. Messages from library
/// errors keep their structured error name (the `Display` form starts with
/// the variant name); flag errors name the offending flag.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    /// Exit 2: bad flag values or other usage-level mistakes.
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    /// Exit 3: unreadable or inconsistent input data / model files.
    pub fn data(error: impl fmt::Display) -> Self {
        Failure { code: 3, message: error.to_string() }
    }

    /// Exit 4: training or other runtime errors.
    pub fn training(error: impl fmt::Display) -> Self {
        Failure { code: 4, message: error.to_string() }
    }
}

/// Master seed resolution: explicit flag, then the `IMBENS_SEED` environment
/// variable, then 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("IMBENS_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| {
            Failure::usage(format!("IMBENS_SEED must be an unsigned integer, got \"{text}\""))
        }),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Evaluate(args) => commands::evaluate::run(args),
        Command::Compare(args) => commands::compare::run(args),
        Command::Visualize(args) => commands::visualize::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
