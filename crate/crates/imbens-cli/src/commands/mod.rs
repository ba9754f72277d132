pub mod compare;
pub mod evaluate;
pub mod generate;
pub mod train;
pub mod visualize;

use std::path::PathBuf;

use imbens::MethodId;

use crate::Failure;

/// Comma-separated floats, as used by `--weights` and `--cost-matrix`.
pub fn parse_comma_floats(text: &str, flag: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("{flag}: \"{part}\" is not a number")))
        })
        .collect()
}

/// `NAME=PATH` pairs, as used by `--eval-dataset`, `--model`, `--dataset`.
/// Names become map keys, CSV fields, and file-name fragments, so they are
/// restricted to `[A-Za-z0-9._-]`.
pub fn parse_named_path(text: &str, flag: &str) -> Result<(String, PathBuf), Failure> {
    let (name, path) = text
        .split_once('=')
        .ok_or_else(|| Failure::usage(format!("{flag}: expected NAME=PATH, got \"{text}\"")))?;
    if name.is_empty() {
        return Err(Failure::usage(format!("{flag}: name must not be empty in \"{text}\"")));
    }
    if !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'.' || b == b'_' || b == b'-') {
        return Err(Failure::usage(format!(
            "{flag}: name \"{name}\" may only contain letters, digits, '.', '_' and '-'"
        )));
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

/// One method id; unknown names list the valid ids.
pub fn parse_method(text: &str) -> Result<MethodId, Failure> {
    text.parse().map_err(|_| {
        let ids: Vec<&str> = MethodId::ALL.iter().map(|m| m.as_str()).collect();
        Failure::usage(format!(
            "--method: unknown method \"{text}\"; valid ids: {}",
            ids.join(", ")
        ))
    })
}
