//! Batch front end: `hidaprop <command> --config <path> [--out <path>]`.
//!
//! Commands are `freqs`, `verify-wn`, `propagate` and `evolve-density`. The
//! configuration is a flat `key = value` file; results are CSV or JSON
//! column tables. Exit codes: 0 ok, 1 config error, 2 invalid physics,
//! 3 caustic.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::{Path, PathBuf};

pub use config::{Command, Format, RunConfig};
pub use error::CliError;

/// Path of a state file next to the summary: `run.csv` → `run.t0.csv`.
pub fn state_path(out: &Path, suffix: &str, format: Format) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}.{}", format.extension()))
}

/// Runs one command and writes every output at the end. Without an output
/// path the summary goes to stdout and state tables are skipped.
pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let outputs = commands::run(cfg)?;
    let summary = outputs.summary.render(cfg.format);
    match &cfg.out {
        None => print!("{summary}"),
        Some(out) => {
            let mut files = vec![(out.clone(), summary)];
            for (suffix, table) in &outputs.states {
                files.push((state_path(out, suffix, cfg.format), table.render(cfg.format)));
            }
            for (path, text) in files {
                std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
        }
    }
    Ok(())
}
