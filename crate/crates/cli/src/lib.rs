//! Experiment driver for `statlab-core`.
//!
//! One invocation runs one experiment:
//!
//! ```text
//! statlab <entropy|field|canonical|measure|cone|spinecho> [--config run.json] [--seed N] [--out DIR]
//! ```
//!
//! The config file is a JSON object with optional `seed`, `out_dir` and
//! `params` keys; flags override it. Every run writes `summary.json`, one or
//! more CSV files and a `manifest.json` with SHA-256 digests of the others.
//!
//! Exit status: 0 on success, 2 on a configuration error (nothing is written),
//! 3 when the computation itself fails, 1 on I/O errors.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use clap::Parser;
use thiserror::Error;

pub use config::{Command, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "statlab", version, about = "Seeded entropy and measurement experiments")]
pub struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    pub command: Command,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration at `{key}`: {message}")]
    Schema { key: String, message: String },
    #[error("computation failed: {0}")]
    Numerics(#[from] statlab_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl RunError {
    pub fn schema(key: impl Into<String>, message: impl ToString) -> Self {
        RunError::Schema { key: key.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema { .. } => 2,
            RunError::Numerics(_) => 3,
            RunError::Io { .. } => 1,
        }
    }
}

/// Runs the command line and returns the process exit status.
pub fn execute(cli: &Cli) -> i32 {
    let result = config::resolve(cli).and_then(|cfg| output::run(&cfg));
    match result {
        Ok(manifest) => {
            eprintln!("statlab {}: wrote {} files to {}", cli.command.name(), manifest.outputs.len() + 1, manifest.config.out_dir.display());
            0
        }
        Err(e) => {
            eprintln!("statlab: {e}");
            e.exit_code()
        }
    }
}
