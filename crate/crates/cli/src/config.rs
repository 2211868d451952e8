//! Config file ingestion and flag overrides.

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::{Cli, RunError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Entropy,
    Field,
    Canonical,
    Measure,
    Cone,
    Spinecho,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Entropy => "entropy",
            Command::Field => "field",
            Command::Canonical => "canonical",
            Command::Measure => "measure",
            Command::Cone => "cone",
            Command::Spinecho => "spinecho",
        }
    }
}

/// Fully resolved run configuration. `params` holds every parameter of the
/// experiment, defaults included, once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub subcommand: Command,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub params: Value,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    subcommand: Option<Command>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    #[serde(default)]
    params: Map<String, Value>,
}

pub const DEFAULT_SEED: u64 = 0;

/// Reads the config file (if any), applies flag overrides and validates the
/// parameters. Nothing is written.
pub fn resolve(cli: &Cli) -> Result<RunConfig, RunError> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| RunError::Io { path: path.display().to_string(), source: e })?;
            let de = &mut serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize::<_, ConfigFile>(de).map_err(|e| {
                let path = e.path().to_string();
                RunError::schema(if path == "." { "<root>".to_string() } else { path }, e.inner())
            })?
        }
        None => ConfigFile::default(),
    };
    if let Some(sub) = file.subcommand {
        if sub != cli.command {
            return Err(RunError::schema(
                "subcommand",
                format!("config is for `{}` but `{}` was requested", sub.name(), cli.command.name()),
            ));
        }
    }
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let out_dir = cli.out.clone().or(file.out_dir).unwrap_or_else(|| PathBuf::from("statlab-out"));
    let params = crate::experiments::resolve_params(cli.command, Value::Object(file.params))?;
    Ok(RunConfig { subcommand: cli.command, seed, out_dir, params })
}

/// Deserializes experiment parameters, reporting the offending key on error.
pub fn parse_params<P: serde::de::DeserializeOwned>(params: Value) -> Result<P, RunError> {
    serde_path_to_error::deserialize(params).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "params".to_string() } else { format!("params.{path}") };
        RunError::schema(key, e.inner())
    })
}
