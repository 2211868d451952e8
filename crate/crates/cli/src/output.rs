//! Result files: summary, CSV tables and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::{experiments, RunError};

/// What an experiment produces, before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub summary: Value,
    /// `(file name, contents)`, written in order.
    pub files: Vec<(String, Vec<u8>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    /// SHA-256 (lower-case hex) of every other file in the output directory.
    pub outputs: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable value");
    out.push(b'\n');
    out
}

/// Float with 17 significant digits; empty for `None`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Comma-separated, LF-terminated, with a header row.
pub fn csv_bytes<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), RunError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| RunError::Io { path: path.display().to_string(), source: e })
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Runs the experiment and writes its files, then the manifest.
pub fn run(cfg: &RunConfig) -> Result<Manifest, RunError> {
    let started_at = now();
    let outputs = experiments::run(cfg)?;
    fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| RunError::Io { path: cfg.out_dir.display().to_string(), source: e })?;

    let mut digests = BTreeMap::new();
    let summary = json_bytes(&outputs.summary);
    write(&cfg.out_dir, SUMMARY, &summary)?;
    digests.insert(SUMMARY.to_string(), sha256_hex(&summary));
    for (name, bytes) in &outputs.files {
        write(&cfg.out_dir, name, bytes)?;
        digests.insert(name.clone(), sha256_hex(bytes));
    }
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        seed: cfg.seed,
        started_at,
        finished_at: now(),
        outputs: digests,
    };
    write(&cfg.out_dir, MANIFEST, &json_bytes(&manifest))?;
    Ok(manifest)
}

/// Recomputes the digests listed in a manifest; returns the names that differ
/// or are missing.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>, RunError> {
    let path = dir.join(MANIFEST);
    let text = fs::read(&path).map_err(|e| RunError::Io { path: path.display().to_string(), source: e })?;
    let manifest: Manifest = serde_json::from_slice(&text).map_err(|e| RunError::schema(MANIFEST, e))?;
    Ok(manifest
        .outputs
        .iter()
        .filter(|(name, digest)| fs::read(dir.join(name)).map(|b| &sha256_hex(&b) != *digest).unwrap_or(true))
        .map(|(name, _)| name.clone())
        .collect())
}
