//! Canonical distributions over a level set across temperatures, the
//! numerical slope `dS/dE` (which should equal `1/T`), and optionally the
//! temperature reproducing a target mean energy. Uses no randomness.

use serde::{Deserialize, Serialize};
use serde_json::json;
use statlab_core::probcore::{self, EnergyLevels};

use super::positive;
use crate::output::{csv_bytes, fmt_f64, Outputs};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub energies: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub target_mean_energy: Option<f64>,
    /// Relative temperature step for the centered difference.
    pub relative_step: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            energies: vec![0.0, 1.0, 2.0],
            temperatures: vec![0.2, 0.5, 1.0, 2.0, 5.0],
            target_mean_energy: None,
            relative_step: 1e-4,
        }
    }
}

pub fn validate(p: &Params) -> Result<(), RunError> {
    if p.energies.is_empty() || p.energies.iter().any(|e| !e.is_finite()) {
        return Err(RunError::schema("params.energies", "need at least one finite energy"));
    }
    if p.temperatures.is_empty() {
        return Err(RunError::schema("params.temperatures", "need at least one temperature"));
    }
    for (i, &t) in p.temperatures.iter().enumerate() {
        positive(&format!("params.temperatures[{i}]"), t)?;
    }
    if let Some(t) = p.target_mean_energy {
        if !t.is_finite() {
            return Err(RunError::schema("params.target_mean_energy", "must be finite"));
        }
    }
    positive("params.relative_step", p.relative_step)
}

struct Point {
    probs: Vec<f64>,
    entropy: f64,
    mean_energy: f64,
}

fn at(energies: &[f64], t: f64) -> Result<Point, RunError> {
    let d = probcore::canonical(&EnergyLevels::new(energies.to_vec(), t)?);
    Ok(Point { entropy: probcore::entropy(&d), mean_energy: probcore::mean_energy(&d, energies), probs: d.into_vec() })
}

pub fn run(p: &Params, seed: u64) -> Result<Outputs, RunError> {
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &t in &p.temperatures {
        let c = at(&p.energies, t)?;
        let h = p.relative_step * t;
        let (lo, hi) = (at(&p.energies, t - h)?, at(&p.energies, t + h)?);
        let ds_de = (hi.entropy - lo.entropy) / (hi.mean_energy - lo.mean_energy);
        let mut row = vec![fmt_f64(t), fmt_f64(c.mean_energy), fmt_f64(c.entropy), fmt_f64(ds_de)];
        row.extend(c.probs.iter().map(|&x| fmt_f64(x)));
        rows.push(row);
        points.push(json!({
            "temperature": t,
            "probs": c.probs,
            "entropy": c.entropy,
            "mean_energy": c.mean_energy,
            "ds_de": ds_de,
            "inverse_temperature": 1.0 / t,
        }));
    }
    let solved = match p.target_mean_energy {
        Some(target) => Some(json!({
            "target_mean_energy": target,
            "temperature": probcore::temperature_for_mean_energy(&p.energies, target)?,
        })),
        None => None,
    };
    let mut header = vec!["temperature".to_string(), "mean_energy".into(), "entropy".into(), "ds_de".into()];
    header.extend((0..p.energies.len()).map(|i| format!("p_{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let summary = json!({
        "seed": seed,
        "energies": p.energies,
        "points": points,
        "solved": solved,
    });
    Ok(Outputs { summary, files: vec![("canonical.csv".into(), csv_bytes(&header, rows))] })
}
