//! Measurement on a random-phase apparatus: Born fractions, sampled outcome
//! counts, the off-diagonal suppression curve and the entropy ledger.
//!
//! Streams: apparatus `derive_seed(seed, 0)`, outcome sampling
//! `derive_seed(seed, 1)`, suppression curve base seed `derive_seed(seed, 2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use statlab_core::measurement::{self, SystemState};
use statlab_core::rng::derive_seed;

use super::at_least;
use crate::output::{csv_bytes, fmt_f64, Outputs};
use crate::RunError;

/// A coefficient given either as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coeff {
    Real(f64),
    Complex([f64; 2]),
}

impl Coeff {
    fn value(self) -> Complex64 {
        match self {
            Coeff::Real(x) => Complex64::new(x, 0.0),
            Coeff::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// System amplitudes; must be normalized.
    pub c: Vec<Coeff>,
    /// Apparatus microstates per outcome.
    pub m: usize,
    pub members: u64,
    pub suppression_m: Vec<usize>,
    pub suppression_seeds: usize,
    pub ledger_n: Vec<u64>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            c: vec![Coeff::Real(0.6), Coeff::Real(0.8)],
            m: 10_000,
            members: 10_000,
            suppression_m: vec![100, 1000, 10_000],
            suppression_seeds: 200,
            ledger_n: vec![1000, 1024, 10_000],
        }
    }
}

fn system(p: &Params) -> Result<SystemState, statlab_core::Error> {
    SystemState::new(p.c.iter().map(|c| c.value()).collect())
}

pub fn validate(p: &Params) -> Result<(), RunError> {
    let s = system(p).map_err(|e| RunError::schema("params.c", e))?;
    if s.n_outcomes() < 2 {
        return Err(RunError::schema("params.c", "need at least two outcomes"));
    }
    at_least("params.m", p.m as u64, 1)?;
    at_least("params.members", p.members, 1)?;
    at_least("params.suppression_seeds", p.suppression_seeds as u64, 1)?;
    for (i, &m) in p.suppression_m.iter().enumerate() {
        at_least(&format!("params.suppression_m[{i}]"), m as u64, 1)?;
    }
    for (i, &n) in p.ledger_n.iter().enumerate() {
        at_least(&format!("params.ledger_n[{i}]"), n, s.n_outcomes() as u64)?;
    }
    Ok(())
}

pub fn run(p: &Params, seed: u64) -> Result<Outputs, RunError> {
    let sys = system(p)?;
    let k = sys.n_outcomes();
    let app = measurement::build_apparatus(p.m, None, k, derive_seed(seed, 0))?;
    let fractions = measurement::outcome_fractions(&sys, &app)?.into_vec();
    let counts = measurement::sample_outcomes(&sys, &app, p.members, derive_seed(seed, 1))?;
    let n = p.members as f64;
    let sigma: Vec<f64> = fractions.iter().map(|&w| (n * w * (1.0 - w)).sqrt()).collect();
    let within_3sigma =
        counts.iter().zip(&fractions).zip(&sigma).all(|((&c, &w), &s)| (c as f64 - n * w).abs() <= 3.0 * s);
    let mut suppression = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            suppression.push(json!({ "k": a, "k_prime": b, "magnitude": measurement::offdiag_suppression(&app, a, b)? }));
        }
    }
    let curve = measurement::suppression_curve(&p.suppression_m, p.suppression_seeds, derive_seed(seed, 2))?;
    let ledger = p.ledger_n.iter().map(|&n| measurement::entropy_ledger(&sys, n)).collect::<Result<Vec<_>, _>>()?;

    let outcome_rows = (0..k).map(|i| {
        vec![
            i.to_string(),
            fmt_f64(fractions[i]),
            counts[i].to_string(),
            fmt_f64(n * fractions[i]),
            fmt_f64(sigma[i]),
        ]
    });
    let curve_rows = curve.iter().map(|c| vec![c.m.to_string(), fmt_f64(c.median), fmt_f64(c.p95), fmt_f64(c.p99)]);
    let summary = json!({
        "seed": seed,
        "M": p.m,
        "K": k,
        "c": sys,
        "fractions": fractions,
        "counts": counts,
        "count_sigma": sigma,
        "counts_within_3sigma": within_3sigma,
        "offdiag_suppression": suppression,
        "suppression_curve": curve,
        "ledger": ledger,
    });
    Ok(Outputs {
        summary,
        files: vec![
            (
                "measure_outcomes.csv".into(),
                csv_bytes(&["outcome", "born_fraction", "count", "expected", "sigma"], outcome_rows),
            ),
            ("suppression_curve.csv".into(), csv_bytes(&["m", "median", "p95", "p99"], curve_rows)),
        ],
    })
}
