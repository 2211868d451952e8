//! Random-field fractional-volume estimates over independent replicas:
//! one-point probability, hierarchy spreads, two-point probabilities and the
//! isotropy spread at each requested separation.
//!
//! Replica `i` uses seed `derive_seed(seed, i)`. With `export` set, replica 0
//! is also written as `field_0.bin` plus `field_0.json`.

use serde::{Deserialize, Serialize};
use serde_json::json;
use statlab_core::randomfield::{self, CovarianceSpec, Interval};
use statlab_core::rng::derive_seed;
use statlab_core::stats;

use super::at_least;
use crate::output::{csv_bytes, fmt_f64, json_bytes, Outputs};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub dim: usize,
    pub side: usize,
    pub spec: CovarianceSpec,
    pub replicas: u64,
    pub interval: Interval,
    /// Second interval for two-point queries; defaults to `interval`.
    pub interval_b: Option<Interval>,
    pub separations: Vec<f64>,
    /// Deepest hierarchy level; defaults to the largest power of 3 dividing
    /// `side`.
    pub max_level: Option<usize>,
    pub export: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            dim: 2,
            side: 243,
            spec: CovarianceSpec::white(0.0, 1.0),
            replicas: 10,
            interval: Interval::new(-1.0, 1.0).expect("valid interval"),
            interval_b: None,
            separations: vec![0.0, 1.0, 2.0, 3.0],
            max_level: None,
            export: false,
        }
    }
}

fn ternary_depth(side: usize) -> usize {
    let (mut s, mut l) = (side, 0);
    while s > 0 && s.is_multiple_of(3) {
        s /= 3;
        l += 1;
    }
    l
}

pub fn validate(p: &Params) -> Result<(), RunError> {
    randomfield::check_shape(p.dim, p.side).map_err(|e| RunError::schema("params.side", e))?;
    p.spec.validate().map_err(|e| RunError::schema("params.spec", e))?;
    at_least("params.replicas", p.replicas, 2)?;
    if let Some(l) = p.max_level {
        if l > ternary_depth(p.side) {
            return Err(RunError::schema("params.max_level", format!("side {} is not divisible by 3^{l}", p.side)));
        }
    }
    for (i, &r) in p.separations.iter().enumerate() {
        if !(r.is_finite() && r >= 0.0) {
            return Err(RunError::schema(format!("params.separations[{i}]"), "must be finite and >= 0"));
        }
        if randomfield::offsets_at(p.dim, p.side, 1.0, r).is_empty() {
            return Err(RunError::schema(format!("params.separations[{i}]"), format!("no lattice offsets at r = {r}")));
        }
    }
    Ok(())
}

struct Replica {
    one_point: f64,
    one_point_b: f64,
    epsilon: Vec<Option<f64>>,
    two_point: Vec<f64>,
    spread: Vec<Option<f64>>,
}

fn row(query: String, xs: &[f64]) -> Vec<String> {
    vec![query, fmt_f64(stats::mean(xs)), fmt_f64(stats::mc_sigma(xs)), xs.len().to_string()]
}

pub fn run(p: &Params, seed: u64) -> Result<Outputs, RunError> {
    let ia = p.interval;
    let ib = p.interval_b.unwrap_or(ia);
    let max_level = p.max_level.unwrap_or_else(|| ternary_depth(p.side));
    let mut files = Vec::new();
    let mut reps = Vec::with_capacity(p.replicas as usize);
    for i in 0..p.replicas {
        let f = randomfield::generate(&p.spec, p.dim, p.side, derive_seed(seed, i))?;
        if p.export && i == 0 {
            files.push(("field_0.bin".to_string(), f.to_le_bytes()));
            files.push(("field_0.json".to_string(), json_bytes(&f.sidecar())));
        }
        let h = randomfield::hierarchical_average(&randomfield::indicator(&f, ia), max_level)?;
        let mut two_point = Vec::new();
        let mut spread = Vec::new();
        for &r in &p.separations {
            two_point.push(randomfield::two_point_prob(&f, ia, ib, r)?);
            // fewer than two direction classes: no spread to report
            spread.push(randomfield::isotropy_report(&f, ia, ib, r).ok().map(|rep| rep.spread));
        }
        reps.push(Replica {
            one_point: randomfield::one_point_prob(&f, ia),
            one_point_b: randomfield::one_point_prob(&f, ib),
            epsilon: h.epsilon,
            two_point,
            spread,
        });
    }

    let col = |get: &dyn Fn(&Replica) -> Option<f64>| -> Vec<f64> { reps.iter().filter_map(get).collect() };
    let one = col(&|r| Some(r.one_point));
    let sd = p.spec.variance.sqrt();
    let gaussian = |iv: Interval| {
        if sd == 0.0 {
            iv.contains(p.spec.mean) as u8 as f64
        } else {
            stats::std_normal_cdf((iv.hi() - p.spec.mean) / sd) - stats::std_normal_cdf((iv.lo() - p.spec.mean) / sd)
        }
    };

    let mut rows = vec![row("one_point".into(), &one)];
    let mut eps_json = Vec::new();
    for level in 0..=max_level {
        let e = col(&|r| r.epsilon[level]);
        if !e.is_empty() {
            rows.push(row(format!("epsilon_level={level}"), &e));
            eps_json.push(json!({ "level": level, "mean": stats::mean(&e), "mc_sigma": stats::mc_sigma(&e) }));
        }
    }
    let mut two_json = Vec::new();
    for (j, &r) in p.separations.iter().enumerate() {
        let tp = col(&|x| Some(x.two_point[j]));
        let product = col(&|x| Some(x.one_point * x.one_point_b));
        rows.push(row(format!("two_point_r={r}"), &tp));
        let sp = col(&|x| x.spread[j]);
        if !sp.is_empty() {
            rows.push(row(format!("isotropy_spread_r={r}"), &sp));
        }
        two_json.push(json!({
            "r": r,
            "estimate": stats::mean(&tp),
            "mc_sigma": stats::mc_sigma(&tp),
            "marginal_product": stats::mean(&product),
            "isotropy_spread": (!sp.is_empty()).then(|| stats::mean(&sp)),
        }));
    }

    let summary = json!({
        "seed": seed,
        "dim": p.dim,
        "side": p.side,
        "replicas": p.replicas,
        "interval": ia,
        "interval_b": ib,
        "one_point": {
            "estimate": stats::mean(&one),
            "mc_sigma": stats::mc_sigma(&one),
            "gaussian_value": gaussian(ia),
        },
        "epsilon": eps_json,
        "two_point": two_json,
    });
    files.insert(0, ("field_estimates.csv".into(), csv_bytes(&["query", "estimate", "mc_sigma", "n_samples"], rows)));
    Ok(Outputs { summary, files })
}
