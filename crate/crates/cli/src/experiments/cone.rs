//! Falling-cone ensemble: sector histogram of fall azimuths and a phase-volume
//! check of the flow.
//!
//! Streams: ensemble `derive_seed(seed, 0)` (member `i` on sub-stream `i`),
//! Liouville probes `derive_seed(seed, 1)`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use serde_json::json;
use statlab_core::conefall::{self, ConeParams, InitialMacrostate, PhaseState};
use statlab_core::probcore;
use statlab_core::rng::derive_seed;
use statlab_core::stats;

use super::at_least;
use crate::output::{csv_bytes, fmt_f64, fmt_opt, Outputs};
use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub members: u64,
    pub sectors: usize,
    pub macrostate: InitialMacrostate,
    pub integrator: ConeParams,
    pub liouville_steps: u64,
    pub liouville_probes: usize,
}

/// Nearly upright, azimuthally uniform, nearly at rest.
pub fn symmetric_macrostate() -> InitialMacrostate {
    InitialMacrostate {
        center: PhaseState { tilt: 0.01, azimuth: PI, tilt_momentum: 0.0, azimuth_momentum: 0.0 },
        support_radii: [0.01, PI, 0.01, 1e-5],
    }
}

impl Default for Params {
    fn default() -> Self {
        Self {
            members: 1000,
            sectors: 8,
            macrostate: symmetric_macrostate(),
            integrator: ConeParams::default(),
            liouville_steps: 1000,
            liouville_probes: 32,
        }
    }
}

pub fn validate(p: &Params) -> Result<(), RunError> {
    at_least("params.members", p.members, 1)?;
    at_least("params.sectors", p.sectors as u64, 2)?;
    p.macrostate.validate().map_err(|e| RunError::schema("params.macrostate", e))?;
    p.integrator.validate().map_err(|e| RunError::schema("params.integrator", e))?;
    at_least("params.liouville_probes", p.liouville_probes as u64, 8)
}

pub fn run(p: &Params, seed: u64) -> Result<Outputs, RunError> {
    let r = conefall::run_ensemble(&p.macrostate, p.members, p.sectors, &p.integrator, derive_seed(seed, 0))?;
    let liouville =
        conefall::liouville_check(&p.macrostate, &p.integrator, p.liouville_steps, p.liouville_probes, derive_seed(seed, 1))?;
    let resolved: u64 = r.counts.iter().sum();
    let critical = stats::chi_square_critical(p.sectors - 1, 0.01);
    let w = TAU / p.sectors as f64;

    let member_rows = r.members.iter().map(|m| {
        vec![
            m.member.to_string(),
            fmt_opt(m.fall_time),
            fmt_opt(m.final_azimuth),
            m.sector.map(|s| s.to_string()).unwrap_or_default(),
        ]
    });
    let sector_rows = r.counts.iter().enumerate().map(|(s, &c)| {
        vec![
            s.to_string(),
            fmt_f64(s as f64 * w),
            c.to_string(),
            fmt_f64(if resolved > 0 { c as f64 / resolved as f64 } else { f64::NAN }),
        ]
    });
    let summary = json!({
        "seed": seed,
        "members": p.members,
        "sectors": p.sectors,
        "counts": r.counts,
        "unresolved": r.unresolved,
        "distribution": r.distribution,
        "sector_entropy": r.distribution.as_ref().map(probcore::entropy),
        "max_sector_entropy": (p.sectors as f64).ln(),
        "chi_square": r.chi_square,
        "chi_square_critical_0_01": critical,
        "uniformity_rejected": r.chi_square > critical,
        "fall_time_mean": r.fall_time_mean,
        "fall_time_std": r.fall_time_std,
        "liouville": liouville,
    });
    Ok(Outputs {
        summary,
        files: vec![
            (
                "cone_members.csv".into(),
                csv_bytes(&["member", "fall_time", "final_azimuth", "sector"], member_rows),
            ),
            (
                "cone_sectors.csv".into(),
                csv_bytes(&["sector", "center_azimuth", "count", "fraction"], sector_rows),
            ),
        ],
    })
}
