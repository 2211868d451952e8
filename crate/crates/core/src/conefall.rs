//! A body balanced on its tip, modelled as an inverted spherical pendulum
//! (unit mass, length and gravity), and ensembles of its falls.
//!
//! States are reported in the canonical chart `(tilt, azimuth, p_tilt,
//! p_azimuth)`, but that chart is singular at the upright equilibrium, which is
//! exactly where the interesting trajectories start. Integration therefore runs
//! in the horizontal-projection chart `q = sin(tilt) (cos az, sin az)` with
//! conjugate momenta `p`, where
//!
//! ```text
//! H = (|p|^2 - (q.p)^2) / 2 + sqrt(1 - |q|^2)
//! dq/dt = p - q (q.p)
//! dp/dt = (q.p) p + q / sqrt(1 - |q|^2)
//! ```
//!
//! Both charts are canonical, so phase-space volume is the same in either.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Matrix4;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::probcore::DiscreteDistribution;
use crate::{rng, stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseState {
    /// Radians from the upward vertical, in `[0, pi/2]`.
    pub tilt: f64,
    /// Radians in `[0, 2pi)`.
    pub azimuth: f64,
    pub tilt_momentum: f64,
    pub azimuth_momentum: f64,
}

impl PhaseState {
    pub fn new(tilt: f64, azimuth: f64, tilt_momentum: f64, azimuth_momentum: f64) -> Result<Self> {
        let s = Self { tilt, azimuth, tilt_momentum, azimuth_momentum };
        s.validate()?;
        Ok(s)
    }

    pub fn upright() -> Self {
        Self { tilt: 0.0, azimuth: 0.0, tilt_momentum: 0.0, azimuth_momentum: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.tilt, self.azimuth, self.tilt_momentum, self.azimuth_momentum].iter().all(|v| v.is_finite()) {
            return Err(Error::Numerics("non-finite phase state".into()));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.tilt) {
            return Err(Error::validation(format!("tilt {} outside [0, pi/2]", self.tilt)));
        }
        if !(0.0..TAU).contains(&self.azimuth) {
            return Err(Error::validation(format!("azimuth {} outside [0, 2pi)", self.azimuth)));
        }
        Ok(())
    }

    /// Same state rotated about the vertical by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        Self { azimuth: (self.azimuth + angle).rem_euclid(TAU), ..*self }
    }
}

/// Integration settings. `damping` adds `-damping * p` to the momentum
/// equation; it is zero for the physical model and only used as a
/// non-Hamiltonian control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeParams {
    pub dt: f64,
    pub max_steps: u64,
    pub fall_threshold: f64,
    #[serde(default)]
    pub damping: f64,
}

impl Default for ConeParams {
    fn default() -> Self {
        Self { dt: 1e-3, max_steps: 1_000_000, fall_threshold: 1.0, damping: 0.0 }
    }
}

impl ConeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::validation(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.fall_threshold > 0.0 && self.fall_threshold < FRAC_PI_2) {
            return Err(Error::validation(format!("fall threshold {} outside (0, pi/2)", self.fall_threshold)));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::validation("damping must be finite and >= 0"));
        }
        Ok(())
    }
}

/// State in the horizontal-projection chart: `[q0, q1, p0, p1]`.
type Flat = [f64; 4];

fn to_flat(s: &PhaseState) -> Result<Flat> {
    s.validate()?;
    let (st, ct) = s.tilt.sin_cos();
    let (sa, ca) = s.azimuth.sin_cos();
    let radial = s.tilt_momentum / ct;
    let tangential = if st == 0.0 {
        if s.azimuth_momentum != 0.0 {
            return Err(Error::validation("nonzero azimuthal momentum at zero tilt has infinite energy"));
        }
        0.0
    } else {
        s.azimuth_momentum / st
    };
    Ok([st * ca, st * sa, radial * ca - tangential * sa, radial * sa + tangential * ca])
}

fn from_flat(x: &Flat) -> PhaseState {
    let r = x[0].hypot(x[1]);
    let tilt = r.min(1.0).asin();
    let azimuth = if r == 0.0 { 0.0 } else { x[1].atan2(x[0]).rem_euclid(TAU) };
    let (sa, ca) = azimuth.sin_cos();
    PhaseState {
        tilt,
        // rem_euclid can round up to exactly TAU
        azimuth: if azimuth >= TAU { 0.0 } else { azimuth },
        tilt_momentum: tilt.cos() * (x[2] * ca + x[3] * sa),
        azimuth_momentum: x[0] * x[3] - x[1] * x[2],
    }
}

#[inline]
fn rhs(x: &Flat, damping: f64) -> Flat {
    let (q0, q1, p0, p1) = (x[0], x[1], x[2], x[3]);
    let z = (1.0 - q0 * q0 - q1 * q1).sqrt();
    let qp = q0 * p0 + q1 * p1;
    [
        p0 - q0 * qp,
        p1 - q1 * qp,
        qp * p0 + q0 / z - damping * p0,
        qp * p1 + q1 / z - damping * p1,
    ]
}

#[inline]
fn rk4_step(x: &Flat, dt: f64, damping: f64) -> Flat {
    let add = |a: &Flat, b: &Flat, h: f64| -> Flat { [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]] };
    let k1 = rhs(x, damping);
    let k2 = rhs(&add(x, &k1, 0.5 * dt), damping);
    let k3 = rhs(&add(x, &k2, 0.5 * dt), damping);
    let k4 = rhs(&add(x, &k3, dt), damping);
    let mut out = *x;
    for i in 0..4 {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn flat_energy(x: &Flat) -> f64 {
    let qp = x[0] * x[2] + x[1] * x[3];
    let pp = x[2] * x[2] + x[3] * x[3];
    let z = (1.0 - x[0] * x[0] - x[1] * x[1]).sqrt();
    0.5 * (pp - qp * qp) + z
}

fn check_flat(x: &Flat) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) || x[0] * x[0] + x[1] * x[1] >= 1.0 {
        return Err(Error::Numerics("trajectory left the upper hemisphere or became non-finite".into()));
    }
    Ok(())
}

fn advance(mut x: Flat, steps: u64, params: &ConeParams) -> Result<Flat> {
    for _ in 0..steps {
        x = rk4_step(&x, params.dt, params.damping);
        check_flat(&x)?;
    }
    Ok(x)
}

/// Hamiltonian (kinetic energy plus height of the bob above the pivot).
pub fn energy(state: &PhaseState) -> Result<f64> {
    Ok(flat_energy(&to_flat(state)?))
}

/// Advances `steps` fixed RK4 steps of size `params.dt`.
pub fn integrate(state: &PhaseState, steps: u64, params: &ConeParams) -> Result<PhaseState> {
    params.validate()?;
    let x = advance(to_flat(state)?, steps, params)?;
    Ok(from_flat(&x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fall {
    /// Crossing time, linearly interpolated between steps.
    pub time: f64,
    /// State at the first step past the threshold.
    pub state: PhaseState,
}

/// Integrates until the tilt reaches `params.fall_threshold`; `None` if it
/// does not within `params.max_steps`.
pub fn fall(state: &PhaseState, params: &ConeParams) -> Result<Option<Fall>> {
    params.validate()?;
    let threshold = params.fall_threshold.sin();
    let mut x = to_flat(state)?;
    let mut r_prev = x[0].hypot(x[1]);
    if r_prev >= threshold {
        return Ok(Some(Fall { time: 0.0, state: *state }));
    }
    for step in 1..=params.max_steps {
        x = rk4_step(&x, params.dt, params.damping);
        check_flat(&x)?;
        let r = x[0].hypot(x[1]);
        if r >= threshold {
            let frac = (threshold - r_prev) / (r - r_prev);
            let time = params.dt * ((step - 1) as f64 + frac);
            return Ok(Some(Fall { time, state: from_flat(&x) }));
        }
        r_prev = r;
    }
    Ok(None)
}

/// Uniform distribution on a box in `(tilt, azimuth, p_tilt, p_azimuth)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialMacrostate {
    pub center: PhaseState,
    /// Half-widths in the order `[tilt, azimuth, p_tilt, p_azimuth]`.
    pub support_radii: [f64; 4],
}

impl InitialMacrostate {
    pub fn new(center: PhaseState, support_radii: [f64; 4]) -> Result<Self> {
        let m = Self { center, support_radii };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.center.validate()?;
        if self.support_radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::validation("support radii must be positive and finite"));
        }
        let [rt, ra, _, _] = self.support_radii;
        if self.center.tilt - rt < 0.0 || self.center.tilt + rt > FRAC_PI_2 {
            return Err(Error::validation("tilt support must lie inside [0, pi/2]"));
        }
        if ra > PI {
            return Err(Error::validation("azimuth half-width cannot exceed pi"));
        }
        Ok(())
    }

    /// Rotates the whole macrostate about the vertical.
    pub fn rotated(&self, angle: f64) -> Self {
        Self { center: self.center.rotated(angle), ..*self }
    }

    fn draw(&self, rng: &mut rng::Rng) -> PhaseState {
        let c = &self.center;
        let r = &self.support_radii;
        let mut u = |center: f64, radius: f64| center - radius + 2.0 * radius * rng.random::<f64>();
        let tilt = u(c.tilt, r[0]);
        let azimuth = u(c.azimuth, r[1]).rem_euclid(TAU);
        PhaseState {
            tilt,
            azimuth: if azimuth >= TAU { 0.0 } else { azimuth },
            tilt_momentum: u(c.tilt_momentum, r[2]),
            azimuth_momentum: u(c.azimuth_momentum, r[3]),
        }
    }
}

/// One uniform draw from the support box.
pub fn sample_initial(macro_state: &InitialMacrostate, seed: u64) -> Result<PhaseState> {
    macro_state.validate()?;
    Ok(macro_state.draw(&mut rng::seeded(seed)))
}

/// Initial state of ensemble member `member`: sub-stream `member` of `seed`.
pub fn sample_member(macro_state: &InitialMacrostate, seed: u64, member: u64) -> Result<PhaseState> {
    macro_state.validate()?;
    Ok(macro_state.draw(&mut rng::stream(seed, member)))
}

/// Sector `s` covers azimuths `[s w - w/2, s w + w/2)` with `w = 2pi/n`, so
/// azimuth 0 sits at the centre of sector 0.
pub fn sector_of(azimuth: f64, n_sectors: usize) -> usize {
    let w = TAU / n_sectors as f64;
    (((azimuth.rem_euclid(TAU) + 0.5 * w) / w).floor() as usize) % n_sectors
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub member: u64,
    pub fall_time: Option<f64>,
    pub final_azimuth: Option<f64>,
    pub sector: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub seed: u64,
    pub n_sectors: usize,
    pub counts: Vec<u64>,
    /// Members that never reached the threshold (or started on the
    /// measure-zero equilibrium); kept out of `counts`.
    pub unresolved: u64,
    /// Sector law over resolved members.
    pub distribution: Option<DiscreteDistribution>,
    pub fall_time_mean: f64,
    pub fall_time_std: f64,
    pub chi_square: f64,
    pub members: Vec<MemberRecord>,
}

/// Samples `n_members` initial states, lets each fall, and bins the final
/// azimuths into `n_sectors` equal sectors. Members are independent and run in
/// parallel; member `m` draws from sub-stream `m` of `seed`.
pub fn run_ensemble(
    macro_state: &InitialMacrostate,
    n_members: u64,
    n_sectors: usize,
    params: &ConeParams,
    seed: u64,
) -> Result<EnsembleResult> {
    macro_state.validate()?;
    params.validate()?;
    if n_members == 0 {
        return Err(Error::validation("need at least one member"));
    }
    if n_sectors < 2 {
        return Err(Error::validation("need at least two sectors"));
    }
    let members: Vec<MemberRecord> = (0..n_members)
        .into_par_iter()
        .map(|member| {
            let start = macro_state.draw(&mut rng::stream(seed, member));
            let outcome = if start.tilt == 0.0 { Ok(None) } else { fall(&start, params) };
            match outcome {
                Ok(Some(f)) => MemberRecord {
                    member,
                    fall_time: Some(f.time),
                    final_azimuth: Some(f.state.azimuth),
                    sector: Some(sector_of(f.state.azimuth, n_sectors)),
                },
                Ok(None) | Err(_) => MemberRecord { member, fall_time: None, final_azimuth: None, sector: None },
            }
        })
        .collect();

    let mut counts = vec![0u64; n_sectors];
    for s in members.iter().filter_map(|m| m.sector) {
        counts[s] += 1;
    }
    let resolved: u64 = counts.iter().sum();
    let times: Vec<f64> = members.iter().filter_map(|m| m.fall_time).collect();
    let distribution = if resolved > 0 {
        Some(DiscreteDistribution::from_weights(counts.iter().map(|&c| c as f64).collect())?)
    } else {
        None
    };
    Ok(EnsembleResult {
        seed,
        n_sectors,
        chi_square: if resolved > 0 { stats::chi_square_uniform(&counts) } else { f64::NAN },
        counts,
        unresolved: n_members - resolved,
        distribution,
        fall_time_mean: stats::mean(&times),
        fall_time_std: stats::std_dev(&times),
        members,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    /// Mean Jacobian determinant of the flow over the probe bundles.
    pub ratio: f64,
    pub max_deviation: f64,
    pub bundles: usize,
}

/// Finite-difference Jacobian of the time-`steps*dt` flow map at `x`, using a
/// central-difference bundle of 8 probes. Each column is divided by the
/// representable probe separation, so zero steps gives the identity exactly.
fn flow_jacobian(x: &Flat, steps: u64, params: &ConeParams, h: f64) -> Result<Matrix4<f64>> {
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let mut plus = *x;
        let mut minus = *x;
        plus[j] += h;
        minus[j] -= h;
        let sep = plus[j] - minus[j];
        if sep == 0.0 {
            return Err(Error::Numerics("degenerate probe bundle".into()));
        }
        let fp = advance(plus, steps, params)?;
        let fm = advance(minus, steps, params)?;
        for i in 0..4 {
            jac[(i, j)] = (fp[i] - fm[i]) / sep;
        }
    }
    Ok(jac)
}

/// Estimates the phase-volume ratio of the flow along trajectories started
/// from the macrostate. `n_probe / 8` bundle centres are drawn from sub-streams
/// of `seed`; a Hamiltonian flow gives 1.
pub fn liouville_check(
    macro_state: &InitialMacrostate,
    params: &ConeParams,
    steps: u64,
    n_probe: usize,
    seed: u64,
) -> Result<LiouvilleReport> {
    macro_state.validate()?;
    params.validate()?;
    if n_probe < 8 {
        return Err(Error::validation("need at least 8 probes (one central-difference bundle)"));
    }
    let bundles = n_probe / 8;
    let dets = (0..bundles as u64)
        .map(|b| {
            let centre = to_flat(&macro_state.draw(&mut rng::stream(seed, b)))?;
            let det = flow_jacobian(&centre, steps, params, 1e-6)?.determinant();
            if !det.is_finite() {
                return Err(Error::Numerics("degenerate probe bundle".into()));
            }
            Ok(det)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(LiouvilleReport {
        ratio: stats::mean(&dets),
        max_deviation: dets.iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max),
        bundles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> ConeParams {
        ConeParams::default()
    }

    fn symmetric_macro() -> InitialMacrostate {
        InitialMacrostate::new(
            PhaseState::new(0.01, PI, 0.0, 0.0).unwrap(),
            [0.01, PI, 0.01, 1e-5],
        )
        .unwrap()
    }

    /// Fall time from rest at tilt `t0` to tilt 1 from energy conservation,
    /// `t = int dtheta / sqrt(2 (cos t0 - cos theta))`, with `theta = t0 + s^2`
    /// to remove the endpoint singularity and adaptive Simpson quadrature.
    fn fall_time_quadrature(t0: f64, t1: f64) -> f64 {
        let f = |s: f64| -> f64 {
            if s == 0.0 {
                return 2.0 / (2.0 * t0.sin()).sqrt();
            }
            let th = t0 + s * s;
            let diff = 2.0 * ((t0 + th) / 2.0).sin() * (s * s / 2.0).sin();
            2.0 * s / (2.0 * diff).sqrt()
        };
        #[allow(clippy::too_many_arguments)]
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let b = (t1 - t0).sqrt();
        let (fa, fm, fb) = (f(0.0), f(b / 2.0), f(b));
        simpson(&f, 0.0, b, fa, fm, fb, b / 6.0 * (fa + 4.0 * fm + fb), 1e-12, 60)
    }

    #[test]
    fn chart_round_trip() {
        let s = PhaseState::new(0.3, 2.0, -0.1, 0.05).unwrap();
        let back = from_flat(&to_flat(&s).unwrap());
        assert_abs_diff_eq!(back.tilt, s.tilt, epsilon = 1e-14);
        assert_abs_diff_eq!(back.azimuth, s.azimuth, epsilon = 1e-14);
        assert_abs_diff_eq!(back.tilt_momentum, s.tilt_momentum, epsilon = 1e-14);
        assert_abs_diff_eq!(back.azimuth_momentum, s.azimuth_momentum, epsilon = 1e-14);
        // energy in the canonical chart
        let e = 0.5 * (0.01 + 0.0025 / 0.3f64.sin().powi(2)) + 0.3f64.cos();
        assert_abs_diff_eq!(energy(&s).unwrap(), e, epsilon = 1e-14);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let s = integrate(&PhaseState::upright(), 10_000, &params()).unwrap();
        assert_eq!(s, PhaseState::upright());
    }

    #[test]
    fn rotation_equivariance() {
        let s = PhaseState::new(0.05, 0.4, 0.02, 0.003).unwrap();
        for phi in [0.3, 2.0, 5.5] {
            let a = integrate(&s, 2000, &params()).unwrap().rotated(phi);
            let b = integrate(&s.rotated(phi), 2000, &params()).unwrap();
            assert_abs_diff_eq!(a.tilt, b.tilt, epsilon = 1e-12);
            assert_abs_diff_eq!(a.azimuth, b.azimuth, epsilon = 1e-12);
            assert_abs_diff_eq!(a.tilt_momentum, b.tilt_momentum, epsilon = 1e-12);
            assert_abs_diff_eq!(a.azimuth_momentum, b.azimuth_momentum, epsilon = 1e-12);
        }
    }

    #[test]
    fn fall_from_small_tilt_matches_quadrature() {
        let start = PhaseState::new(1e-6, 1.0, 0.0, 0.0).unwrap();
        let mut prev = start.tilt;
        let mut s = start;
        for _ in 0..100 {
            s = integrate(&s, 100, &params()).unwrap();
            assert!(s.tilt > prev);
            prev = s.tilt;
            if s.tilt > 0.9 {
                break;
            }
        }
        let f = fall(&start, &params()).unwrap().unwrap();
        let oracle = fall_time_quadrature(1e-6, 1.0);
        assert!(((f.time - oracle) / oracle).abs() < 1e-3, "{} vs {oracle}", f.time);
        assert_abs_diff_eq!(f.state.azimuth, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn energy_drift_is_small() {
        // starts close enough to upright to stay below 1 rad for the whole run
        let s = PhaseState::new(1e-6, 1.0, 1e-8, 1e-13).unwrap();
        let e0 = energy(&s).unwrap();
        let e1 = energy(&integrate(&s, 10_000, &params()).unwrap()).unwrap();
        assert!(((e1 - e0) / e0).abs() <= 1e-6, "drift {}", (e1 - e0) / e0);

        // a full fall with real kinetic energy
        let s = PhaseState::new(0.2, 1.0, 0.05, 0.01).unwrap();
        let e0 = energy(&s).unwrap();
        let f = fall(&s, &params()).unwrap().unwrap();
        let e1 = energy(&f.state).unwrap();
        assert!(((e1 - e0) / e0).abs() <= 1e-6, "drift {}", (e1 - e0) / e0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(PhaseState::new(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(PhaseState::new(0.1, TAU, 0.0, 0.0).is_err());
        assert!(matches!(PhaseState::new(0.1, 0.0, f64::NAN, 0.0), Err(Error::Numerics(_))));
        assert!(integrate(&PhaseState::upright(), 1, &ConeParams { dt: 0.0, ..params() }).is_err());
        assert!(integrate(&PhaseState { azimuth_momentum: 0.1, ..PhaseState::upright() }, 1, &params()).is_err());
        let c = PhaseState::new(0.1, 0.0, 0.0, 0.0).unwrap();
        assert!(InitialMacrostate::new(c, [0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(InitialMacrostate::new(c, [0.2, 1.0, 1.0, 1.0]).is_err());
        assert!(InitialMacrostate::new(c, [0.1, 4.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn samples_stay_in_box_and_are_uniform() {
        let m = InitialMacrostate::new(PhaseState::new(0.2, 1.0, 0.0, 0.1).unwrap(), [0.1, 0.5, 0.3, 0.05]).unwrap();
        let draws: Vec<PhaseState> = (0..10_000).map(|i| sample_member(&m, 17, i).unwrap()).collect();
        assert_eq!(sample_initial(&m, 3).unwrap(), sample_initial(&m, 3).unwrap());
        let crit = stats::ks_critical(10_000, 0.01);
        type Coord = (fn(&PhaseState) -> f64, f64, f64);
        let coords: [Coord; 4] = [
            (|s| s.tilt, 0.1, 0.3),
            (|s| s.azimuth, 0.5, 1.5),
            (|s| s.tilt_momentum, -0.3, 0.3),
            (|s| s.azimuth_momentum, 0.05, 0.15),
        ];
        for (get, lo, hi) in coords {
            let xs: Vec<f64> = draws.iter().map(get).collect();
            assert!(xs.iter().all(|x| (lo..=hi).contains(x)));
            assert!(stats::ks_uniform_statistic(&xs, lo, hi) < crit);
        }
    }

    #[test]
    fn sectors_are_centred_on_multiples_of_width() {
        assert_eq!(sector_of(0.0, 8), 0);
        assert_eq!(sector_of(TAU - 0.1, 8), 0);
        assert_eq!(sector_of(PI / 4.0, 8), 1);
        assert_eq!(sector_of(PI, 8), 4);
    }

    #[test]
    fn single_member_ensemble() {
        let r = run_ensemble(&symmetric_macro(), 1, 8, &params(), 5).unwrap();
        assert_eq!(r.counts.iter().sum::<u64>() + r.unresolved, 1);
        let d = r.distribution.unwrap();
        assert_eq!(d.probs().iter().filter(|&&p| p == 1.0).count(), 1);
    }

    #[test]
    fn biased_macrostate_falls_toward_its_side() {
        let m = InitialMacrostate::new(PhaseState::new(0.01, 0.0, 0.0, 0.0).unwrap(), [0.009, 0.4, 0.005, 1e-5]).unwrap();
        for n in [300, 3000] {
            let r = run_ensemble(&m, n, 8, &params(), 21).unwrap();
            let mode = (0..8).max_by_key(|&s| r.counts[s]).unwrap();
            assert_eq!(mode, 0, "{:?}", r.counts);
            assert_eq!(r.unresolved, 0);
        }
    }

    #[test]
    fn ensemble_is_deterministic_and_unpredictable() {
        let m = symmetric_macro();
        let a = run_ensemble(&m, 200, 8, &params(), 9).unwrap();
        let b = run_ensemble(&m, 200, 8, &params(), 9).unwrap();
        assert_eq!(a, b);
        let s = crate::probcore::entropy(a.distribution.as_ref().unwrap());
        assert!(s > 0.0);
    }

    #[test]
    fn never_falling_members_are_unresolved() {
        let p = ConeParams { max_steps: 10, ..params() };
        let r = run_ensemble(&symmetric_macro(), 16, 4, &p, 1).unwrap();
        assert_eq!(r.unresolved, 16);
        assert!(r.distribution.is_none());
    }

    #[test]
    fn liouville_examples() {
        let m = symmetric_macro();
        let r = liouville_check(&m, &params(), 0, 8, 1).unwrap();
        assert_eq!(r.ratio, 1.0);
        let r = liouville_check(&m, &params(), 1000, 32, 1).unwrap();
        assert!((r.ratio - 1.0).abs() < 1e-4, "{}", r.ratio);
        assert!(r.max_deviation < 1e-4);

        // finer differencing agrees
        let x = to_flat(&sample_initial(&m, 4).unwrap()).unwrap();
        let coarse = flow_jacobian(&x, 1000, &params(), 1e-6).unwrap().determinant();
        let fine = flow_jacobian(&x, 1000, &params(), 1e-7).unwrap().determinant();
        assert!((coarse - fine).abs() < 1e-5);

        // damping contracts volume by exp(-2 gamma t)
        let damped = ConeParams { damping: 0.5, ..params() };
        let r = liouville_check(&m, &damped, 1000, 8, 1).unwrap();
        assert!(r.ratio < 0.99);
        assert_abs_diff_eq!(r.ratio, (-1.0f64).exp(), epsilon = 1e-4);

        assert!(liouville_check(&m, &params(), 10, 7, 1).is_err());
    }
}
