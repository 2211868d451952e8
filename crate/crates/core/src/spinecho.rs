//! Spin echo with classical phase oscillators.
//!
//! Each spin precesses freely at its own frequency, so the ensemble dephases:
//! the magnetization `M(t) = |sum e^{i phi}| / n` decays and the binned phase
//! distribution approaches uniform. A reversal pulse at `tau` negates every
//! accumulated phase, and at `2 tau` all phases return exactly to zero. The
//! coarse description at `tau` (near-maximal binned entropy) carries no hint of
//! the echo that follows with certainty.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::distr::{Distribution, Uniform};
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::probcore::shannon;
use crate::{rng, Error, Result};

/// Distribution of precession frequencies about zero (rotating frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencySpread {
    Uniform { half_width: f64 },
    Normal { sigma: f64 },
}

impl FrequencySpread {
    pub fn validate(&self) -> Result<()> {
        let w = match *self {
            FrequencySpread::Uniform { half_width } => half_width,
            FrequencySpread::Normal { sigma } => sigma,
        };
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::validation(format!("frequency spread {w} must be finite and >= 0")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinEnsemble {
    frequencies: Vec<f64>,
    /// Unwrapped phases.
    phases: Vec<f64>,
    spread: FrequencySpread,
    seed: u64,
}

/// All phases zero; frequencies i.i.d. from `spread`, deterministic per seed.
pub fn init_ensemble(n: usize, spread: FrequencySpread, seed: u64) -> Result<SpinEnsemble> {
    if n == 0 {
        return Err(Error::validation("spin ensemble needs at least one spin"));
    }
    spread.validate()?;
    let mut rng = rng::seeded(seed);
    let frequencies = match spread {
        FrequencySpread::Normal { sigma } => {
            let d = Normal::new(0.0, sigma).map_err(|e| Error::validation(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        FrequencySpread::Uniform { half_width: 0.0 } => vec![0.0; n],
        FrequencySpread::Uniform { half_width } => {
            let d = Uniform::new(-half_width, half_width).map_err(|e| Error::validation(e.to_string()))?;
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
    };
    Ok(SpinEnsemble { frequencies, phases: vec![0.0; n], spread, seed })
}

impl SpinEnsemble {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn spread(&self) -> FrequencySpread {
        self.spread
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Phases reduced to `[0, 2pi)`.
    pub fn wrapped_phases(&self) -> Vec<f64> {
        self.phases.iter().map(|p| p.rem_euclid(TAU)).collect()
    }

    /// Free precession `phi_i += omega_i t`.
    pub fn evolve(&self, t: f64) -> Result<SpinEnsemble> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::validation(format!("evolution time {t} must be finite and >= 0")));
        }
        let phases = self.phases.iter().zip(&self.frequencies).map(|(p, w)| p + w * t).collect();
        Ok(SpinEnsemble { phases, ..self.clone() })
    }

    /// Instantaneous reversal `phi_i -> -phi_i`.
    pub fn apply_pulse(&self) -> SpinEnsemble {
        SpinEnsemble { phases: self.phases.iter().map(|p| -p).collect(), ..self.clone() }
    }

    pub fn magnetization(&self) -> f64 {
        let sum: Complex64 = self.phases.iter().map(|&p| Complex64::from_polar(1.0, p)).sum();
        sum.norm() / self.len() as f64
    }

    /// Entropy of the histogram of wrapped phases over `n_bins` equal bins.
    pub fn binned_entropy(&self, n_bins: usize) -> f64 {
        let mut counts = vec![0usize; n_bins];
        for p in self.wrapped_phases() {
            let b = ((p / TAU) * n_bins as f64) as usize;
            counts[b.min(n_bins - 1)] += 1;
        }
        let n = self.len() as f64;
        shannon(&counts.iter().map(|&c| c as f64 / n).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EchoReport {
    pub tau: f64,
    pub n_bins: usize,
    pub times: Vec<f64>,
    pub magnetization: Vec<f64>,
    pub binned_entropy: Vec<f64>,
    pub echo_time: f64,
    /// Index of `t = tau` in `times`.
    pub tau_index: usize,
}

impl EchoReport {
    pub fn m_tau(&self) -> f64 {
        self.magnetization[self.tau_index]
    }

    pub fn s_tau(&self) -> f64 {
        self.binned_entropy[self.tau_index]
    }

    pub fn m_echo(&self) -> f64 {
        *self.magnetization.last().expect("non-empty report")
    }
}

/// Dephase for `tau`, pulse, rephase for `tau`. Records `M` and the binned
/// phase entropy at `2 * steps_per_half + 1` equally spaced times on
/// `[0, 2 tau]`; the last sample is the echo at exactly `2 tau`.
pub fn run_protocol(
    n: usize,
    spread: FrequencySpread,
    tau: f64,
    n_bins: usize,
    steps_per_half: usize,
    seed: u64,
) -> Result<EchoReport> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::validation(format!("tau = {tau} must be positive")));
    }
    if n_bins < 2 {
        return Err(Error::validation("need at least two phase bins"));
    }
    if steps_per_half == 0 {
        return Err(Error::validation("need at least one sample per half period"));
    }
    let start = init_ensemble(n, spread, seed)?;
    let dephased = start.evolve(tau)?;
    let reversed = dephased.apply_pulse();

    let mut times = Vec::with_capacity(2 * steps_per_half + 1);
    let mut magnetization = Vec::with_capacity(times.capacity());
    let mut binned_entropy = Vec::with_capacity(times.capacity());
    let mut record = |t: f64, e: &SpinEnsemble| {
        times.push(t);
        magnetization.push(e.magnetization());
        binned_entropy.push(e.binned_entropy(n_bins));
    };
    for s in 0..steps_per_half {
        let t = tau * s as f64 / steps_per_half as f64;
        record(t, &start.evolve(t)?);
    }
    record(tau, &dephased);
    for s in 1..steps_per_half {
        let dt = tau * s as f64 / steps_per_half as f64;
        record(tau + dt, &reversed.evolve(dt)?);
    }
    record(2.0 * tau, &reversed.evolve(tau)?);

    Ok(EchoReport {
        tau,
        n_bins,
        times,
        magnetization,
        binned_entropy,
        echo_time: 2.0 * tau,
        tau_index: steps_per_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use approx::assert_abs_diff_eq;

    const NORMAL1: FrequencySpread = FrequencySpread::Normal { sigma: 1.0 };

    #[test]
    fn init_examples() {
        for n in [1, 7, 1000] {
            assert_eq!(init_ensemble(n, NORMAL1, 3).unwrap().magnetization(), 1.0);
        }
        let e = init_ensemble(50, FrequencySpread::Normal { sigma: 0.0 }, 1).unwrap();
        assert!(e.frequencies().iter().all(|&w| w == e.frequencies()[0]));
        let e = init_ensemble(50, FrequencySpread::Uniform { half_width: 0.0 }, 1).unwrap();
        assert!(e.frequencies().iter().all(|&w| w == 0.0));
        let e = init_ensemble(10_000, NORMAL1, 99).unwrap();
        let sd = stats::std_dev(e.frequencies());
        assert!((sd - 1.0).abs() < 3.0 / (2.0 * 10_000f64).sqrt(), "sample sigma {sd}");
        assert!(init_ensemble(0, NORMAL1, 0).is_err());
        assert!(init_ensemble(3, FrequencySpread::Normal { sigma: -1.0 }, 0).is_err());
    }

    #[test]
    fn evolve_examples() {
        let e = init_ensemble(100, NORMAL1, 4).unwrap().evolve(0.7).unwrap();
        assert_eq!(e.evolve(0.0).unwrap(), e);
        let ab = e.evolve(1.25).unwrap().evolve(2.5).unwrap();
        let sum = e.evolve(3.75).unwrap();
        for (x, y) in ab.phases().iter().zip(sum.phases()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        let rigid = init_ensemble(100, FrequencySpread::Normal { sigma: 0.0 }, 4).unwrap();
        for t in [0.5, 10.0, 1e3] {
            assert_abs_diff_eq!(rigid.evolve(t).unwrap().magnetization(), 1.0, epsilon = 1e-12);
        }
        assert!(e.evolve(-1.0).is_err());
    }

    #[test]
    fn pulse_examples() {
        let start = init_ensemble(1000, NORMAL1, 8).unwrap();
        let e = start.evolve(2.0).unwrap();
        assert_eq!(e.apply_pulse().apply_pulse(), e);
        assert_eq!(start.apply_pulse().magnetization(), start.magnetization());
        let back = e.apply_pulse().evolve(2.0).unwrap();
        assert!(back.phases().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn protocol_examples() {
        let r = run_protocol(10_000, NORMAL1, 50.0, 32, 100, 2024).unwrap();
        assert!(r.m_tau() < 0.05, "M(tau) = {}", r.m_tau());
        assert!(r.s_tau() > 0.95 * 32f64.ln());
        assert_abs_diff_eq!(r.m_echo(), 1.0, epsilon = 1e-12);
        assert_eq!(r.times[r.tau_index], 50.0);
        assert_eq!(*r.times.last().unwrap(), 100.0);
        assert_eq!(r.magnetization[0], 1.0);

        let r = run_protocol(500, FrequencySpread::Normal { sigma: 0.0 }, 3.0, 16, 10, 1).unwrap();
        assert!(r.magnetization.iter().all(|&m| (m - 1.0).abs() < 1e-12));
        assert!(r.binned_entropy.iter().all(|&s| s == r.binned_entropy[0]));

        let r = run_protocol(1, NORMAL1, 3.0, 16, 10, 1).unwrap();
        assert!(r.magnetization.iter().all(|&m| (m - 1.0).abs() < 1e-12));

        assert!(run_protocol(10, NORMAL1, 0.0, 16, 10, 1).is_err());
        assert!(run_protocol(10, NORMAL1, 1.0, 1, 10, 1).is_err());
    }

    #[test]
    fn refocusing_is_exact_for_any_spread() {
        for (seed, spread) in [
            (1, FrequencySpread::Normal { sigma: 3.7 }),
            (2, FrequencySpread::Uniform { half_width: 11.0 }),
            (3, FrequencySpread::Normal { sigma: 1e-3 }),
        ] {
            let r = run_protocol(777, spread, 13.3, 8, 5, seed).unwrap();
            assert_eq!(r.m_echo(), 1.0);
        }
    }

    #[test]
    fn dephasing_follows_gaussian_envelope() {
        let n = 10_000;
        let r = run_protocol(n, NORMAL1, 5.0, 32, 50, 6).unwrap();
        for (&t, &m) in r.times[..=r.tau_index].iter().zip(&r.magnetization) {
            let env = (-t * t / 2.0).exp();
            let sigma = ((1.0 - (-t * t).exp()) / n as f64).sqrt();
            assert!((m - env).abs() <= 3.0 * sigma + 1e-12, "t={t} M={m} env={env}");
        }
    }
}
