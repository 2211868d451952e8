//! Ensemble model of an ideal quantum measurement.
//!
//! The apparatus starts in a macrostate described by a distribution `{p_i}` over
//! microstates `i`. Premeasurement couples system outcome `k` to the apparatus
//! state `|j(k,i)>`, and each such state carries a phase `theta[k][i]` drawn
//! independently and uniformly from `[0, 2pi)`. The pointer states form a
//! block-indexed orthonormal basis, `j(k,i) = k*M + i`, so the full `K*M`
//! dimensional density operator never has to be built: every ensemble average
//! reduces to sums over the `K x M` phase table.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::probcore::{shannon, DiscreteDistribution};
use crate::quantum::{Observable, IMAG_TOL};
use crate::{rng, stats, Error, Result};

/// Amplitudes `c_k` of the measured system over outcomes `k = 0..K-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct SystemState {
    coeffs: Vec<Complex64>,
}

impl SystemState {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::validation("system state needs at least one outcome"));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::validation("non-finite coefficient"));
        }
        let n2: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (n2 - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!("sum |c_k|^2 = {n2}, not 1")));
        }
        Ok(Self { coeffs })
    }

    pub fn normalized(coeffs: Vec<Complex64>) -> Result<Self> {
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::validation("cannot normalize a zero or non-finite state"));
        }
        Self::new(coeffs.into_iter().map(|c| c / norm).collect())
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn n_outcomes(&self) -> usize {
        self.coeffs.len()
    }

    /// Born weights `|c_k|^2`.
    pub fn weights(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for SystemState {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<SystemState> for Vec<[f64; 2]> {
    fn from(s: SystemState) -> Self {
        s.coeffs.into_iter().map(|c| [c.re, c.im]).collect()
    }
}

/// Apparatus macrostate: microstate probabilities and the random phase table.
#[derive(Debug, Clone, PartialEq)]
pub struct ApparatusEnsemble {
    micro_probs: DiscreteDistribution,
    /// Row-major `K x M` table, `phases[k * M + i] = theta[k][i]`.
    phases: Vec<f64>,
    n_outcomes: usize,
    seed: u64,
}

impl ApparatusEnsemble {
    /// Builds an ensemble from an explicit phase table (`table[k][i]`).
    pub fn from_phase_table(micro_probs: DiscreteDistribution, table: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let m = micro_probs.len();
        if table.len() < 2 {
            return Err(Error::validation("need at least two outcomes"));
        }
        if let Some(row) = table.iter().find(|r| r.len() != m) {
            return Err(Error::DimensionMismatch { expected: m, got: row.len() });
        }
        if table.iter().flatten().any(|t| !t.is_finite()) {
            return Err(Error::validation("non-finite phase"));
        }
        let n_outcomes = table.len();
        let phases = table.into_iter().flatten().map(|t| t.rem_euclid(TAU)).collect();
        Ok(Self { micro_probs, phases, n_outcomes, seed })
    }

    pub fn micro_probs(&self) -> &DiscreteDistribution {
        &self.micro_probs
    }

    pub fn n_micro(&self) -> usize {
        self.micro_probs.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.n_outcomes
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn phase(&self, outcome: usize, micro: usize) -> f64 {
        self.phases[outcome * self.n_micro() + micro]
    }

    pub fn phase_row(&self, outcome: usize) -> &[f64] {
        let m = self.n_micro();
        &self.phases[outcome * m..(outcome + 1) * m]
    }

    /// Entropy of the microstate distribution; premeasurement leaves it untouched.
    pub fn gibbs_entropy(&self) -> f64 {
        shannon(self.micro_probs.probs())
    }
}

/// Draws the phase table `theta[k][i]` i.i.d. uniform on `[0, 2pi)` from the
/// seeded generator, outcome-major. `probs = None` means uniform over `m`.
pub fn build_apparatus(
    m: usize,
    probs: Option<DiscreteDistribution>,
    k: usize,
    seed: u64,
) -> Result<ApparatusEnsemble> {
    if m == 0 {
        return Err(Error::validation("apparatus needs at least one microstate"));
    }
    if k < 2 {
        return Err(Error::validation("measurement needs at least two outcomes"));
    }
    let micro_probs = match probs {
        Some(p) if p.len() != m => return Err(Error::DimensionMismatch { expected: m, got: p.len() }),
        Some(p) => p,
        None => DiscreteDistribution::uniform(m)?,
    };
    let uniform = Uniform::new(0.0, TAU).expect("valid phase range");
    let mut rng = rng::seeded(seed);
    let phases = (0..k * m).map(|_| uniform.sample(&mut rng)).collect();
    Ok(ApparatusEnsemble { micro_probs, phases, n_outcomes: k, seed })
}

/// Basis label `(k, j(k,i))` of the combined system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointerLabel {
    pub outcome: usize,
    pub micro: usize,
}

impl PointerLabel {
    /// Index of `|j(k,i)>` in the block-indexed apparatus basis.
    pub fn apparatus_index(&self, n_micro: usize) -> usize {
        self.outcome * n_micro + self.micro
    }
}

/// Post-premeasurement state for one apparatus microstate `i`: `K` amplitudes
/// on mutually orthogonal labels `(k, j(k,i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedState {
    pub micro: usize,
    pub amplitudes: Vec<(PointerLabel, Complex64)>,
}

impl CombinedState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`, using orthonormality of the labels.
    pub fn inner(&self, other: &CombinedState) -> Complex64 {
        self.amplitudes
            .iter()
            .flat_map(|(la, a)| {
                other
                    .amplitudes
                    .iter()
                    .filter(move |(lb, _)| lb == la)
                    .map(move |(_, b)| a.conj() * b)
            })
            .sum()
    }
}

fn check_outcomes(system: &SystemState, apparatus: &ApparatusEnsemble) -> Result<()> {
    if system.n_outcomes() != apparatus.n_outcomes() {
        return Err(Error::DimensionMismatch { expected: apparatus.n_outcomes(), got: system.n_outcomes() });
    }
    Ok(())
}

/// `sum_k c_k |k>|i> -> sum_k c_k e^{i theta[k][i]} |k, j(k,i)>`.
pub fn premeasure(system: &SystemState, apparatus: &ApparatusEnsemble, micro: usize) -> Result<CombinedState> {
    check_outcomes(system, apparatus)?;
    if micro >= apparatus.n_micro() {
        return Err(Error::IndexOutOfRange { index: micro, len: apparatus.n_micro() });
    }
    let amplitudes = system
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(k, &c)| {
            let label = PointerLabel { outcome: k, micro };
            (label, c * Complex64::from_polar(1.0, apparatus.phase(k, micro)))
        })
        .collect();
    Ok(CombinedState { micro, amplitudes })
}

/// `sum_i p_i exp(i (theta[k][i] - theta[k'][i]))`.
pub fn phase_average(apparatus: &ApparatusEnsemble, k: usize, k_prime: usize) -> Complex64 {
    if k == k_prime {
        return Complex64::new(1.0, 0.0);
    }
    let a = apparatus.phase_row(k);
    let b = apparatus.phase_row(k_prime);
    apparatus
        .micro_probs
        .probs()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&p, (ta, tb))| Complex64::from_polar(p, ta - tb))
        .sum()
}

/// Magnitude of the apparatus-averaged off-diagonal phase factor between
/// pointer blocks `k != k'`. For uniform `p` over `M` microstates its typical
/// size is `sqrt(pi)/2 / sqrt(M)`.
pub fn offdiag_suppression(apparatus: &ApparatusEnsemble, k: usize, k_prime: usize) -> Result<f64> {
    let n = apparatus.n_outcomes();
    for idx in [k, k_prime] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, len: n });
        }
    }
    if k == k_prime {
        return Err(Error::Domain("suppression is defined only for k != k'".into()));
    }
    Ok(phase_average(apparatus, k, k_prime).norm())
}

/// Exact ensemble average of an observable after premeasurement. `obs` is the
/// `K x K` matrix of block-constant elements `<k', j(k',i)|O|k, j(k,i)>` with
/// the phase factors stripped, so the average is
/// `sum_{k,k'} c_{k'}^* c_k O_{k'k} sum_i p_i e^{i(theta_k - theta_k')}`.
pub fn ensemble_expectation(system: &SystemState, apparatus: &ApparatusEnsemble, obs: &Observable) -> Result<f64> {
    check_outcomes(system, apparatus)?;
    let k_n = system.n_outcomes();
    if obs.dim() != k_n {
        return Err(Error::DimensionMismatch { expected: k_n, got: obs.dim() });
    }
    let c = system.coeffs();
    let o = obs.matrix();
    let mut total = Complex64::new(0.0, 0.0);
    for kp in 0..k_n {
        for k in 0..k_n {
            let elem = o[(kp, k)];
            if elem.norm_sqr() == 0.0 || c[k].norm_sqr() == 0.0 || c[kp].norm_sqr() == 0.0 {
                continue;
            }
            total += c[kp].conj() * c[k] * elem * phase_average(apparatus, k, kp);
        }
    }
    if total.im.abs() > IMAG_TOL {
        return Err(Error::Numerics(format!("ensemble average has imaginary part {:e}", total.im)));
    }
    Ok(total.re)
}

/// Fraction of ensemble members in each pointer macrostate `(k, k)`. The
/// diagonal phase factors are identically 1, so the trace against each
/// outcome projector is `|c_k|^2` in closed form.
pub fn outcome_fractions(system: &SystemState, apparatus: &ApparatusEnsemble) -> Result<DiscreteDistribution> {
    check_outcomes(system, apparatus)?;
    DiscreteDistribution::new(system.weights())
}

/// Simulates `n_members` ensemble members, each registering one definite
/// outcome drawn with the Born weights. Returns counts per outcome.
pub fn sample_outcomes(
    system: &SystemState,
    apparatus: &ApparatusEnsemble,
    n_members: u64,
    seed: u64,
) -> Result<Vec<u64>> {
    check_outcomes(system, apparatus)?;
    if n_members == 0 {
        return Err(Error::validation("need at least one ensemble member"));
    }
    let dist = WeightedIndex::new(system.weights()).map_err(|e| Error::Numerics(e.to_string()))?;
    let mut rng = rng::seeded(seed);
    let mut counts = vec![0u64; system.n_outcomes()];
    for _ in 0..n_members {
        counts[dist.sample(&mut rng)] += 1;
    }
    Ok(counts)
}

/// Coarse/residual/total entropy bookkeeping for a measurement on an
/// apparatus macrostate of `n_micro` equiprobable microstates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyLedger {
    pub n_micro: u64,
    /// Microstates allotted to each outcome macrostate.
    pub allocation: Vec<u64>,
    pub initial_total: f64,
    pub final_coarse: f64,
    pub final_residual: f64,
    pub final_total: f64,
    pub rounding_defect: f64,
}

/// Largest-remainder apportionment of `n` units by `weights` (summing to 1).
/// Ties go to the lower index.
pub fn largest_remainder(weights: &[f64], n: u64) -> Vec<u64> {
    let quotas: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut alloc: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = alloc.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned) as usize) {
        alloc[i] += 1;
    }
    alloc
}

/// Entropy ledger: initially one macrostate of `n` microstates (`ln n`);
/// finally `K` macrostates with masses `|c_k|^2` holding `n_k` microstates each.
pub fn entropy_ledger(system: &SystemState, n_micro: u64) -> Result<EntropyLedger> {
    let k = system.n_outcomes() as u64;
    if n_micro < k {
        return Err(Error::validation(format!("n_micro = {n_micro} is smaller than the {k} outcomes")));
    }
    let weights = system.weights();
    let allocation = largest_remainder(&weights, n_micro);
    let n = n_micro as f64;
    let final_coarse = shannon(&weights);
    let final_residual: f64 = allocation
        .iter()
        .filter(|&&na| na > 0)
        .map(|&na| (na as f64 / n) * (na as f64).ln())
        .sum();
    let initial_total = n.ln();
    let final_total = final_coarse + final_residual;
    Ok(EntropyLedger {
        n_micro,
        allocation,
        initial_total,
        final_coarse,
        final_residual,
        final_total,
        rounding_defect: (final_total - initial_total).abs(),
    })
}

/// Median and upper quantiles of the suppression magnitude over many seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuppressionPoint {
    pub m: usize,
    pub median: f64,
    pub p95: f64,
    pub p99: f64,
}

/// Suppression magnitudes between outcomes 0 and 1 of a two-outcome apparatus
/// with uniform `p` over `m` microstates, one per seed
/// `rng::derive_seed(base_seed, s)` for `s in 0..n_seeds`.
pub fn suppression_samples(m: usize, n_seeds: usize, base_seed: u64) -> Result<Vec<f64>> {
    (0..n_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let app = build_apparatus(m, None, 2, rng::derive_seed(base_seed, s))?;
            offdiag_suppression(&app, 0, 1)
        })
        .collect()
}

pub fn suppression_curve(m_values: &[usize], n_seeds: usize, base_seed: u64) -> Result<Vec<SuppressionPoint>> {
    m_values
        .iter()
        .map(|&m| {
            let xs = suppression_samples(m, n_seeds, base_seed)?;
            Ok(SuppressionPoint {
                m,
                median: stats::median(&xs),
                p95: stats::quantile(&xs, 0.95),
                p99: stats::quantile(&xs, 0.99),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn build_apparatus_examples() {
        let a = build_apparatus(50, None, 3, 11).unwrap();
        let b = build_apparatus(50, None, 3, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_apparatus(50, None, 3, 12).unwrap());
        let one = build_apparatus(1, None, 2, 0).unwrap();
        assert_eq!(one.micro_probs().probs(), &[1.0]);
        assert!(a.phases.iter().all(|t| (0.0..TAU).contains(t)));
        assert!(build_apparatus(0, None, 2, 0).is_err());
        assert!(build_apparatus(3, None, 1, 0).is_err());
        assert!(build_apparatus(3, Some(DiscreteDistribution::uniform(2).unwrap()), 2, 0).is_err());
    }

    #[test]
    fn phases_pass_ks_uniformity() {
        let a = build_apparatus(10_000, None, 2, 2024).unwrap();
        for k in 0..2 {
            let d = stats::ks_uniform_statistic(a.phase_row(k), 0.0, TAU);
            assert!(d < stats::ks_critical(10_000, 0.01), "KS statistic {d}");
        }
    }

    #[test]
    fn premeasure_examples() {
        let app = build_apparatus(8, None, 2, 5).unwrap();
        let eigen = SystemState::from_real(&[1.0, 0.0]).unwrap();
        let out = premeasure(&eigen, &app, 3).unwrap();
        assert_eq!(out.amplitudes.len(), 1);
        assert_eq!(out.amplitudes[0].0, PointerLabel { outcome: 0, micro: 3 });
        assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-15);

        let plus = SystemState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let out = premeasure(&plus, &app, 7).unwrap();
        assert_eq!(out.amplitudes.len(), 2);
        for (_, a) in &out.amplitudes {
            assert_abs_diff_eq!(a.norm(), FRAC_1_SQRT_2, epsilon = 1e-15);
        }
        assert!(matches!(premeasure(&plus, &app, 8), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn combined_states_for_distinct_microstates_are_orthogonal() {
        let app = build_apparatus(4, None, 3, 9).unwrap();
        let s = SystemState::normalized(vec![c(1.0, 0.0), c(0.0, 2.0), c(1.0, 1.0)]).unwrap();
        let a = premeasure(&s, &app, 0).unwrap();
        let b = premeasure(&s, &app, 1).unwrap();
        assert_eq!(a.inner(&b), c(0.0, 0.0));
        assert_abs_diff_eq!(a.inner(&a).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn suppression_examples() {
        let one = build_apparatus(1, None, 2, 3).unwrap();
        assert_abs_diff_eq!(offdiag_suppression(&one, 0, 1).unwrap(), 1.0, epsilon = 1e-15);

        let row: Vec<f64> = (0..100).map(|i| i as f64 * 0.37).collect();
        let coherent = ApparatusEnsemble::from_phase_table(
            DiscreteDistribution::uniform(100).unwrap(),
            vec![row.clone(), row],
            0,
        )
        .unwrap();
        assert_abs_diff_eq!(offdiag_suppression(&coherent, 0, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert!(matches!(offdiag_suppression(&coherent, 1, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn suppression_is_small_for_large_m() {
        let xs = suppression_samples(10_000, 1000, 77).unwrap();
        let within = xs.iter().filter(|&&x| x < 0.05).count();
        assert!(within >= 990, "{within} of 1000 below 5/sqrt(M)");
        // Rayleigh mean sqrt(pi)/2/sqrt(M)
        let expected = std::f64::consts::PI.sqrt() / 2.0 / 100.0;
        assert!((stats::mean(&xs) - expected).abs() < 3.0 * stats::mc_sigma(&xs));
    }

    #[test]
    fn ensemble_expectation_examples() {
        let app = build_apparatus(10_000, None, 2, 31).unwrap();
        let s = SystemState::from_real(&[0.6, 0.8]).unwrap();
        let proj0 = Observable::diagonal(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(ensemble_expectation(&s, &app, &proj0).unwrap(), 0.36, epsilon = 1e-15);

        let o = Observable::from_rows(vec![vec![c(2.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(-1.0, 0.0)]]).unwrap();
        let got = ensemble_expectation(&s, &app, &o).unwrap();
        let diag = 0.36 * 2.0 - 0.64;
        assert!((got - diag).abs() < 0.05, "{got} vs {diag}");
        // cross terms weighted by the suppression factor
        let s01 = phase_average(&app, 1, 0);
        let cross = 2.0 * (0.6 * 0.8 * s01).re;
        assert_abs_diff_eq!(got, diag + cross, epsilon = 1e-12);

        let eigen = SystemState::from_real(&[0.0, 1.0]).unwrap();
        for m in [1, 10, 1000] {
            let app = build_apparatus(m, None, 2, m as u64).unwrap();
            assert_abs_diff_eq!(ensemble_expectation(&eigen, &app, &o).unwrap(), -1.0, epsilon = 1e-15);
        }
        assert!(ensemble_expectation(&s, &app, &Observable::identity(3).unwrap()).is_err());
    }

    #[test]
    fn outcome_fraction_examples() {
        let app = build_apparatus(10, None, 2, 1).unwrap();
        let f = outcome_fractions(&SystemState::from_real(&[0.6, 0.8]).unwrap(), &app).unwrap();
        assert_abs_diff_eq!(f.probs()[0], 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(f.probs()[1], 0.64, epsilon = 1e-15);
        let f = outcome_fractions(&SystemState::from_real(&[1.0, 0.0]).unwrap(), &app).unwrap();
        assert_eq!(f.probs(), &[1.0, 0.0]);
        let three = SystemState::from_real(&[0.6, 0.8, 0.0]).unwrap();
        assert!(outcome_fractions(&three, &app).is_err());
    }

    #[test]
    fn sample_outcome_examples() {
        let app = build_apparatus(4, None, 2, 1).unwrap();
        let plus = SystemState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let a = sample_outcomes(&plus, &app, 10_000, 1).unwrap();
        let b = sample_outcomes(&plus, &app, 10_000, 2).unwrap();
        assert_ne!(a, b);
        for counts in [&a, &b] {
            assert_eq!(counts.iter().sum::<u64>(), 10_000);
            assert!(counts[0].abs_diff(5000) <= 150, "{counts:?}");
        }
        assert_eq!(sample_outcomes(&plus, &app, 10_000, 1).unwrap(), a);
        let eigen = SystemState::from_real(&[1.0, 0.0]).unwrap();
        assert_eq!(sample_outcomes(&eigen, &app, 500, 3).unwrap(), vec![500, 0]);
        assert!(sample_outcomes(&eigen, &app, 0, 3).is_err());
    }

    #[test]
    fn ledger_examples() {
        let plus = SystemState::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let l = entropy_ledger(&plus, 1024).unwrap();
        assert_eq!(l.allocation, vec![512, 512]);
        assert_abs_diff_eq!(l.final_coarse, std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(l.final_residual, 512f64.ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(l.final_total, 1024f64.ln(), epsilon = 1e-14);

        let s = SystemState::from_real(&[0.3f64.sqrt(), 0.7f64.sqrt()]).unwrap();
        let l = entropy_ledger(&s, 1000).unwrap();
        assert_eq!(l.allocation, vec![300, 700]);
        assert_abs_diff_eq!(l.final_coarse, 0.6108643020548935, epsilon = 1e-12);
        assert_abs_diff_eq!(l.final_residual, 6.2968909769272425, epsilon = 1e-12);
        assert_abs_diff_eq!(l.final_total, 6.907755278982137, epsilon = 1e-12);
        assert!(l.rounding_defect < 1e-9);

        let eigen = SystemState::from_real(&[1.0, 0.0]).unwrap();
        let l = entropy_ledger(&eigen, 777).unwrap();
        assert_eq!(l.final_coarse, 0.0);
        assert_abs_diff_eq!(l.final_residual, 777f64.ln(), epsilon = 1e-14);
        assert!(entropy_ledger(&SystemState::from_real(&[0.6, 0.0, 0.8]).unwrap(), 2).is_err());
    }

    #[test]
    fn largest_remainder_breaks_ties_by_index() {
        assert_eq!(largest_remainder(&[1.0 / 3.0; 3], 10), vec![4, 3, 3]);
        assert_eq!(largest_remainder(&[0.5, 0.5], 3), vec![2, 1]);
        assert_eq!(largest_remainder(&[0.125, 0.875], 8), vec![1, 7]);
    }

    #[test]
    fn gibbs_entropy_is_unchanged_by_premeasurement() {
        let p = DiscreteDistribution::new(vec![0.5, 0.25, 0.25]).unwrap();
        let app = build_apparatus(3, Some(p.clone()), 2, 4).unwrap();
        let s = SystemState::from_real(&[0.6, 0.8]).unwrap();
        // member i of the final ensemble keeps weight p_i
        let members: Vec<f64> = (0..3)
            .map(|i| {
                let out = premeasure(&s, &app, i).unwrap();
                assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-15);
                p.probs()[out.micro]
            })
            .collect();
        assert_eq!(shannon(&members), app.gibbs_entropy());
    }

    proptest! {
        #[test]
        fn premeasure_preserves_norm(
            re in prop::collection::vec(-1.0..1.0f64, 2..8),
            im in prop::collection::vec(-1.0..1.0f64, 8),
            seed in any::<u64>(),
            micro in 0usize..16,
        ) {
            let coeffs: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect();
            prop_assume!(coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-6);
            let s = SystemState::normalized(coeffs).unwrap();
            let app = build_apparatus(16, None, s.n_outcomes(), seed).unwrap();
            let out = premeasure(&s, &app, micro).unwrap();
            prop_assert!((out.norm() - 1.0).abs() < 1e-12);
            let f = outcome_fractions(&s, &app).unwrap();
            for (fk, w) in f.probs().iter().zip(s.weights()) {
                prop_assert!((fk - w).abs() < 1e-12);
            }
        }

        #[test]
        fn ledger_identity(w in prop::collection::vec(0.0..1.0f64, 2..8), n in 8u64..20_000) {
            let total: f64 = w.iter().sum();
            prop_assume!(total > 0.0);
            let s = SystemState::from_real(&w.iter().map(|x| (x / total).sqrt()).collect::<Vec<_>>()).unwrap();
            let l = entropy_ledger(&s, n).unwrap();
            prop_assert_eq!(l.allocation.iter().sum::<u64>(), n);
            prop_assert!((l.final_coarse + l.final_residual - l.final_total).abs() < 1e-12);
            prop_assert!((l.final_total - l.initial_total).abs() <= l.rounding_defect + 1e-15);
        }
    }
}
