//! Discrete probability distributions and the entropy/information calculus.
//!
//! Entropy is `S = -sum p ln p` (nats, `0 ln 0 = 0`). For a distribution whose
//! microstates are grouped into macrostates, the total entropy splits exactly
//! into the entropy of the macrostate masses plus the mass-weighted entropies of
//! the within-macrostate conditionals ([`decompose`]). Information is the
//! shortfall of entropy below a prescribed maximum ([`information`]) and splits
//! the same way ([`info_decompose`]). The canonical distribution is the
//! entropy maximizer at fixed mean energy ([`canonical`],
//! [`temperature_for_mean_energy`]).

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

/// Tolerance on `sum p = 1`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Probabilities below this are exact zeros in entropy sums.
pub const ZERO_THRESHOLD: f64 = 1e-15;

/// Finite probability vector. Entries are non-negative and sum to 1 within
/// [`SUM_TOLERANCE`]; inputs are never silently renormalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probabilities(&probs)?;
        Ok(Self { probs })
    }

    /// Normalizes non-negative weights. This is the explicit renormalization
    /// path; [`DiscreteDistribution::new`] rejects unnormalized input.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::validation("distribution must have at least one entry"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::validation(format!("weight {w} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::validation("weights sum to zero"));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("distribution must have at least one entry"));
        }
        Ok(Self { probs: vec![1.0 / n as f64; n] })
    }

    /// Point mass at `index` among `n` states.
    pub fn point(n: usize, index: usize) -> Result<Self> {
        if index >= n {
            return Err(Error::IndexOutOfRange { index, len: n });
        }
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    /// Wraps a vector already known to be a distribution.
    pub(crate) fn from_trusted(probs: Vec<f64>) -> Self {
        debug_assert!(check_probabilities(&probs).is_ok());
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.probs
    }
}

fn check_probabilities(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::validation("distribution must have at least one entry"));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < 0.0) {
        return Err(Error::validation(format!("entry {i} = {p} is negative or non-finite")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::validation(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

#[inline]
fn neg_plogp(p: f64) -> f64 {
    if p < ZERO_THRESHOLD {
        0.0
    } else {
        -p * p.ln()
    }
}

/// Entropy of an unchecked probability slice.
pub(crate) fn shannon(probs: &[f64]) -> f64 {
    probs.iter().copied().map(neg_plogp).sum()
}

/// Statistical entropy `-sum p ln p` in nats; lies in `[0, ln n]`.
pub fn entropy(dist: &DiscreteDistribution) -> f64 {
    shannon(&dist.probs)
}

/// One macrostate: a label and the joint probabilities of its microstates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub label: String,
    pub probs: Vec<f64>,
}

impl Block {
    pub fn new(label: impl Into<String>, probs: Vec<f64>) -> Self {
        Self { label: label.into(), probs }
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Joint distribution over microstates grouped into labelled macrostates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Block>", into = "Vec<Block>")]
pub struct PartitionedDistribution {
    blocks: Vec<Block>,
}

impl PartitionedDistribution {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::validation("partition must have at least one block"));
        }
        let flat: Vec<f64> = blocks.iter().flat_map(|b| b.probs.iter().copied()).collect();
        check_probabilities(&flat)?;
        Ok(Self { blocks })
    }

    /// Blocks labelled by their position.
    pub fn from_vecs(blocks: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(
            blocks
                .into_iter()
                .enumerate()
                .map(|(i, probs)| Block::new(i.to_string(), probs))
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Macrostate masses `p^(alpha) = sum_i p_i^(alpha)`.
    pub fn masses(&self) -> Vec<f64> {
        self.blocks.iter().map(Block::mass).collect()
    }

    pub fn coarse(&self) -> DiscreteDistribution {
        DiscreteDistribution::from_trusted(self.masses())
    }

    pub fn flatten(&self) -> DiscreteDistribution {
        DiscreteDistribution::from_trusted(
            self.blocks.iter().flat_map(|b| b.probs.iter().copied()).collect(),
        )
    }

    /// Conditional distribution `p_{i|alpha}`; `None` for a zero-mass block.
    pub fn conditional(&self, block: usize) -> Option<DiscreteDistribution> {
        let b = self.blocks.get(block)?;
        let m = b.mass();
        if m <= 0.0 || b.probs.is_empty() {
            return None;
        }
        Some(DiscreteDistribution::from_trusted(b.probs.iter().map(|p| p / m).collect()))
    }

    pub fn total_states(&self) -> usize {
        self.blocks.iter().map(|b| b.probs.len()).sum()
    }
}

impl TryFrom<Vec<Block>> for PartitionedDistribution {
    type Error = Error;

    fn try_from(blocks: Vec<Block>) -> Result<Self> {
        Self::new(blocks)
    }
}

impl From<PartitionedDistribution> for Vec<Block> {
    fn from(p: PartitionedDistribution) -> Self {
        p.blocks
    }
}

/// Entropy of a block's conditional distribution, skipping microstates whose
/// joint probability is below [`ZERO_THRESHOLD`].
fn conditional_entropy(block: &Block, mass: f64) -> f64 {
    if mass <= 0.0 {
        return 0.0;
    }
    block
        .probs
        .iter()
        .filter(|&&p| p >= ZERO_THRESHOLD)
        .map(|&p| {
            let q = p / mass;
            -q * q.ln()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyDecomposition {
    pub total: f64,
    pub coarse: f64,
    pub residual: f64,
    pub per_block_conditional: Vec<f64>,
}

/// Splits the entropy of a partitioned distribution into its coarse-grained
/// part and the mass-weighted residual. `total` is evaluated directly on the
/// flattened joint so the identity `total = coarse + residual` is a check, not
/// a definition.
pub fn decompose(joint: &PartitionedDistribution) -> EntropyDecomposition {
    let masses = joint.masses();
    let per_block_conditional: Vec<f64> = joint
        .blocks
        .iter()
        .zip(&masses)
        .map(|(b, &m)| conditional_entropy(b, m))
        .collect();
    let residual = masses.iter().zip(&per_block_conditional).map(|(m, s)| m * s).sum();
    EntropyDecomposition {
        total: entropy(&joint.flatten()),
        coarse: shannon(&masses),
        residual,
        per_block_conditional,
    }
}

/// Information `s_max - S`: how far the entropy falls short of its bound.
pub fn information(dist: &DiscreteDistribution, s_max: f64) -> Result<f64> {
    info_against(entropy(dist), s_max)
}

fn info_against(s: f64, s_max: f64) -> Result<f64> {
    if !s_max.is_finite() || s_max < s - SUM_TOLERANCE {
        return Err(Error::Constraint { bound: s_max, entropy: s });
    }
    Ok((s_max - s).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationDecomposition {
    pub total: f64,
    pub coarse: f64,
    /// `sum_alpha p^(alpha) I_cond(alpha)`.
    pub residual: f64,
    pub per_block_conditional: Vec<f64>,
    /// `s_max_coarse + sum_alpha p^(alpha) s_max_cond(alpha)`.
    pub s_max_total: f64,
}

/// Hierarchical split of information. The total bound is assembled from the
/// coarse bound and the mass-weighted conditional bounds; `total` is measured
/// against it on the flattened joint.
pub fn info_decompose(
    joint: &PartitionedDistribution,
    s_max_coarse: f64,
    s_max_conditional: &[f64],
) -> Result<InformationDecomposition> {
    if s_max_conditional.len() != joint.blocks.len() {
        return Err(Error::DimensionMismatch {
            expected: joint.blocks.len(),
            got: s_max_conditional.len(),
        });
    }
    let dec = decompose(joint);
    let masses = joint.masses();
    let coarse = info_against(dec.coarse, s_max_coarse)?;
    let mut per_block = Vec::with_capacity(masses.len());
    for ((&m, &s), &bound) in masses.iter().zip(&dec.per_block_conditional).zip(s_max_conditional) {
        if m > 0.0 {
            per_block.push(info_against(s, bound)?);
        } else {
            per_block.push(0.0);
        }
    }
    let residual = masses.iter().zip(&per_block).map(|(m, i)| m * i).sum();
    let s_max_total =
        s_max_coarse + masses.iter().zip(s_max_conditional).map(|(m, b)| m * b).sum::<f64>();
    Ok(InformationDecomposition {
        total: info_against(dec.total, s_max_total)?,
        coarse,
        residual,
        per_block_conditional: per_block,
        s_max_total,
    })
}

/// Energy levels and a temperature (`k_B = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLevels {
    energies: Vec<f64>,
    temperature: f64,
}

impl EnergyLevels {
    pub fn new(energies: Vec<f64>, temperature: f64) -> Result<Self> {
        check_energies(&energies, 1)?;
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::validation(format!("temperature {temperature} must be positive and finite")));
        }
        Ok(Self { energies, temperature })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }
}

fn check_energies(energies: &[f64], min_len: usize) -> Result<()> {
    if energies.len() < min_len {
        return Err(Error::validation(format!("need at least {min_len} energy levels")));
    }
    if let Some(e) = energies.iter().find(|e| !e.is_finite()) {
        return Err(Error::validation(format!("energy {e} is not finite")));
    }
    Ok(())
}

/// Boltzmann weights at inverse temperature `beta`, shifted by the ground
/// energy so every exponent is `<= 0`.
fn boltzmann(energies: &[f64], beta: f64) -> Vec<f64> {
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-(e - e_min) * beta).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

/// Canonical distribution `p_k = exp(-E_k/T) / Z`.
pub fn canonical(levels: &EnergyLevels) -> DiscreteDistribution {
    DiscreteDistribution::from_trusted(boltzmann(&levels.energies, 1.0 / levels.temperature))
}

pub fn mean_energy(dist: &DiscreteDistribution, energies: &[f64]) -> f64 {
    dist.probs.iter().zip(energies).map(|(p, e)| p * e).sum()
}

/// Solves for the positive temperature whose canonical distribution has the
/// given mean energy. The mean is monotone in `beta = 1/T`, so this bisects in
/// `beta` between 0 (uniform mean) and a bracket found by doubling.
pub fn temperature_for_mean_energy(energies: &[f64], target_mean: f64) -> Result<f64> {
    check_energies(energies, 2)?;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let uniform_mean = energies.iter().sum::<f64>() / energies.len() as f64;
    if !(target_mean > e_min && target_mean < uniform_mean) {
        return Err(Error::UnreachableMean { target: target_mean, lo: e_min, hi: uniform_mean });
    }
    let mean_at = |beta: f64| -> f64 {
        boltzmann(energies, beta).iter().zip(energies).map(|(p, e)| p * e).sum()
    };

    let spread = energies.iter().map(|e| e - e_min).fold(0.0, f64::max);
    let mut lo = 0.0;
    let mut hi = 1.0 / spread;
    while mean_at(hi) >= target_mean {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numerics("could not bracket inverse temperature".into()));
        }
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mean_at(mid) > target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    Ok(1.0 / beta)
}

/// Splits every cell into `k` equal subcells. Entropy rises by exactly
/// `ln k`; information measured against a bound refined the same way is
/// unchanged.
pub fn refine(dist: &DiscreteDistribution, k: usize) -> Result<DiscreteDistribution> {
    if k == 0 {
        return Err(Error::validation("refinement factor must be at least 1"));
    }
    let kf = k as f64;
    Ok(DiscreteDistribution::from_trusted(
        dist.probs.iter().flat_map(|&p| std::iter::repeat_n(p / kf, k)).collect(),
    ))
}

/// A seeded random partitioned distribution over `n_states` microstates in
/// `n_blocks` non-empty blocks. Block boundaries are uniform among all
/// compositions, weights are flat-Dirichlet, and about one microstate in ten
/// gets exactly zero weight so the `0 ln 0` convention is exercised.
pub fn random_partitioned(n_states: usize, n_blocks: usize, seed: u64) -> Result<PartitionedDistribution> {
    if n_blocks == 0 || n_blocks > n_states {
        return Err(Error::validation(format!("cannot split {n_states} states into {n_blocks} non-empty blocks")));
    }
    let mut rng = rng::seeded(seed);
    let mut cuts: Vec<usize> = sample(&mut rng, n_states - 1, n_blocks - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    cuts.push(n_states);
    let mut weights: Vec<f64> = (0..n_states)
        .map(|_| if rng.random::<f64>() < 0.1 { 0.0 } else { Exp1.sample(&mut rng) })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        weights[0] = 1.0;
    }
    let probs = DiscreteDistribution::from_weights(weights)?.into_vec();
    let mut start = 0;
    let blocks = cuts
        .iter()
        .enumerate()
        .map(|(i, &end)| {
            let b = Block::new(format!("b{i}"), probs[start..end].to_vec());
            start = end;
            b
        })
        .collect();
    PartitionedDistribution::new(blocks)
}
