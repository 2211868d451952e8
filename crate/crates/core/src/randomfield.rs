//! Homogeneous, isotropic Gaussian random fields on a periodic lattice, and
//! fractional-volume probability estimates over them.
//!
//! A field lives on a `side^dim` torus (row-major, last axis fastest). The
//! probability that the field lies in an interval is the fraction of lattice
//! points where it does, and two-point probabilities average over all pairs at
//! a given separation. Homogeneity is probed through a nested ternary hierarchy
//! of cell averages.

use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

/// Radial power spectrum shape, as a function of the wavenumber `|k|` in
/// radians per unit length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumKind {
    White,
    PowerLaw { index: f64 },
    GaussianBump { center: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceSpec {
    pub mean: f64,
    pub variance: f64,
    pub spectrum: SpectrumKind,
    /// Modes with `|k|` above this carry no power.
    #[serde(default)]
    pub cutoff: Option<f64>,
}

impl CovarianceSpec {
    pub fn white(mean: f64, variance: f64) -> Self {
        Self { mean, variance, spectrum: SpectrumKind::White, cutoff: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(Error::validation("field mean must be finite"));
        }
        if !(self.variance.is_finite() && self.variance >= 0.0) {
            return Err(Error::InvalidSpectrum(format!("variance {} must be finite and >= 0", self.variance)));
        }
        match self.spectrum {
            SpectrumKind::White => {}
            SpectrumKind::PowerLaw { index } if !index.is_finite() => {
                return Err(Error::InvalidSpectrum("power-law index must be finite".into()))
            }
            SpectrumKind::GaussianBump { center, width } if !(center.is_finite() && width.is_finite() && width > 0.0) => {
                return Err(Error::InvalidSpectrum("bump needs finite center and positive width".into()))
            }
            _ => {}
        }
        if let Some(c) = self.cutoff {
            if c.is_nan() || c <= 0.0 {
                return Err(Error::InvalidSpectrum(format!("cutoff {c} must be positive")));
            }
        }
        Ok(())
    }

    /// Power at wavenumber magnitude `k > 0`.
    pub fn power(&self, k: f64) -> f64 {
        if self.cutoff.is_some_and(|c| k > c) {
            return 0.0;
        }
        match self.spectrum {
            SpectrumKind::White => 1.0,
            SpectrumKind::PowerLaw { index } => k.powf(index),
            SpectrumKind::GaussianBump { center, width } => (-(k - center).powi(2) / (2.0 * width * width)).exp(),
        }
    }
}

/// Half-open interval `[lo, hi)`; either end may be infinite. Serialized with
/// `null` for an unbounded end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalJson", into = "IntervalJson")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalJson {
    lo: Option<f64>,
    hi: Option<f64>,
}

impl TryFrom<IntervalJson> for Interval {
    type Error = Error;
    fn try_from(j: IntervalJson) -> Result<Self> {
        Interval::new(j.lo.unwrap_or(f64::NEG_INFINITY), j.hi.unwrap_or(f64::INFINITY))
    }
}

impl From<Interval> for IntervalJson {
    fn from(i: Interval) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        IntervalJson { lo: finite(i.lo), hi: finite(i.hi) }
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::validation(format!("interval needs lo < hi, got [{lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn all() -> Self {
        Self { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    dim: usize,
    side: usize,
    spacing: f64,
    seed: u64,
    spec: CovarianceSpec,
    values: Vec<f64>,
}

/// Metadata written next to the raw values on export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSidecar {
    pub dim: usize,
    pub side: usize,
    pub spacing: f64,
    pub seed: u64,
    pub spec: CovarianceSpec,
}

impl FieldSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sidecar(&self) -> FieldSidecar {
        FieldSidecar { dim: self.dim, side: self.side, spacing: self.spacing, seed: self.seed, spec: self.spec }
    }

    /// Values as consecutive little-endian `f64`.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn export(&self, stem: &Path) -> std::io::Result<()> {
        fs::write(stem.with_extension("bin"), self.to_le_bytes())?;
        let json = serde_json::to_string_pretty(&self.sidecar()).map_err(std::io::Error::other)?;
        fs::write(stem.with_extension("json"), json)
    }

    /// Reads back a field written by [`FieldSample::export`].
    pub fn import(stem: &Path) -> Result<Self> {
        let io = |e: std::io::Error| Error::validation(format!("reading field: {e}"));
        let meta: FieldSidecar = serde_json::from_slice(&fs::read(stem.with_extension("json")).map_err(io)?)
            .map_err(|e| Error::validation(format!("field sidecar: {e}")))?;
        let bytes = fs::read(stem.with_extension("bin")).map_err(io)?;
        check_shape(meta.dim, meta.side)?;
        let n = meta.side.pow(meta.dim as u32);
        if bytes.len() != 8 * n {
            return Err(Error::DimensionMismatch { expected: 8 * n, got: bytes.len() });
        }
        let values: Vec<f64> =
            bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerics("non-finite value in imported field".into()));
        }
        Ok(Self { dim: meta.dim, side: meta.side, spacing: meta.spacing, seed: meta.seed, spec: meta.spec, values })
    }
}

/// Checks `dim` in `1..=3` and `side = 2^a 3^b >= 2`.
pub fn check_shape(dim: usize, side: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::validation(format!("dimension {dim} not in 1..=3")));
    }
    let mut s = side;
    while s > 0 && s.is_multiple_of(2) {
        s /= 2;
    }
    while s > 0 && s.is_multiple_of(3) {
        s /= 3;
    }
    if side < 2 || s != 1 {
        return Err(Error::UnsupportedSide(side));
    }
    Ok(())
}

/// Signed lattice frequency for FFT bin `m`.
fn signed_mode(m: usize, side: usize) -> f64 {
    if m <= side / 2 {
        m as f64
    } else {
        m as f64 - side as f64
    }
}

/// In-place unnormalized transform along every axis.
fn fft_nd(data: &mut [Complex64], dim: usize, side: usize, fft: &dyn Fft<f64>) {
    let n = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        for outer in 0..n / (side * stride) {
            for inner in 0..stride {
                let start = outer * side * stride + inner;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[start + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    data[start + j * stride] = *l;
                }
            }
        }
    }
}

fn synthesize(
    spec: &CovarianceSpec,
    dim: usize,
    side: usize,
    seed: u64,
    support: impl Fn(&[f64]) -> bool,
) -> Result<FieldSample> {
    spec.validate()?;
    check_shape(dim, side)?;
    let n = side.pow(dim as u32);
    let spacing = 1.0;
    if spec.variance == 0.0 {
        return Ok(FieldSample { dim, side, spacing, seed, spec: *spec, values: vec![spec.mean; n] });
    }

    // Spectral weights P(|k|) per mode; the zero mode carries only the mean.
    let mut power = vec![0.0; n];
    let mut m = vec![0.0; dim];
    for (idx, p) in power.iter_mut().enumerate().skip(1) {
        let mut rest = idx;
        for a in (0..dim).rev() {
            m[a] = signed_mode(rest % side, side);
            rest /= side;
        }
        if !support(&m) {
            continue;
        }
        let k = TAU / (side as f64 * spacing) * m.iter().map(|x| x * x).sum::<f64>().sqrt();
        *p = spec.power(k);
        if !(p.is_finite() && *p >= 0.0) {
            return Err(Error::InvalidSpectrum(format!("power {p} at |k| = {k}")));
        }
    }
    let total: f64 = power.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidSpectrum("no power at any nonzero lattice mode".into()));
    }

    // Filtering real white noise keeps Hermitian symmetry, since the weights
    // depend on |k| only; each mode pair is then an independent complex Gaussian.
    let mut r = rng::seeded(seed);
    let mut data: Vec<Complex64> = (0..n).map(|_| Complex64::new(StandardNormal.sample(&mut r), 0.0)).collect();
    let mut planner = FftPlanner::new();
    fft_nd(&mut data, dim, side, planner.plan_fft(side, FftDirection::Forward).as_ref());
    let scale = spec.variance * n as f64 / total;
    for (d, p) in data.iter_mut().zip(&power) {
        *d *= (scale * p).sqrt();
    }
    fft_nd(&mut data, dim, side, planner.plan_fft(side, FftDirection::Inverse).as_ref());
    let values: Vec<f64> = data.iter().map(|c| c.re / n as f64 + spec.mean).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerics("non-finite field value".into()));
    }
    Ok(FieldSample { dim, side, spacing, seed, spec: *spec, values })
}

/// Gaussian field with the given mean, variance and isotropic spectrum. `side`
/// must be of the form `2^a 3^b`; lattice spacing is 1.
pub fn generate(spec: &CovarianceSpec, dim: usize, side: usize, seed: u64) -> Result<FieldSample> {
    synthesize(spec, dim, side, seed, |_| true)
}

/// Deliberately anisotropic field: the spectrum is kept only on modes whose
/// wavevector lies along `axis`, so the field is constant across the other
/// axes. Used as a negative control for isotropy tests.
pub fn generate_axis_supported(
    spec: &CovarianceSpec,
    dim: usize,
    side: usize,
    seed: u64,
    axis: usize,
) -> Result<FieldSample> {
    if axis >= dim {
        return Err(Error::IndexOutOfRange { index: axis, len: dim });
    }
    synthesize(spec, dim, side, seed, |m| m.iter().enumerate().all(|(a, &x)| a == axis || x == 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    dim: usize,
    side: usize,
    interval: Interval,
    bits: Vec<u8>,
}

impl IndicatorField {
    /// Builds an indicator directly from 0/1 values, for tests and imports.
    pub fn from_bits(dim: usize, side: usize, bits: Vec<u8>) -> Result<Self> {
        if !(1..=3).contains(&dim) || side == 0 {
            return Err(Error::validation("bad indicator shape"));
        }
        let n = side.pow(dim as u32);
        if bits.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: bits.len() });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::validation("indicator bits must be 0 or 1"));
        }
        Ok(Self { dim, side, interval: Interval::all(), bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn mean(&self) -> f64 {
        self.bits.iter().map(|&b| b as u64).sum::<u64>() as f64 / self.bits.len() as f64
    }
}

pub fn indicator(field: &FieldSample, interval: Interval) -> IndicatorField {
    IndicatorField {
        dim: field.dim,
        side: field.side,
        interval,
        bits: field.values.iter().map(|&v| interval.contains(v) as u8).collect(),
    }
}

/// Fraction of lattice points where the field lies in `interval`.
pub fn one_point_prob(field: &FieldSample, interval: Interval) -> f64 {
    indicator(field, interval).mean()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    /// `means[n]` holds the level-`n` cell averages, row-major.
    pub means: Vec<Vec<f64>>,
    pub cells_per_axis: Vec<usize>,
    /// Spread `max - min` of the level-`n` averages; `None` for levels with
    /// fewer than 9 cells.
    pub epsilon: Vec<Option<f64>>,
}

/// Averages the indicator over nested cells: each level-`n+1` cell is the block
/// of `3^dim` level-`n` cells around (and centred on) its middle child.
pub fn hierarchical_average(ind: &IndicatorField, max_level: usize) -> Result<HierarchyReport> {
    let (dim, side) = (ind.dim, ind.side);
    let span = 3usize.checked_pow(max_level as u32).filter(|s| side % s == 0);
    if span.is_none() {
        return Err(Error::Grid(format!("side {side} is not divisible by 3^{max_level}")));
    }
    let mut means = vec![ind.bits.iter().map(|&b| b as f64).collect::<Vec<f64>>()];
    let mut cells_per_axis = vec![side];
    for level in 0..max_level {
        let prev = &means[level];
        let s = cells_per_axis[level];
        let c = s / 3;
        let mut next = vec![0.0; c.pow(dim as u32)];
        let mut child = vec![0usize; dim];
        for (idx, &v) in prev.iter().enumerate() {
            let mut rest = idx;
            for a in (0..dim).rev() {
                child[a] = rest % s;
                rest /= s;
            }
            let parent = child.iter().fold(0, |acc, &x| acc * c + x / 3);
            next[parent] += v;
        }
        let children = 3f64.powi(dim as i32);
        next.iter_mut().for_each(|x| *x /= children);
        means.push(next);
        cells_per_axis.push(c);
    }
    let epsilon = means
        .iter()
        .map(|m| {
            (m.len() >= 9).then(|| {
                let (lo, hi) = m.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                hi - lo
            })
        })
        .collect();
    Ok(HierarchyReport { means, cells_per_axis, epsilon })
}

/// Direction class of a lattice offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionClass {
    /// One nonzero component.
    Axis,
    /// Two nonzero components of equal magnitude.
    FaceDiagonal,
    /// Three nonzero components of equal magnitude.
    BodyDiagonal,
    Oblique,
    /// The zero offset.
    Origin,
}

impl DirectionClass {
    pub fn of(offset: &[i64]) -> Self {
        let nz: Vec<i64> = offset.iter().filter(|&&c| c != 0).map(|c| c.abs()).collect();
        let equal = nz.windows(2).all(|w| w[0] == w[1]);
        match (nz.len(), equal) {
            (0, _) => DirectionClass::Origin,
            (1, _) => DirectionClass::Axis,
            (2, true) => DirectionClass::FaceDiagonal,
            (3, true) => DirectionClass::BodyDiagonal,
            _ => DirectionClass::Oblique,
        }
    }
}

/// Lattice offsets with length in `[r - spacing/2, r + spacing/2)` and every
/// component strictly shorter than half the box.
pub fn offsets_at(dim: usize, side: usize, spacing: f64, r: f64) -> Vec<Vec<i64>> {
    let cmax = ((side - 1) / 2) as i64;
    let reach = (((r + 0.5 * spacing) / spacing).ceil() as i64).min(cmax);
    let (lo, hi) = (r - 0.5 * spacing, r + 0.5 * spacing);
    let width = (2 * reach + 1) as usize;
    let mut out = Vec::new();
    for flat in 0..width.pow(dim as u32) {
        let mut rest = flat;
        let mut y = vec![0i64; dim];
        for c in y.iter_mut().rev() {
            *c = (rest % width) as i64 - reach;
            rest /= width;
        }
        let len = spacing * (y.iter().map(|c| (c * c) as f64).sum::<f64>()).sqrt();
        if lo <= len && len < hi {
            out.push(y);
        }
    }
    out
}

/// Number of lattice points `x` with `a(x) = b(x + y) = 1` on the torus.
fn joint_count(a: &[u8], b: &[u8], dim: usize, side: usize, y: &[i64]) -> u64 {
    // pad to three axes; leading unused axes have length 1 and offset 0
    let mut shape = [1usize; 3];
    let mut off = [0usize; 3];
    for a_ in 0..dim {
        shape[3 - dim + a_] = side;
        off[3 - dim + a_] = y[a_].rem_euclid(side as i64) as usize;
    }
    let wrap = |i: usize, ax: usize| {
        let j = i + off[ax];
        if j >= shape[ax] {
            j - shape[ax]
        } else {
            j
        }
    };
    let mut count = 0u64;
    for i0 in 0..shape[0] {
        let j0 = wrap(i0, 0);
        for i1 in 0..shape[1] {
            let j1 = wrap(i1, 1);
            let row_a = (i0 * shape[1] + i1) * shape[2];
            let row_b = (j0 * shape[1] + j1) * shape[2];
            for i2 in 0..shape[2] {
                count += (a[row_a + i2] & b[row_b + wrap(i2, 2)]) as u64;
            }
        }
    }
    count
}

fn pair_estimates(field: &FieldSample, ia: Interval, ib: Interval, offsets: &[Vec<i64>]) -> Vec<f64> {
    let a = indicator(field, ia).bits;
    let b = indicator(field, ib).bits;
    let n = field.len() as f64;
    offsets.par_iter().map(|y| joint_count(&a, &b, field.dim, field.side, y) as f64 / n).collect()
}

fn check_r(r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::validation(format!("separation {r} must be finite and >= 0")));
    }
    Ok(())
}

/// Probability that the field is in `ia` at a point and in `ib` at a point a
/// distance `r` away, averaged over all points and all lattice offsets in the
/// half-spacing bin around `r`.
pub fn two_point_prob(field: &FieldSample, ia: Interval, ib: Interval, r: f64) -> Result<f64> {
    check_r(r)?;
    let offsets = offsets_at(field.dim, field.side, field.spacing, r);
    if offsets.is_empty() {
        let h = 0.5 * field.spacing;
        return Err(Error::EmptySeparation { lo: r - h, hi: r + h });
    }
    let est = pair_estimates(field, ia, ib, &offsets);
    Ok(est.iter().sum::<f64>() / est.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    pub class: DirectionClass,
    pub estimate: f64,
    pub n_offsets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotropyReport {
    pub r: f64,
    /// One entry per class present in the bin, in class order.
    pub classes: Vec<DirectionEstimate>,
    /// Largest pairwise difference between class estimates.
    pub spread: f64,
}

impl IsotropyReport {
    pub fn estimate(&self, class: DirectionClass) -> Option<f64> {
        self.classes.iter().find(|c| c.class == class).map(|c| c.estimate)
    }
}

/// Two-point estimates at separation `r` split by offset direction class.
pub fn isotropy_report(field: &FieldSample, ia: Interval, ib: Interval, r: f64) -> Result<IsotropyReport> {
    check_r(r)?;
    let offsets = offsets_at(field.dim, field.side, field.spacing, r);
    let est = pair_estimates(field, ia, ib, &offsets);
    let mut classes: Vec<DirectionEstimate> = Vec::new();
    let mut tagged: Vec<(DirectionClass, f64)> = offsets.iter().map(|y| DirectionClass::of(y)).zip(est).collect();
    tagged.sort_by_key(|t| t.0);
    for (class, e) in tagged {
        match classes.last_mut() {
            Some(last) if last.class == class => {
                last.estimate += e;
                last.n_offsets += 1;
            }
            _ => classes.push(DirectionEstimate { class, estimate: e, n_offsets: 1 }),
        }
    }
    for c in classes.iter_mut() {
        c.estimate /= c.n_offsets as f64;
    }
    if classes.len() < 2 {
        return Err(Error::validation(format!(
            "separation {r} has {} direction class(es); need at least 2",
            classes.len()
        )));
    }
    let (lo, hi) =
        classes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.estimate), hi.max(c.estimate)));
    Ok(IsotropyReport { r, classes, spread: hi - lo })
}
