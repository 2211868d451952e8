//! Finite-dimensional quantum-statistical toolkit.
//!
//! The working basis is the computational basis; macrostates are disjoint
//! blocks of basis indices. Matrices are serialized as nested arrays of
//! `[re, im]` pairs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::probcore::{shannon, DiscreteDistribution};
use crate::{Error, Result};

/// Largest Hilbert-space dimension the toolkit accepts.
pub const MAX_DIM: usize = 64;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-12;
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Largest imaginary part of a trace that is discarded as rounding.
pub const IMAG_TOL: f64 = 1e-10;
/// Largest off-diagonal Frobenius mass for a "diagonal" density operator.
pub const DIAGONAL_TOL: f64 = 1e-10;

type CMatrix = DMatrix<Complex64>;

fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::validation(format!("dimension {d} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

/// Unit-norm state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<Complex64>);

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dim(amplitudes.len())?;
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::validation("non-finite amplitude"));
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::validation(format!("state norm {norm} is not 1")));
        }
        Ok(Self(v))
    }

    /// Scales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::validation("cannot normalize a zero or non-finite vector"));
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        v[index] = Complex64::new(1.0, 0.0);
        Ok(Self(DVector::from_vec(v)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.dotc(&other.0)
    }
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::validation(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
    }
    check_dim(m.nrows())?;
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            let a = m[(i, j)];
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::validation("non-finite matrix entry"));
            }
            if (a - m[(j, i)].conj()).norm() > HERMITIAN_TOL {
                return Err(Error::validation(format!("matrix is not Hermitian at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Hermitian observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Observable(CMatrix);

impl Observable {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        check_hermitian(&matrix)?;
        Ok(Self(matrix))
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        check_dim(values.len())?;
        let d = DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(CMatrix::identity(dim, dim)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }
}

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct DensityOperator(CMatrix);

impl DensityOperator {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        check_hermitian(&matrix)?;
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::validation(format!("trace {tr} is not 1")));
        }
        let rho = Self(matrix);
        if let Some(min) = rho.eigenvalues().into_iter().reduce(f64::min) {
            if min < -POSITIVITY_TOL {
                return Err(Error::validation(format!("negative eigenvalue {min}")));
            }
        }
        Ok(rho)
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    /// Maximally mixed state `I / d`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self(CMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0)))
    }

    pub fn pure(state: &StateVector) -> Self {
        Self(&state.0 * state.0.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

/// Partition of the basis `{0..dim-1}` into labelled disjoint blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacrostatePartition {
    dim: usize,
    blocks: Vec<(String, Vec<usize>)>,
}

impl MacrostatePartition {
    pub fn new(dim: usize, blocks: Vec<(String, Vec<usize>)>) -> Result<Self> {
        check_dim(dim)?;
        let mut seen = vec![false; dim];
        for (label, idx) in &blocks {
            if blocks.iter().filter(|(l, _)| l == label).count() > 1 {
                return Err(Error::validation(format!("duplicate block label {label:?}")));
            }
            for &i in idx {
                if i >= dim {
                    return Err(Error::IndexOutOfRange { index: i, len: dim });
                }
                if seen[i] {
                    return Err(Error::validation(format!("basis index {i} appears in two blocks")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::validation(format!("basis index {i} belongs to no block")));
        }
        Ok(Self { dim, blocks })
    }

    /// Contiguous blocks of the given sizes, labelled by position.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .enumerate()
            .map(|(b, &n)| {
                let idx = (start..start + n).collect();
                start += n;
                (b.to_string(), idx)
            })
            .collect();
        Self::new(start, blocks)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().map(|(l, _)| l.as_str())
    }

    pub fn indices(&self, label: &str) -> Option<&[usize]> {
        self.blocks.iter().find(|(l, _)| l == label).map(|(_, i)| i.as_slice())
    }
}

/// `rho = sum_k p_k |k><k|` over an orthonormal family.
pub fn density_from_ensemble(probs: &DiscreteDistribution, states: &[StateVector]) -> Result<DensityOperator> {
    if probs.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: probs.len(), got: states.len() });
    }
    let dim = states[0].dim();
    for s in states {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: s.dim() });
        }
    }
    for (a, sa) in states.iter().enumerate() {
        for sb in &states[a + 1..] {
            let overlap = sa.inner(sb).norm();
            if overlap > ORTHONORMAL_TOL {
                return Err(Error::validation(format!("states are not orthogonal (overlap {overlap:e})")));
            }
        }
    }
    let mut rho = CMatrix::zeros(dim, dim);
    for (&p, s) in probs.probs().iter().zip(states) {
        rho += (&s.0 * s.0.adjoint()) * Complex64::new(p, 0.0);
    }
    DensityOperator::new(rho)
}

fn real_trace(m: CMatrix) -> Result<f64> {
    let tr = m.trace();
    if tr.im.abs() > IMAG_TOL {
        return Err(Error::Numerics(format!("trace has imaginary part {:e}", tr.im)));
    }
    Ok(tr.re)
}

/// Ensemble average `Tr(rho O)`.
pub fn expectation(rho: &DensityOperator, obs: &Observable) -> Result<f64> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: obs.dim() });
    }
    real_trace(&rho.0 * &obs.0)
}

/// Diagonal 0/1 projector onto the block's basis states.
pub fn projector(partition: &MacrostatePartition, block: &str) -> Result<Observable> {
    let idx = partition
        .indices(block)
        .ok_or_else(|| Error::Domain(format!("unknown block {block:?}")))?;
    let mut diag = vec![0.0; partition.dim];
    for &i in idx {
        diag[i] = 1.0;
    }
    Observable::diagonal(&diag)
}

/// Fraction `Tr(rho P_block)` of the ensemble in the macrostate, clamped to
/// `[0, 1]` after a tolerance check.
pub fn macro_fraction(rho: &DensityOperator, partition: &MacrostatePartition, block: &str) -> Result<f64> {
    let f = expectation(rho, &projector(partition, block)?)?;
    if !(-1e-12..=1.0 + 1e-12).contains(&f) {
        return Err(Error::Numerics(format!("macrostate fraction {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Fractions for every block, in partition order.
pub fn macro_fractions(rho: &DensityOperator, partition: &MacrostatePartition) -> Result<Vec<f64>> {
    partition.labels().map(|l| macro_fraction(rho, partition, l)).collect()
}

/// Entropy of a density operator that is diagonal in the working basis.
pub fn vn_entropy_diagonal(rho: &DensityOperator) -> Result<f64> {
    let n = rho.dim();
    let mut off = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off += rho.0[(i, j)].norm_sqr();
            }
        }
    }
    let off = off.sqrt();
    if off > DIAGONAL_TOL {
        return Err(Error::NotDiagonal(off));
    }
    let diag: Vec<f64> = (0..n).map(|i| rho.0[(i, i)].re.max(0.0)).collect();
    Ok(shannon(&diag))
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> Result<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::validation("matrix rows must all have length equal to the row count"));
    }
    Ok(CMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
}

/// Wire form of a complex matrix: rows of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixJson(pub Vec<Vec<[f64; 2]>>);

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        MatrixJson(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }
}

impl MatrixJson {
    fn into_matrix(self) -> Result<CMatrix> {
        matrix_from_rows(
            self.0
                .into_iter()
                .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
                .collect(),
        )
    }
}

impl TryFrom<MatrixJson> for Observable {
    type Error = Error;
    fn try_from(m: MatrixJson) -> Result<Self> {
        Observable::new(m.into_matrix()?)
    }
}

impl From<Observable> for MatrixJson {
    fn from(o: Observable) -> Self {
        MatrixJson::from(&o.0)
    }
}

impl TryFrom<MatrixJson> for DensityOperator {
    type Error = Error;
    fn try_from(m: MatrixJson) -> Result<Self> {
        DensityOperator::new(m.into_matrix()?)
    }
}

impl From<DensityOperator> for MatrixJson {
    fn from(r: DensityOperator) -> Self {
        MatrixJson::from(&r.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::entropy;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag_rho(v: &[f64]) -> DensityOperator {
        let d = DVector::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0)));
        DensityOperator::new(CMatrix::from_diagonal(&d)).unwrap()
    }

    fn rotated_pair(theta: f64, phase: f64) -> Vec<StateVector> {
        let (s, co) = theta.sin_cos();
        let e = Complex64::from_polar(1.0, phase);
        vec![
            StateVector::new(vec![c(co, 0.0), e * s]).unwrap(),
            StateVector::new(vec![c(-s, 0.0), e * co]).unwrap(),
        ]
    }

    #[test]
    fn density_from_ensemble_examples() {
        let s = StateVector::normalized(vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]).unwrap();
        let rho = density_from_ensemble(&DiscreteDistribution::point(1, 0).unwrap(), std::slice::from_ref(&s)).unwrap();
        let ev = rho.eigenvalues();
        assert_abs_diff_eq!(ev[2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[0], 0.0, epsilon = 1e-12);
        let sq = rho.matrix() * rho.matrix();
        assert!((sq - rho.matrix()).norm() < 1e-12);

        let basis = vec![StateVector::basis(2, 0).unwrap(), StateVector::basis(2, 1).unwrap()];
        let rho = density_from_ensemble(&DiscreteDistribution::uniform(2).unwrap(), &basis).unwrap();
        assert_eq!(rho, diag_rho(&[0.5, 0.5]));

        let p = DiscreteDistribution::new(vec![0.7, 0.3]).unwrap();
        let rho = density_from_ensemble(&p, &rotated_pair(0.4, 1.1)).unwrap();
        assert_abs_diff_eq!(rho.matrix().trace().re, 1.0, epsilon = 1e-12);
        let ev = rho.eigenvalues();
        assert_abs_diff_eq!(ev[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn non_orthonormal_states_rejected() {
        let a = StateVector::basis(2, 0).unwrap();
        let b = StateVector::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let err = density_from_ensemble(&DiscreteDistribution::uniform(2).unwrap(), &[a, b]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn expectation_examples() {
        let z = Observable::diagonal(&[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(expectation(&diag_rho(&[0.5, 0.5]), &z).unwrap(), 0.0, epsilon = 1e-15);
        let up = DensityOperator::pure(&StateVector::basis(2, 0).unwrap());
        assert_abs_diff_eq!(expectation(&up, &z).unwrap(), 1.0, epsilon = 1e-15);
        let o = Observable::diagonal(&[2.0, -1.0]).unwrap();
        assert_abs_diff_eq!(expectation(&diag_rho(&[0.7, 0.3]), &o).unwrap(), 1.1, epsilon = 1e-15);
        assert!(matches!(
            expectation(&diag_rho(&[0.7, 0.3]), &Observable::identity(3).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_operators_rejected() {
        assert!(Observable::from_rows(vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(2.0, 0.0), c(0.0, 0.0)]]).is_err());
        assert!(Observable::from_rows(vec![vec![c(0.0, 1.0)]]).is_err());
        assert!(DensityOperator::from_rows(vec![vec![c(0.6, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.6, 0.0)]]).is_err());
        assert!(DensityOperator::from_rows(vec![vec![c(1.2, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-0.2, 0.0)]]).is_err());
        assert!(Observable::identity(MAX_DIM + 1).is_err());
    }

    #[test]
    fn projector_examples() {
        let part = MacrostatePartition::new(3, vec![("beta".into(), vec![0, 1]), ("gamma".into(), vec![2])]).unwrap();
        let pb = projector(&part, "beta").unwrap();
        assert_eq!(pb, Observable::diagonal(&[1.0, 1.0, 0.0]).unwrap());
        assert_eq!(pb.matrix() * pb.matrix(), *pb.matrix());
        let sum = pb.matrix() + projector(&part, "gamma").unwrap().matrix();
        assert_eq!(sum, CMatrix::identity(3, 3));
        assert!(matches!(projector(&part, "delta"), Err(Error::Domain(_))));
    }

    #[test]
    fn partition_validation() {
        assert!(MacrostatePartition::new(3, vec![("a".into(), vec![0, 1])]).is_err());
        assert!(MacrostatePartition::new(2, vec![("a".into(), vec![0, 1]), ("b".into(), vec![1])]).is_err());
        assert!(MacrostatePartition::new(2, vec![("a".into(), vec![0, 5])]).is_err());
        assert!(MacrostatePartition::new(2, vec![("a".into(), vec![0]), ("a".into(), vec![1])]).is_err());
    }

    #[test]
    fn macro_fraction_examples() {
        let part = MacrostatePartition::contiguous(&[2, 2]).unwrap();
        let rho = diag_rho(&[0.4, 0.3, 0.2, 0.1]);
        assert_abs_diff_eq!(macro_fraction(&rho, &part, "0").unwrap(), 0.7, epsilon = 1e-15);

        let psi = StateVector::normalized(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 2.0)]).unwrap();
        let f = macro_fractions(&DensityOperator::pure(&psi), &part).unwrap();
        assert_abs_diff_eq!(f[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 1.0, epsilon = 1e-15);

        let part = MacrostatePartition::contiguous(&[2, 1]).unwrap();
        let f = macro_fractions(&DensityOperator::maximally_mixed(3).unwrap(), &part).unwrap();
        assert_abs_diff_eq!(f[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn vn_entropy_examples() {
        assert_abs_diff_eq!(vn_entropy_diagonal(&diag_rho(&[0.25; 4])).unwrap(), 4f64.ln(), epsilon = 1e-15);
        assert_eq!(vn_entropy_diagonal(&DensityOperator::pure(&StateVector::basis(3, 1).unwrap())).unwrap(), 0.0);
        let v = [0.5, 0.3, 0.2];
        let s = vn_entropy_diagonal(&diag_rho(&v)).unwrap();
        assert_abs_diff_eq!(s, 1.0296530140645737, epsilon = 1e-15);
        assert_eq!(s, entropy(&DiscreteDistribution::new(v.to_vec()).unwrap()));

        let plus = StateVector::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(vn_entropy_diagonal(&DensityOperator::pure(&plus)), Err(Error::NotDiagonal(_))));
    }

    #[test]
    fn json_round_trip() {
        let rho = density_from_ensemble(&DiscreteDistribution::new(vec![0.7, 0.3]).unwrap(), &rotated_pair(0.3, 0.2)).unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        assert!(text.starts_with("[[["));
        let back: DensityOperator = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rho);
        assert!(serde_json::from_str::<Observable>("[[[0,0],[1,0]],[[2,0],[0,0]]]").is_err());
    }

    fn random_rho(dim: usize, weights: &[f64], angles: &[f64]) -> (DiscreteDistribution, Vec<StateVector>) {
        // orthonormal family from a sequence of Givens rotations of the basis
        let mut u = CMatrix::identity(dim, dim);
        for (n, &a) in angles.iter().enumerate() {
            let i = n % dim;
            let j = (n + 1) % dim;
            if i == j {
                continue;
            }
            let mut g = CMatrix::identity(dim, dim);
            let (s, co) = a.sin_cos();
            let e = Complex64::from_polar(1.0, 0.7 * a);
            g[(i, i)] = c(co, 0.0);
            g[(j, j)] = c(co, 0.0);
            g[(i, j)] = -e.conj() * s;
            g[(j, i)] = e * s;
            u = g * u;
        }
        let states = (0..dim).map(|k| StateVector::new(u.column(k).iter().copied().collect()).unwrap()).collect();
        (DiscreteDistribution::from_weights(weights[..dim].to_vec()).unwrap(), states)
    }

    proptest! {
        #[test]
        fn constructed_operators_are_valid(
            dim in 1usize..8,
            weights in prop::collection::vec(0.01..1.0f64, 8),
            angles in prop::collection::vec(-3.0..3.0f64, 0..12),
            diag in prop::collection::vec(-2.0..2.0f64, 8),
            a in -2.0..2.0f64,
            b in -2.0..2.0f64,
        ) {
            let (p, states) = random_rho(dim, &weights, &angles);
            let rho = density_from_ensemble(&p, &states).unwrap();
            prop_assert!((expectation(&rho, &Observable::identity(dim).unwrap()).unwrap() - 1.0).abs() < 1e-12);
            let ev = rho.eigenvalues();
            prop_assert!(ev[0] > -POSITIVITY_TOL);
            let o1 = Observable::diagonal(&diag[..dim]).unwrap();
            let o2 = Observable::new(rho.matrix().clone()).unwrap();
            let comb = Observable::new(o1.matrix() * c(a, 0.0) + o2.matrix() * c(b, 0.0)).unwrap();
            let lhs = expectation(&rho, &comb).unwrap();
            let rhs = a * expectation(&rho, &o1).unwrap() + b * expectation(&rho, &o2).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let part = MacrostatePartition::contiguous(&[dim.div_ceil(2), dim / 2]).unwrap();
            let total: f64 = macro_fractions(&rho, &part).unwrap().iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn diagonal_entropy_matches_shannon(weights in prop::collection::vec(0.0..1.0f64, 1..16)) {
            prop_assume!(weights.iter().sum::<f64>() > 0.0);
            let p = DiscreteDistribution::from_weights(weights).unwrap();
            let basis: Vec<_> = (0..p.len()).map(|k| StateVector::basis(p.len(), k).unwrap()).collect();
            let rho = density_from_ensemble(&p, &basis).unwrap();
            prop_assert!((vn_entropy_diagonal(&rho).unwrap() - entropy(&p)).abs() < 1e-14);
        }
    }
}
