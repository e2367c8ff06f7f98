//! Dense operators tagged with their tensor-factor dimensions, plus the
//! Kronecker/partial-trace bookkeeping that the rest of the crate builds on.
//!
//! Conventions used throughout: factor 0 is the leftmost (slowest) index, the
//! qutrit always comes first in composite systems, and the cavity mode (when
//! present) is the last factor. Qutrit levels are ordered g, e, f = 0, 1, 2.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("matrix is {rows}x{cols}, expected square of dimension {expected}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("operand {index} is not square ({rows}x{cols})")]
    NonSquareOperand {
        index: usize,
        rows: usize,
        cols: usize,
    },
    #[error("factor index {index} out of range for {nfactors} tensor factors")]
    InvalidFactor { index: usize, nfactors: usize },
    #[error("operator dimensions {left:?} and {right:?} are incompatible")]
    DimMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("density matrix trace {trace} deviates from 1 beyond tolerance {tol}")]
    TraceDefect { trace: f64, tol: f64 },
    #[error("density matrix trace has imaginary part {imag:e}")]
    ComplexTrace { imag: f64 },
    #[error("matrix deviates from Hermiticity by {defect:e}")]
    NotHermitian { defect: f64 },
    #[error("density matrix has eigenvalue {eig:e} below -{tol:e}")]
    NegativeEigenvalue { eig: f64, tol: f64 },
}

/// Dense complex square matrix together with the ordered list of
/// tensor-factor dimensions it acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dims: Vec<usize>,
    entries: Array2<C64>,
}

impl Operator {
    pub fn new(dims: Vec<usize>, entries: Array2<C64>) -> Result<Self, OperatorError> {
        let d: usize = dims.iter().product();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(OperatorError::ShapeMismatch {
                rows: entries.nrows(),
                cols: entries.ncols(),
                expected: d,
            });
        }
        Ok(Self { dims, entries })
    }

    /// Single-factor operator; the factor dimension is the matrix dimension.
    pub fn from_matrix(entries: Array2<C64>) -> Result<Self, OperatorError> {
        let d = entries.nrows();
        Self::new(vec![d], entries)
    }

    pub fn identity(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            entries: Array2::eye(d),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let d: usize = dims.iter().product();
        Self {
            dims: dims.to_vec(),
            entries: Array2::zeros((d, d)),
        }
    }

    /// |i><j| on the given factor dimensions.
    pub fn ketbra(dims: &[usize], i: usize, j: usize) -> Self {
        let mut op = Self::zeros(dims);
        op.entries[[i, j]] = C64::new(1.0, 0.0);
        op
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut Array2<C64> {
        &mut self.entries
    }

    pub fn into_entries(self) -> Array2<C64> {
        self.entries
    }

    /// Reinterpret the same matrix with a different factor split (product of
    /// dims must be unchanged).
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self, OperatorError> {
        let d: usize = dims.iter().product();
        if d != self.dim() {
            return Err(OperatorError::ShapeMismatch {
                rows: self.dim(),
                cols: self.dim(),
                expected: d,
            });
        }
        self.dims = dims;
        Ok(self)
    }

    pub fn dagger(&self) -> Self {
        Self {
            dims: self.dims.clone(),
            entries: linalg::dagger(&self.entries),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, OperatorError> {
        if self.dim() != other.dim() {
            return Err(OperatorError::DimMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        Ok(Self {
            dims: self.dims.clone(),
            entries: self.entries.dot(&other.entries),
        })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dims: self.dims.clone(),
            entries: self.entries.mapv(|z| z * factor),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, OperatorError> {
        if self.dim() != other.dim() {
            return Err(OperatorError::DimMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        Ok(Self {
            dims: self.dims.clone(),
            entries: &self.entries + &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OperatorError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn trace(&self) -> C64 {
        self.entries.diag().iter().sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.entries)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= HERMITICITY_TOL * self.norm_scale()
    }

    fn norm_scale(&self) -> f64 {
        linalg::max_abs(&self.entries).max(1.0)
    }

    /// Apply to a state vector.
    pub fn apply(&self, psi: &Array1<C64>) -> Array1<C64> {
        self.entries.dot(psi)
    }

    /// Expectation value <psi|A|psi>.
    pub fn expectation(&self, psi: &Array1<C64>) -> C64 {
        let a_psi = self.apply(psi);
        psi.iter()
            .zip(a_psi.iter())
            .map(|(p, ap)| p.conj() * ap)
            .sum()
    }
}

/// Kronecker product of operators in the given order; the leftmost operand
/// varies slowest in the combined index.
pub fn tensor(ops: &[&Operator]) -> Result<Operator, OperatorError> {
    for (index, op) in ops.iter().enumerate() {
        if op.entries.nrows() != op.entries.ncols() {
            return Err(OperatorError::NonSquareOperand {
                index,
                rows: op.entries.nrows(),
                cols: op.entries.ncols(),
            });
        }
    }
    let mut dims = Vec::new();
    let mut entries = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
    for op in ops {
        dims.extend_from_slice(&op.dims);
        entries = linalg::kron(&entries, &op.entries);
    }
    Operator::new(dims, entries)
}

/// Row-major strides for a mixed-radix index over `dims`.
fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Partial trace over the factors *not* listed in `keep`; kept factors stay
/// in their original relative order.
pub fn partial_trace(rho: &Operator, keep: &[usize]) -> Result<Operator, OperatorError> {
    let nfactors = rho.dims.len();
    for &k in keep {
        if k >= nfactors {
            return Err(OperatorError::InvalidFactor {
                index: k,
                nfactors,
            });
        }
    }
    let mut keep_sorted: Vec<usize> = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();

    let traced: Vec<usize> = (0..nfactors).filter(|i| !keep_sorted.contains(i)).collect();
    let keep_dims: Vec<usize> = keep_sorted.iter().map(|&i| rho.dims[i]).collect();
    let trace_dims: Vec<usize> = traced.iter().map(|&i| rho.dims[i]).collect();
    let dk: usize = keep_dims.iter().product();
    let dt: usize = trace_dims.iter().product();

    let full_strides = strides(&rho.dims);
    let keep_strides = strides(&keep_dims);
    let trace_strides = strides(&trace_dims);

    // Map a reduced index back to its contribution in the full index.
    let expand = |factors: &[usize], local_strides: &[usize], idx: usize| -> usize {
        let mut full = 0;
        for (pos, &factor) in factors.iter().enumerate() {
            let digit = (idx / local_strides[pos]) % rho.dims[factor];
            full += digit * full_strides[factor];
        }
        full
    };

    let mut out = Array2::zeros((dk, dk));
    for i in 0..dk {
        let fi = expand(&keep_sorted, &keep_strides, i);
        for j in 0..dk {
            let fj = expand(&keep_sorted, &keep_strides, j);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                let ft = expand(&traced, &trace_strides, t);
                acc += rho.entries[[fi + ft, fj + ft]];
            }
            out[[i, j]] = acc;
        }
    }
    Operator::new(keep_dims, out)
}

/// Density matrix: an operator with unit-trace/Hermiticity/positivity
/// contracts. `tolerance` is the slack allowed on the positivity check.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: Operator,
    tolerance: f64,
}

impl DensityMatrix {
    /// Wrap and validate trace and Hermiticity (cheap checks). Positivity is
    /// checked separately via [`DensityMatrix::validate_positivity`] because
    /// it costs a full eigendecomposition.
    pub fn new(op: Operator, tolerance: f64) -> Result<Self, OperatorError> {
        let tr = op.trace();
        if tr.im.abs() > 1e-12 * op.dim() as f64 {
            return Err(OperatorError::ComplexTrace { imag: tr.im });
        }
        if (tr.re - 1.0).abs() > TRACE_TOL.max(tolerance) {
            return Err(OperatorError::TraceDefect {
                trace: tr.re,
                tol: TRACE_TOL.max(tolerance),
            });
        }
        let defect = op.hermiticity_defect();
        if defect > HERMITICITY_TOL * op.dim() as f64 {
            return Err(OperatorError::NotHermitian { defect });
        }
        Ok(Self { op, tolerance })
    }

    pub fn from_operator(op: Operator) -> Result<Self, OperatorError> {
        Self::new(op, POSITIVITY_TOL)
    }

    /// Pure state |psi><psi| over the given factor dimensions.
    pub fn pure(dims: &[usize], psi: &Array1<C64>) -> Result<Self, OperatorError> {
        let d: usize = dims.iter().product();
        assert_eq!(psi.len(), d, "state vector length does not match dims");
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let mut rho = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                rho[[i, j]] = psi[i] * psi[j].conj() / norm2;
            }
        }
        Self::from_operator(Operator::new(dims.to_vec(), rho)?)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn entries(&self) -> &Array2<C64> {
        self.op.entries()
    }

    pub fn dims(&self) -> &[usize] {
        self.op.dims()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    pub fn trace_defect(&self) -> f64 {
        (self.op.trace().re - 1.0).abs()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let vals = linalg::eigvalsh(self.op.entries());
        vals[0]
    }

    pub fn validate_positivity(&self) -> Result<(), OperatorError> {
        let min = self.min_eigenvalue();
        if min < -self.tolerance {
            return Err(OperatorError::NegativeEigenvalue {
                eig: min,
                tol: self.tolerance,
            });
        }
        Ok(())
    }

    /// Fidelity <psi|rho|psi> against a pure target state.
    pub fn fidelity_pure(&self, psi: &Array1<C64>) -> f64 {
        self.op.expectation(psi).re
    }

    /// Trace distance to another state, (1/2)||rho - sigma||_1.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let diff = self.op.entries() - other.op.entries();
        let vals = linalg::eigvalsh(&diff);
        0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qutrit_ketbra(i: usize, j: usize) -> Operator {
        Operator::ketbra(&[3], i, j)
    }

    #[test]
    fn tensor_of_identities() {
        let i2 = Operator::identity(&[2]);
        let i3 = Operator::identity(&[3]);
        let t = tensor(&[&i2, &i3]).unwrap();
        assert_eq!(t.dims(), &[2, 3]);
        assert!(linalg::max_abs_diff(t.entries(), &Array2::eye(6)) == 0.0);
    }

    #[test]
    fn tensor_basis_bookkeeping() {
        // |e><f| on the qutrit (e=1, f=2) tensored with the qubit identity has
        // exactly two unit entries.
        let ef = qutrit_ketbra(1, 2);
        let i2 = Operator::identity(&[2]);
        let t = tensor(&[&ef, &i2]).unwrap();
        let ones: Vec<(usize, usize)> = t
            .entries()
            .indexed_iter()
            .filter(|(_, z)| z.norm() > 0.0)
            .map(|((i, j), _)| (i, j))
            .collect();
        assert_eq!(ones, vec![(2, 4), (3, 5)]);
        for (i, j) in ones {
            assert_eq!(t.entries()[[i, j]], c(1.0, 0.0));
        }
    }

    #[test]
    fn tensor_index_formula_oracle() {
        // (A ⊗ B)_{(i·3+k),(j·3+l)} = A_{ij} B_{kl} for 2x2 ⊗ 3x3, checked by
        // a brute-force index loop on fixed pseudo-random entries.
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = Array2::zeros((2, 2));
        let mut b = Array2::zeros((3, 3));
        for z in a.iter_mut().chain(b.iter_mut()) {
            *z = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let oa = Operator::from_matrix(a.clone()).unwrap();
        let ob = Operator::from_matrix(b.clone()).unwrap();
        let t = tensor(&[&oa, &ob]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    for l in 0..3 {
                        let got = t.entries()[[i * 3 + k, j * 3 + l]];
                        let want = a[[i, j]] * b[[k, l]];
                        assert!((got - want).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_rejects_non_square() {
        let bad = Operator {
            dims: vec![2],
            entries: Array2::zeros((2, 3)),
        };
        let i2 = Operator::identity(&[2]);
        assert!(tensor(&[&bad, &i2]).is_err());
    }

    #[test]
    fn partial_trace_product_state() {
        let rho_a = DensityMatrix::pure(&[2], &array![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let rho_b =
            DensityMatrix::pure(&[3], &array![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        let joint = tensor(&[rho_a.operator(), rho_b.operator()]).unwrap();
        let reduced = partial_trace(&joint, &[0]).unwrap();
        assert!(linalg::max_abs_diff(reduced.entries(), rho_a.entries()) < 1e-14);
    }

    #[test]
    fn partial_trace_bell_state() {
        let psi = array![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let rho = DensityMatrix::pure(&[2, 2], &psi).unwrap();
        for keep in [0usize, 1] {
            let reduced = partial_trace(rho.operator(), &[keep]).unwrap();
            let half = Array2::eye(2).mapv(|z: C64| z * c(0.5, 0.0));
            assert!(linalg::max_abs_diff(reduced.entries(), &half) < 1e-14);
        }
    }

    #[test]
    fn partial_trace_against_double_loop_sum() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 24; // 6 ⊗ 4
        let mut m: Array2<C64> = Array2::zeros((d, d));
        for z in m.iter_mut() {
            *z = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        let mut h = (&m + &linalg::dagger(&m)).mapv(|z| z * c(0.5, 0.0));
        // Shift the diagonal so the trace is comfortably away from zero,
        // then normalize; the partial-trace identity is linear anyway.
        for i in 0..d {
            h[[i, i]] += c(1.0, 0.0);
        }
        let tr: C64 = h.diag().iter().sum();
        let rho = h.mapv(|z| z / tr);
        let op = Operator::new(vec![6, 4], rho.clone()).unwrap();

        let reduced = partial_trace(&op, &[0]).unwrap();
        let mut oracle = Array2::zeros((6, 6));
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = c(0.0, 0.0);
                for t in 0..4 {
                    acc += rho[[i * 4 + t, j * 4 + t]];
                }
                oracle[[i, j]] = acc;
            }
        }
        assert!(linalg::max_abs_diff(reduced.entries(), &oracle) < 1e-13);

        let reduced_b = partial_trace(&op, &[1]).unwrap();
        let mut oracle_b = Array2::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = c(0.0, 0.0);
                for t in 0..6 {
                    acc += rho[[t * 4 + i, t * 4 + j]];
                }
                oracle_b[[i, j]] = acc;
            }
        }
        assert!(linalg::max_abs_diff(reduced_b.entries(), &oracle_b) < 1e-13);

        // Trace preserved.
        let tr_red: C64 = reduced.entries().diag().iter().sum();
        assert!((tr_red - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_invalid_index() {
        let op = Operator::identity(&[2, 2]);
        assert!(partial_trace(&op, &[2]).is_err());
    }

    #[test]
    fn density_matrix_rejects_bad_trace() {
        let op = Operator::from_matrix(Array2::eye(2)).unwrap();
        assert!(DensityMatrix::from_operator(op).is_err());
    }
}
