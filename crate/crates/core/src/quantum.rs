//! Dense finite-dimensional quantum states over tensor products of qubits and
//! qutrits.
//!
//! Factors are ordered left to right and flattened row-major, so the first
//! factor is the most significant digit of a basis index. The largest objects
//! handled here are a few thousand amplitudes (pure chain states) and 144×144
//! density operators, so everything is stored densely.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Normalization tolerance for kets.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues above `-EIGEN_FLOOR` count as non-negative.
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Unit-trace tolerance for density operators.
pub const TRACE_TOL: f64 = 1e-10;
/// Outcome probabilities below this are reported as null outcomes.
pub const NULL_OUTCOME: f64 = 1e-14;
/// Slack on |r| ≤ 1 for Bloch vectors.
pub const BLOCH_TOL: f64 = 1e-9;

/// All numeric tolerances in one overridable record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub normalization: f64,
    pub hermitian: f64,
    pub eigen_floor: f64,
    pub trace: f64,
    pub null_outcome: f64,
    pub bloch: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            normalization: NORMALIZATION_TOL,
            hermitian: HERMITIAN_TOL,
            eigen_floor: EIGEN_FLOOR,
            trace: TRACE_TOL,
            null_outcome: NULL_OUTCOME,
            bloch: BLOCH_TOL,
        }
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d != 2 && d != 3) {
        return Err(Error::InvalidDims(dims.to_vec()));
    }
    Ok(())
}

fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Linear map acting on a contiguous run of factors.
///
/// The run `first..first + input_dims.len()` is replaced by `output_dims`,
/// which may be empty (the map is then a bra that contracts the factors away).
#[derive(Clone, Debug)]
pub struct LocalOperator {
    pub first: usize,
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
    pub matrix: CMatrix,
}

impl LocalOperator {
    pub fn new(
        first: usize,
        input_dims: Vec<usize>,
        output_dims: Vec<usize>,
        matrix: CMatrix,
    ) -> Result<Self> {
        if matrix.nrows() != product(&output_dims) {
            return Err(Error::DimensionMismatch {
                expected: product(&output_dims),
                found: matrix.nrows(),
            });
        }
        if matrix.ncols() != product(&input_dims) {
            return Err(Error::DimensionMismatch {
                expected: product(&input_dims),
                found: matrix.ncols(),
            });
        }
        Ok(Self {
            first,
            input_dims,
            output_dims,
            matrix,
        })
    }

    /// Square operator on a single factor.
    pub fn on_factor(first: usize, matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        Self::new(first, vec![d], vec![d], matrix)
    }

    /// Contracts the factors spanned by `ket` with ⟨ket|.
    pub fn bra(first: usize, ket: &Ket) -> Self {
        let row = ket.amps.adjoint();
        Self {
            first,
            input_dims: ket.dims.clone(),
            output_dims: Vec::new(),
            matrix: DMatrix::from_row_slice(1, row.len(), row.as_slice()),
        }
    }

    /// |ket⟩⟨ket| on the factors spanned by `ket`.
    pub fn projector(first: usize, ket: &Ket) -> Self {
        Self {
            first,
            input_dims: ket.dims.clone(),
            output_dims: ket.dims.clone(),
            matrix: &ket.amps * ket.amps.adjoint(),
        }
    }

    fn output_state_dims(&self, dims: &[usize]) -> Result<Vec<usize>> {
        let end = self.first + self.input_dims.len();
        if end > dims.len() {
            return Err(Error::FactorOutOfRange {
                index: end.saturating_sub(1),
                len: dims.len(),
            });
        }
        if dims[self.first..end] != self.input_dims[..] {
            return Err(Error::FactorMismatch {
                expected: self.input_dims.clone(),
                found: dims[self.first..end].to_vec(),
            });
        }
        let mut out = dims[..self.first].to_vec();
        out.extend_from_slice(&self.output_dims);
        out.extend_from_slice(&dims[end..]);
        Ok(out)
    }

    fn apply_vec(&self, dims: &[usize], v: &[C64]) -> Vec<C64> {
        let end = self.first + self.input_dims.len();
        let left = product(&dims[..self.first]);
        let right = product(&dims[end..]);
        let mid_in = self.matrix.ncols();
        let mid_out = self.matrix.nrows();
        let mut out = vec![C64::new(0.0, 0.0); left * mid_out * right];
        for l in 0..left {
            let src = &v[l * mid_in * right..(l + 1) * mid_in * right];
            let dst = &mut out[l * mid_out * right..(l + 1) * mid_out * right];
            for o in 0..mid_out {
                for m in 0..mid_in {
                    let coeff = self.matrix[(o, m)];
                    if coeff == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let s = &src[m * right..(m + 1) * right];
                    let d = &mut dst[o * right..(o + 1) * right];
                    for (di, si) in d.iter_mut().zip(s) {
                        *di += coeff * si;
                    }
                }
            }
        }
        out
    }
}

/// A state that can be acted on by local maps and renormalized.
pub trait QuantumState: Clone + Sized {
    fn dims(&self) -> &[usize];
    fn apply_local(&self, op: &LocalOperator) -> Result<Self>;
    /// Squared norm for kets, trace for density operators.
    fn weight(&self) -> f64;
    fn scaled(&self, factor: f64) -> Self;
}

/// Result of a post-selected projection.
#[derive(Clone, Debug)]
pub struct Projected<S> {
    pub state: S,
    pub probability: f64,
}

/// Applies `op` and renormalizes. The probability is the weight of the
/// mapped state relative to the input weight.
pub fn project<S: QuantumState>(state: &S, op: &LocalOperator) -> Result<Projected<S>> {
    project_with(state, op, &Tolerances::default())
}

pub fn project_with<S: QuantumState>(
    state: &S,
    op: &LocalOperator,
    tol: &Tolerances,
) -> Result<Projected<S>> {
    let mapped = state.apply_local(op)?;
    let probability = mapped.weight() / state.weight();
    if !(probability >= tol.null_outcome) {
        return Err(Error::NullOutcome { probability });
    }
    Ok(Projected {
        state: mapped.scaled(1.0 / probability),
        probability,
    })
}

/// Pure state over a tensor product of qubits and qutrits.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    dims: Vec<usize>,
    amps: CVector,
}

impl Ket {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        check_dims(&dims)?;
        if amps.len() != product(&dims) {
            return Err(Error::DimensionMismatch {
                expected: product(&dims),
                found: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            dims,
            amps: CVector::from_vec(amps),
        })
    }

    pub fn from_real(dims: Vec<usize>, amps: &[f64]) -> Result<Self> {
        Self::new(dims, amps.iter().map(|&a| c(a, 0.0)).collect())
    }

    /// Computational basis state with the given multi-index.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        check_dims(&dims)?;
        if digits.len() != dims.len() || digits.iter().zip(&dims).any(|(&k, &d)| k >= d) {
            return Err(Error::WrongShape {
                expected: "basis index within dims",
                found: digits.to_vec(),
            });
        }
        let mut amps = vec![c(0.0, 0.0); product(&dims)];
        amps[flat_index(&dims, digits)] = c(1.0, 0.0);
        Ok(Self {
            dims,
            amps: CVector::from_vec(amps),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, digits: &[usize]) -> C64 {
        self.amps[flat_index(&self.dims, digits)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORMALIZATION_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n < NULL_OUTCOME {
            return Err(Error::NullOutcome { probability: n });
        }
        Ok(self.scaled(1.0 / n))
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::FactorMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in self.amps.iter() {
            for b in other.amps.iter() {
                amps.push(a * b);
            }
        }
        Ket {
            dims,
            amps: CVector::from_vec(amps),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            dims: self.dims.clone(),
            matrix: &self.amps * self.amps.adjoint(),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Ket {
        Ket {
            dims: self.dims.clone(),
            amps: &self.amps * factor,
        }
    }

    /// Multiplies by a global phase so that the amplitude at `digits` is real
    /// and positive. Falls back to the first amplitude of non-negligible
    /// modulus when that entry vanishes.
    pub fn with_phase_fixed_at(&self, digits: &[usize]) -> Ket {
        let mut pivot = self.amps[flat_index(&self.dims, digits)];
        if pivot.norm() < 1e-12 {
            match self.amps.iter().find(|a| a.norm() > 1e-12) {
                Some(a) => pivot = *a,
                None => return self.clone(),
            }
        }
        self.scale_complex(pivot.conj() / pivot.norm())
    }

    /// Reduced density operator on the factors in `keep` (sorted, unique).
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOperator> {
        let layout = TraceLayout::new(&self.dims, keep)?;
        let dk = layout.kept_dim;
        let mut m = CMatrix::zeros(dk, dk);
        for block in layout.blocks.iter() {
            for a in 0..dk {
                let va = self.amps[block[a]];
                if va == c(0.0, 0.0) {
                    continue;
                }
                for b in 0..dk {
                    m[(a, b)] += va * self.amps[block[b]].conj();
                }
            }
        }
        Ok(DensityOperator {
            dims: layout.kept_dims,
            matrix: m,
        })
    }

    /// Fidelity |⟨self|other⟩|² for normalized kets.
    pub fn overlap_sqr(&self, other: &Ket) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

impl QuantumState for Ket {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn apply_local(&self, op: &LocalOperator) -> Result<Self> {
        let dims = op.output_state_dims(&self.dims)?;
        let amps = op.apply_vec(&self.dims, self.amps.as_slice());
        if dims.is_empty() {
            // Fully contracted; keep the scalar as a trivial qubit-free state
            // is not representable, so report it as a shape error.
            return Err(Error::WrongShape {
                expected: "at least one remaining factor",
                found: dims,
            });
        }
        Ok(Ket {
            dims,
            amps: CVector::from_vec(amps),
        })
    }

    fn weight(&self) -> f64 {
        self.norm_sqr()
    }

    fn scaled(&self, factor: f64) -> Self {
        Ket {
            dims: self.dims.clone(),
            amps: &self.amps * c(factor.sqrt(), 0.0),
        }
    }
}

pub(crate) fn flat_index(dims: &[usize], digits: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&k, &d)| acc * d + k)
}

pub(crate) fn digits_of(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for (slot, &d) in digits.iter_mut().zip(dims).rev() {
        *slot = index % d;
        index /= d;
    }
    digits
}

/// Index bookkeeping for partial traces: `blocks[t][a]` is the flat index of
/// kept-index `a` combined with traced-index `t`.
struct TraceLayout {
    kept_dims: Vec<usize>,
    kept_dim: usize,
    blocks: Vec<Vec<usize>>,
}

impl TraceLayout {
    fn new(dims: &[usize], keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        for (i, &k) in keep.iter().enumerate() {
            if k >= dims.len() {
                return Err(Error::FactorOutOfRange {
                    index: k,
                    len: dims.len(),
                });
            }
            if i > 0 && keep[i - 1] >= k {
                return Err(Error::WrongShape {
                    expected: "sorted unique keep set",
                    found: keep.to_vec(),
                });
            }
        }
        let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
        let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
        let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
        let kept_dim = product(&kept_dims);
        let traced_dim = product(&traced_dims);
        let mut blocks = vec![vec![0; kept_dim]; traced_dim];
        let mut full = vec![0; dims.len()];
        for (t, block) in blocks.iter_mut().enumerate() {
            let td = digits_of(&traced_dims, t);
            for (&pos, &v) in traced.iter().zip(&td) {
                full[pos] = v;
            }
            for (a, slot) in block.iter_mut().enumerate() {
                let kd = digits_of(&kept_dims, a);
                for (&pos, &v) in keep.iter().zip(&kd) {
                    full[pos] = v;
                }
                *slot = flat_index(dims, &full);
            }
        }
        Ok(Self {
            kept_dims,
            kept_dim,
            blocks,
        })
    }
}

/// Hermitian eigen-decomposition with eigenvalues in ascending order.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Square root of a positive semidefinite matrix; eigenvalues are clipped at
/// zero first.
pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    map_psd(m, f64::sqrt)
}

/// Applies `f` to the (clipped) spectrum of a Hermitian matrix.
pub fn map_psd(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, j)] * f(values[j].max(0.0))
    });
    scaled * vectors.adjoint()
}

/// Density operator over a tensor product of qubits and qutrits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    dims: Vec<usize>,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Wraps a matrix without checking positivity or trace; see [`validate`].
    ///
    /// [`validate`]: DensityOperator::validate
    pub fn from_matrix(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        check_dims(&dims)?;
        let d = product(&dims);
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        if matrix
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self { dims, matrix })
    }

    /// Checked constructor: Hermitian, positive semidefinite, unit trace.
    pub fn new(dims: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix(dims, matrix)?;
        rho.validate(&Tolerances::default())?;
        Ok(rho)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims)?;
        let d = product(&dims);
        Ok(Self {
            dims,
            matrix: CMatrix::identity(d, d) * c(1.0 / d as f64, 0.0),
        })
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let herm_err = (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm_err > tol.hermitian {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (max deviation {herm_err:e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > tol.trace {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let min = self.eigenvalues()[0];
        if min < -tol.eigen_floor {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn normalized(&self) -> Result<Self> {
        let t = self.trace();
        if t < NULL_OUTCOME {
            return Err(Error::NullOutcome { probability: t });
        }
        Ok(self.scaled(1.0 / t))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        DensityOperator {
            dims,
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// Tr(ρ A) for an operator on the full space.
    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (&self.matrix * op).trace()
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn expectation_ket(&self, ket: &Ket) -> Result<f64> {
        if ket.dims != self.dims {
            return Err(Error::FactorMismatch {
                expected: self.dims.clone(),
                found: ket.dims.clone(),
            });
        }
        Ok(ket.amps.dotc(&(&self.matrix * &ket.amps)).re)
    }

    /// U ρ U†.
    pub fn conjugated(&self, unitary: &CMatrix) -> DensityOperator {
        DensityOperator {
            dims: self.dims.clone(),
            matrix: unitary * &self.matrix * unitary.adjoint(),
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        let layout = TraceLayout::new(&self.dims, keep)?;
        let dk = layout.kept_dim;
        let mut m = CMatrix::zeros(dk, dk);
        for block in layout.blocks.iter() {
            for a in 0..dk {
                for b in 0..dk {
                    m[(a, b)] += self.matrix[(block[a], block[b])];
                }
            }
        }
        Ok(DensityOperator {
            dims: layout.kept_dims,
            matrix: m,
        })
    }

    /// Sum of Kraus terms Σ K ρ K†.
    pub fn apply_kraus(&self, kraus: &[LocalOperator]) -> Result<DensityOperator> {
        let mut iter = kraus.iter();
        let first = iter.next().ok_or(Error::WrongShape {
            expected: "non-empty Kraus set",
            found: vec![],
        })?;
        let mut acc = self.apply_local(first)?;
        for k in iter {
            let term = self.apply_local(k)?;
            if term.dims != acc.dims {
                return Err(Error::FactorMismatch {
                    expected: acc.dims.clone(),
                    found: term.dims,
                });
            }
            acc.matrix += term.matrix;
        }
        Ok(acc)
    }

    /// Jozsa fidelity (Tr√(√σ ρ √σ))².
    pub fn fidelity(&self, other: &DensityOperator) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::FactorMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        let root = sqrt_psd(&other.matrix);
        let inner = &root * &self.matrix * &root;
        let (values, _) = hermitian_eigen(&inner);
        let s: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
        Ok((s * s).clamp(0.0, 1.0))
    }

    /// ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &DensityOperator) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::FactorMismatch {
                expected: self.dims.clone(),
                found: other.dims.clone(),
            });
        }
        let (values, _) = hermitian_eigen(&(&self.matrix - &other.matrix));
        Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn bloch_vector(&self) -> Result<BlochVector> {
        if self.dims != [2] {
            return Err(Error::WrongShape {
                expected: "single-qubit",
                found: self.dims.clone(),
            });
        }
        let m = &self.matrix;
        Ok(BlochVector {
            x: 2.0 * m[(0, 1)].re,
            y: 2.0 * m[(1, 0)].im,
            z: (m[(0, 0)] - m[(1, 1)]).re,
        })
    }

    /// Squared Wootters concurrence of a two-qubit state.
    pub fn tangle(&self) -> Result<f64> {
        if self.dims != [2, 2] {
            return Err(Error::WrongShape {
                expected: "two-qubit",
                found: self.dims.clone(),
            });
        }
        let yy = Pauli::Y.matrix().kronecker(&Pauli::Y.matrix());
        let flipped = &yy * self.matrix.map(|z| z.conj()) * &yy;
        let root = sqrt_psd(&self.matrix);
        let (mut values, _) = hermitian_eigen(&(&root * flipped * &root));
        values.sort_by(|a, b| b.total_cmp(a));
        let s: Vec<f64> = values.iter().map(|v| v.max(0.0).sqrt()).collect();
        let concurrence = (s[0] - s[1] - s[2] - s[3]).max(0.0);
        Ok((concurrence * concurrence).min(1.0))
    }
}

impl QuantumState for DensityOperator {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn apply_local(&self, op: &LocalOperator) -> Result<Self> {
        let dims = op.output_state_dims(&self.dims)?;
        if dims.is_empty() {
            return Err(Error::WrongShape {
                expected: "at least one remaining factor",
                found: dims,
            });
        }
        let d_in = self.dim();
        let d_out = product(&dims);
        // K ρ column by column, then K (Kρ)† column by column; the adjoint of
        // the result is K ρ K†.
        let mut half = CMatrix::zeros(d_out, d_in);
        for j in 0..d_in {
            let col: Vec<C64> = self.matrix.column(j).iter().copied().collect();
            let mapped = op.apply_vec(&self.dims, &col);
            half.set_column(j, &CVector::from_vec(mapped));
        }
        let half_adj = half.adjoint();
        let mut full = CMatrix::zeros(d_out, d_out);
        for j in 0..d_out {
            let col: Vec<C64> = half_adj.column(j).iter().copied().collect();
            let mapped = op.apply_vec(&self.dims, &col);
            full.set_column(j, &CVector::from_vec(mapped));
        }
        Ok(DensityOperator {
            dims,
            matrix: full.adjoint(),
        })
    }

    fn weight(&self) -> f64 {
        self.trace()
    }

    fn scaled(&self, factor: f64) -> Self {
        DensityOperator {
            dims: self.dims.clone(),
            matrix: &self.matrix * c(factor, 0.0),
        }
    }
}

/// Either a pure or a mixed state.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(Ket),
    Mixed(DensityOperator),
}

impl State {
    pub fn dims(&self) -> &[usize] {
        match self {
            State::Pure(k) => k.dims(),
            State::Mixed(r) => r.dims(),
        }
    }

    pub fn tensor(&self, other: &State) -> Result<State> {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => Ok(State::Pure(a.tensor(b))),
            (State::Mixed(a), State::Mixed(b)) => Ok(State::Mixed(a.tensor(b))),
            _ => Err(Error::MixedKinds),
        }
    }

    pub fn project(&self, op: &LocalOperator) -> Result<(State, f64)> {
        match self {
            State::Pure(k) => project(k, op).map(|p| (State::Pure(p.state), p.probability)),
            State::Mixed(r) => project(r, op).map(|p| (State::Mixed(p.state), p.probability)),
        }
    }

    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOperator> {
        match self {
            State::Pure(k) => k.reduced(keep),
            State::Mixed(r) => r.partial_trace(keep),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            State::Pure(k) => k.to_density(),
            State::Mixed(r) => r.clone(),
        }
    }

    pub fn fidelity_with_pure(&self, ket: &Ket) -> Result<f64> {
        match self {
            State::Pure(k) => k.overlap_sqr(ket),
            State::Mixed(r) => r.expectation_ket(ket),
        }
    }
}

/// Cartesian Bloch coordinates of a single-qubit state. |H⟩ sits at +ẑ,
/// |+⟩ at +x̂ and |R⟩ at +ŷ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFinite);
        }
        if v.length() > 1.0 + BLOCH_TOL {
            return Err(Error::ParameterRange {
                name: "bloch length",
                value: v.length(),
                range: "[0, 1]",
            });
        }
        Ok(v)
    }

    pub fn length(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// (I + x X + y Y + z Z) / 2.
    pub fn to_density(&self) -> DensityOperator {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(0.5 * (1.0 + self.z), 0.0),
                c(0.5 * self.x, -0.5 * self.y),
                c(0.5 * self.x, 0.5 * self.y),
                c(0.5 * (1.0 - self.z), 0.0),
            ],
        );
        DensityOperator {
            dims: vec![2],
            matrix: m,
        }
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// Single-qubit Pauli operator, phase ignored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        let entries = match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        };
        CMatrix::from_row_slice(2, 2, &entries)
    }

    /// (x, z) symplectic bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Product modulo phase.
    pub fn compose(self, other: Pauli) -> Pauli {
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        Pauli::from_bits(x1 ^ x2, z1 ^ z2)
    }

    pub fn commutes_with(self, other: Pauli) -> bool {
        let (x1, z1) = self.bits();
        let (x2, z2) = other.bits();
        !((x1 & z2) ^ (z1 & x2))
    }

    pub fn label(self) -> &'static str {
        match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Y => "Y",
            Pauli::Z => "Z",
        }
    }
}

/// Named single-qubit and two-qubit kets used throughout.
pub mod kets {
    use super::{c, Ket};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubit(a: super::C64, b: super::C64) -> Ket {
        Ket::new(vec![2], vec![a, b]).expect("static qubit")
    }

    pub fn h() -> Ket {
        qubit(c(1.0, 0.0), c(0.0, 0.0))
    }

    pub fn v() -> Ket {
        qubit(c(0.0, 0.0), c(1.0, 0.0))
    }

    pub fn plus() -> Ket {
        qubit(c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0))
    }

    pub fn minus() -> Ket {
        qubit(c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0))
    }

    pub fn r() -> Ket {
        qubit(c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2))
    }

    pub fn l() -> Ket {
        qubit(c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2))
    }

    /// Qubit state orthogonal to `k`: (α, β) ↦ (−β*, α*).
    pub fn orthogonal(k: &Ket) -> Ket {
        let a = k.amps();
        qubit(-a[1].conj(), a[0].conj())
    }

    /// Qutrit computational state |k⟩.
    pub fn qutrit(k: usize) -> Ket {
        Ket::basis(vec![3], &[k]).expect("qutrit index")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn singlet() -> Ket {
        Ket::from_real(vec![2, 2], &[0.0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]).unwrap()
    }

    #[test]
    fn tensor_of_basis_states() {
        let hv = kets::h().tensor(&kets::v());
        assert_eq!(hv.dims(), &[2, 2]);
        let expect = [0.0, 1.0, 0.0, 0.0];
        for (a, e) in hv.amps().iter().zip(expect) {
            assert_abs_diff_eq!(a.re, e);
            assert_abs_diff_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn singlet_squared_has_four_half_entries() {
        // (|HV⟩−|VH⟩)(|HV⟩−|VH⟩)/2 = ½(|HVHV⟩ − |HVVH⟩ − |VHHV⟩ + |VHVH⟩)
        let s = singlet().tensor(&singlet());
        assert_eq!(s.dim(), 16);
        let nonzero: Vec<(usize, f64)> = s
            .amps()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 1e-15)
            .map(|(i, a)| (i, a.re))
            .collect();
        let expect = [(0b0101, 0.5), (0b0110, -0.5), (0b1001, -0.5), (0b1010, 0.5)];
        assert_eq!(nonzero.len(), 4);
        for ((i, a), (ei, ea)) in nonzero.iter().zip(expect) {
            assert_eq!(*i, ei);
            assert_abs_diff_eq!(*a, ea, epsilon = 1e-15);
        }
    }

    #[test]
    fn density_tensor_trace_is_multiplicative() {
        let a = kets::plus().to_density();
        let b = DensityOperator::maximally_mixed(vec![3]).unwrap();
        assert_abs_diff_eq!(a.tensor(&b).trace(), 1.0, epsilon = 1e-14);
        assert_eq!(a.tensor(&b).dims(), &[2, 3]);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let p = State::Pure(kets::h());
        let m = State::Mixed(kets::h().to_density());
        assert!(matches!(p.tensor(&m), Err(Error::MixedKinds)));
    }

    #[test]
    fn projection_examples() {
        let proj_h = LocalOperator::projector(0, &kets::h());
        let r = project(&kets::h(), &proj_h).unwrap();
        assert_abs_diff_eq!(r.probability, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            r.state.overlap_sqr(&kets::h()).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        let r = project(&kets::plus(), &proj_h).unwrap();
        assert_abs_diff_eq!(r.probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            r.state.overlap_sqr(&kets::h()).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        let r = project(&kets::plus().to_density(), &proj_h).unwrap();
        assert_abs_diff_eq!(r.probability, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn singlet_has_no_symmetric_weight() {
        // Projector onto the symmetric subspace: (I + SWAP)/2.
        let mut sym = CMatrix::identity(4, 4);
        let mut swap = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(i, j)] = c(1.0, 0.0);
        }
        sym = (sym + swap) * c(0.5, 0.0);
        let op = LocalOperator::new(0, vec![2, 2], vec![2, 2], sym).unwrap();
        assert!(matches!(
            project(&singlet(), &op),
            Err(Error::NullOutcome { .. })
        ));
    }

    #[test]
    fn partial_trace_examples() {
        let rho = singlet().to_density();
        let a = rho.partial_trace(&[0]).unwrap();
        assert_abs_diff_eq!(a.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-15);

        let ra = kets::r().to_density();
        let rb = DensityOperator::maximally_mixed(vec![3]).unwrap();
        let back = ra.tensor(&rb).partial_trace(&[0]).unwrap();
        assert_abs_diff_eq!(back.trace_distance(&ra).unwrap(), 0.0, epsilon = 1e-14);

        assert!(matches!(rho.partial_trace(&[]), Err(Error::EmptyKeep)));
        assert!(rho.partial_trace(&[2]).is_err());
    }

    #[test]
    fn ket_reduction_matches_density_partial_trace() {
        let k = Ket::new(
            vec![2, 3, 2],
            (0..12)
                .map(|i| c((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()))
                .collect(),
        )
        .unwrap()
        .normalized()
        .unwrap();
        for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2]] {
            let a = k.reduced(&keep).unwrap();
            let b = k.to_density().partial_trace(&keep).unwrap();
            assert!((a.matrix() - b.matrix()).norm() < 1e-13);
        }
    }

    #[test]
    fn fidelity_examples() {
        let h = kets::h().to_density();
        let v = kets::v().to_density();
        let p = kets::plus().to_density();
        assert_abs_diff_eq!(h.fidelity(&h).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.fidelity(&v).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.fidelity(&p).unwrap(), 0.5, epsilon = 1e-12);
        let mixed = DensityOperator::maximally_mixed(vec![3]).unwrap();
        assert!(h.fidelity(&mixed).is_err());
    }

    #[test]
    fn bloch_examples() {
        let b = kets::h().to_density().bloch_vector().unwrap();
        assert_abs_diff_eq!(b.z, 1.0, epsilon = 1e-15);
        let b = kets::plus().to_density().bloch_vector().unwrap();
        assert_abs_diff_eq!(b.x, 1.0, epsilon = 1e-15);
        let b = kets::r().to_density().bloch_vector().unwrap();
        assert_abs_diff_eq!(b.y, 1.0, epsilon = 1e-15);
        let b = DensityOperator::maximally_mixed(vec![2])
            .unwrap()
            .bloch_vector()
            .unwrap();
        assert_abs_diff_eq!(b.length(), 0.0, epsilon = 1e-15);
    }

    fn werner(p: f64) -> DensityOperator {
        let s = singlet().to_density();
        let m = s.matrix() * c(p, 0.0) + CMatrix::identity(4, 4) * c((1.0 - p) / 4.0, 0.0);
        DensityOperator::new(vec![2, 2], m).unwrap()
    }

    #[test]
    fn tangle_examples() {
        assert_abs_diff_eq!(
            singlet().to_density().tangle().unwrap(),
            1.0,
            epsilon = 1e-10
        );
        let hv = kets::h().tensor(&kets::v()).to_density();
        assert_abs_diff_eq!(hv.tangle().unwrap(), 0.0, epsilon = 1e-10);
        // Closed-form Werner concurrence max(0, (3p−1)/2).
        assert_abs_diff_eq!(werner(0.9).tangle().unwrap(), 0.7225, epsilon = 1e-9);
        for p in [0.0, 0.2, 1.0 / 3.0, 0.5, 0.77] {
            let closed = ((3.0 * p - 1.0) / 2.0_f64).max(0.0).powi(2);
            assert_abs_diff_eq!(werner(p).tangle().unwrap(), closed, epsilon = 1e-9);
        }
    }

    #[test]
    fn pauli_algebra() {
        assert_eq!(Pauli::X.compose(Pauli::X), Pauli::I);
        assert_eq!(Pauli::X.compose(Pauli::Z), Pauli::Y);
        assert!(!Pauli::X.commutes_with(Pauli::Y));
        assert!(Pauli::Z.commutes_with(Pauli::Z));
        // Matrix product agrees with compose up to phase.
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let prod = a.matrix() * b.matrix();
                let target = a.compose(b).matrix();
                let overlap = (target.adjoint() * &prod).trace().norm() / 2.0;
                assert_abs_diff_eq!(overlap, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn orthogonal_qubit() {
        for k in [kets::h(), kets::plus(), kets::r(), kets::l()] {
            assert_abs_diff_eq!(
                k.inner(&kets::orthogonal(&k)).unwrap().norm(),
                0.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn validation_rejects_bad_operators() {
        let bad =
            CMatrix::from_row_slice(2, 2, &[c(1.2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.2, 0.0)]);
        assert!(DensityOperator::new(vec![2], bad).is_err());
        let nonherm =
            CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.3, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!(DensityOperator::new(vec![2], nonherm).is_err());
        assert!(Ket::from_real(vec![4], &[1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(Ket::from_real(vec![2], &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn local_operator_checks_factor_dims() {
        let op = LocalOperator::on_factor(1, Pauli::X.matrix()).unwrap();
        let k = Ket::basis(vec![2, 3], &[0, 0]).unwrap();
        assert!(matches!(
            k.apply_local(&op),
            Err(Error::FactorMismatch { .. })
        ));
    }
}
