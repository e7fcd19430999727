//! Exact finite-dimensional oracle: dense states, POVMs, projector filters,
//! measurement channels, protocol-state constructions, and randomized
//! brute-force verification of the dimension-reduction bound.
//!
//! Everything here is dense and small on purpose: exceeding the tensor-space
//! budget is an error, never a silent truncation. The canonical ordering of
//! a multi-system state is interleaved pairs `[A_1, B_1, ..., A_N, B_N, E]`.

mod protocol;
mod random;

pub use protocol::{
    build_protocol_states, cauchy_schwarz_lemma_check, compute_beta, measure_channel, theorem1_lhs,
    theorem1_rhs, ProtocolStates, Representation,
};
pub use random::{
    beta_instance, lemma_instance, random_complete_povm, random_psd_contraction, random_pure_state,
    split_seed, theorem1_instance, BetaInstance, BetaSpec, Theorem1Instance, Theorem1Spec,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Hermiticity / normalization tolerance for validated inputs.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed negative slack on eigenvalues of nominally PSD matrices.
pub const PSD_TOL: f64 = 1e-10;
/// POVM completeness tolerance.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Largest total dimension any constructed tensor space may reach.
pub const TENSOR_DIM_BUDGET: usize = 4096;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (deviation {deviation})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("density matrix trace is {trace}, expected 1")]
    TraceNotOne { trace: f64 },
    #[error("state vector has norm {norm}, expected 1")]
    NotNormalized { norm: f64 },
    #[error("POVM elements do not sum to identity (deviation {deviation})")]
    IncompletePovm { deviation: f64 },
    #[error("operator is not a projector (deviation {deviation})")]
    NotAProjector { deviation: f64 },
    #[error("POVM element has eigenvalue {max_eigenvalue} > 1")]
    EigenvalueAboveOne { max_eigenvalue: f64 },
    #[error("accepted-outcome operator annihilates the state (zero probability)")]
    ZeroProbability,
    #[error("acceptance expectation is numerically zero; the overlap ratio is undefined")]
    DegenerateDenominator,
    #[error("state has component of norm {norm} inside the filtered subspace")]
    ComplementViolation { norm: f64 },
    #[error("total dimension {dim} exceeds the tensor-space budget {budget}")]
    BudgetExceeded { dim: usize, budget: usize },
    #[error("complement projection stayed degenerate after {attempts} reseeded attempts")]
    DegenerateProjection { attempts: u32 },
    #[error("invalid measurement setup: {0}")]
    InvalidSetup(String),
}

/// Dense square operator on a finite-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    mat: CMatrix,
}

impl DenseOperator {
    pub fn new(mat: CMatrix) -> Result<Self, HilbertError> {
        if mat.nrows() != mat.ncols() {
            return Err(HilbertError::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim, dim),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut mat = CMatrix::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = C64::new(d, 0.0);
        }
        Self { mat }
    }

    /// Projector onto the first `keep` basis states of a `dim`-dimensional
    /// space.
    pub fn basis_projector(dim: usize, keep: usize) -> Self {
        let mut diag = vec![0.0; dim];
        for d in diag.iter_mut().take(keep.min(dim)) {
            *d = 1.0;
        }
        Self::from_real_diagonal(&diag)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn kron(&self, other: &DenseOperator) -> DenseOperator {
        DenseOperator {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let adj = self.mat.adjoint();
        (&self.mat - adj).norm()
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<(), HilbertError> {
        let deviation = self.hermiticity_deviation();
        if deviation > tol {
            return Err(HilbertError::NotHermitian { deviation });
        }
        Ok(())
    }

    /// Eigendecomposition of a Hermitian operator: real eigenvalues and a
    /// unitary of eigenvectors (columns). The matrix is symmetrized first so
    /// rounding-level asymmetry cannot leak in.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, CMatrix), HilbertError> {
        self.ensure_hermitian(1e-9)?;
        let sym = (&self.mat + self.mat.adjoint()).scale(0.5);
        let eig = nalgebra::SymmetricEigen::new(sym);
        Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
    }

    pub fn eigenvalue_range(&self) -> Result<(f64, f64), HilbertError> {
        let (vals, _) = self.hermitian_eigen()?;
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok((min, max))
    }

    /// Principal square root of a PSD operator; eigenvalues within
    /// [`HERMITIAN_TOL`] below zero are clamped to zero.
    pub fn sqrt_psd(&self) -> Result<DenseOperator, HilbertError> {
        let (vals, vecs) = self.hermitian_eigen()?;
        if let Some(&min) = vals
            .iter()
            .filter(|v| **v < -PSD_TOL)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            return Err(HilbertError::NotPsd {
                min_eigenvalue: min,
            });
        }
        let roots: Vec<f64> = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
        let diag = DenseOperator::from_real_diagonal(&roots);
        let mat = &vecs * diag.mat * vecs.adjoint();
        Ok(DenseOperator { mat })
    }

    pub fn validate_density_matrix(&self) -> Result<(), HilbertError> {
        self.ensure_hermitian(HERMITIAN_TOL.max(1e-10))?;
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(HilbertError::TraceNotOne { trace: tr.re });
        }
        let (min, _) = self.eigenvalue_range()?;
        if min < -PSD_TOL {
            return Err(HilbertError::NotPsd {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }

    pub fn validate_povm_element(&self) -> Result<(), HilbertError> {
        self.ensure_hermitian(1e-10)?;
        let (min, max) = self.eigenvalue_range()?;
        if min < -PSD_TOL {
            return Err(HilbertError::NotPsd {
                min_eigenvalue: min,
            });
        }
        if max > 1.0 + PSD_TOL {
            return Err(HilbertError::EigenvalueAboveOne {
                max_eigenvalue: max,
            });
        }
        Ok(())
    }

    pub fn validate_projector(&self) -> Result<(), HilbertError> {
        self.ensure_hermitian(1e-10)?;
        let sq = &self.mat * &self.mat;
        let deviation = (&sq - &self.mat).norm();
        if deviation > 1e-10 {
            return Err(HilbertError::NotAProjector { deviation });
        }
        Ok(())
    }
}

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVector,
}

impl PureState {
    /// Wrap an amplitude vector, requiring unit norm to 1e-12.
    pub fn new(amps: CVector) -> Result<Self, HilbertError> {
        let norm = amps.norm();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(HilbertError::NotNormalized { norm });
        }
        Ok(Self { amps })
    }

    /// Normalize an arbitrary vector; errors when the norm is below 1e-14.
    pub fn normalized(amps: CVector) -> Result<Self, HilbertError> {
        let norm = amps.norm();
        if norm <= 1e-14 {
            return Err(HilbertError::ZeroProbability);
        }
        Ok(Self {
            amps: amps.unscale(norm),
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// |ψ⟩⟨ψ| as a dense operator.
    pub fn projector(&self) -> DenseOperator {
        let mat = &self.amps * self.amps.adjoint();
        DenseOperator { mat }
    }
}

/// One measurement: a complete POVM, the accepted outcome subset, and an
/// optional filter projector applied before the detector.
#[derive(Debug, Clone)]
pub struct MeasurementSetup {
    elements: Vec<DenseOperator>,
    accepted: Vec<usize>,
    filter: Option<DenseOperator>,
}

impl MeasurementSetup {
    pub fn new(
        elements: Vec<DenseOperator>,
        accepted: Vec<usize>,
        filter: Option<DenseOperator>,
    ) -> Result<Self, HilbertError> {
        if elements.is_empty() {
            return Err(HilbertError::InvalidSetup("POVM has no elements".into()));
        }
        let dim = elements[0].dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for e in &elements {
            if e.dim() != dim {
                return Err(HilbertError::DimensionMismatch {
                    expected: dim,
                    got: e.dim(),
                });
            }
            e.validate_povm_element()?;
            sum += e.matrix();
        }
        let deviation = (&sum - CMatrix::identity(dim, dim)).norm();
        if deviation > COMPLETENESS_TOL {
            return Err(HilbertError::IncompletePovm { deviation });
        }
        if accepted.is_empty() {
            return Err(HilbertError::InvalidSetup(
                "accepted outcome set is empty".into(),
            ));
        }
        let mut seen = vec![false; elements.len()];
        for &x in &accepted {
            if x >= elements.len() {
                return Err(HilbertError::InvalidSetup(format!(
                    "accepted outcome {x} out of range"
                )));
            }
            if seen[x] {
                return Err(HilbertError::InvalidSetup(format!(
                    "accepted outcome {x} listed twice"
                )));
            }
            seen[x] = true;
        }
        if let Some(f) = &filter {
            if f.dim() != dim {
                return Err(HilbertError::DimensionMismatch {
                    expected: dim,
                    got: f.dim(),
                });
            }
            f.validate_projector()?;
        }
        Ok(Self {
            elements,
            accepted,
            filter,
        })
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn elements(&self) -> &[DenseOperator] {
        &self.elements
    }

    pub fn accepted(&self) -> &[usize] {
        &self.accepted
    }

    pub fn filter(&self) -> Option<&DenseOperator> {
        self.filter.as_ref()
    }

    /// Sum of the accepted POVM elements: the acceptance element this
    /// measurement induces.
    pub fn acceptance_element(&self) -> DenseOperator {
        let dim = self.dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for &x in &self.accepted {
            sum += self.elements[x].matrix();
        }
        DenseOperator { mat: sum }
    }
}

/// L1 (trace) distance Σ |eigenvalues(a - b)| between Hermitian operators.
pub fn trace_distance(a: &DenseOperator, b: &DenseOperator) -> Result<f64, HilbertError> {
    if a.dim() != b.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let diff = DenseOperator::new(a.matrix() - b.matrix())?;
    let (vals, _) = diff.hermitian_eigen()?;
    Ok(vals.iter().map(|v| v.abs()).sum())
}

/// L1 distance between pure states: 2 √(1 - |⟨ψ1|ψ2⟩|²).
pub fn pure_state_distance(p1: &PureState, p2: &PureState) -> Result<f64, HilbertError> {
    if p1.dim() != p2.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: p1.dim(),
            got: p2.dim(),
        });
    }
    let overlap = p1.inner(p2).norm_sqr();
    Ok(2.0 * (1.0 - overlap).max(0.0).sqrt())
}

pub(crate) fn dims_product(dims: &[usize]) -> usize {
    dims.iter().product()
}

pub(crate) fn check_budget(dim: usize) -> Result<(), HilbertError> {
    if dim > TENSOR_DIM_BUDGET {
        return Err(HilbertError::BudgetExceeded {
            dim,
            budget: TENSOR_DIM_BUDGET,
        });
    }
    Ok(())
}

/// Apply a square operator to one tensor factor of a multi-system vector.
pub(crate) fn apply_to_system(
    state: &CVector,
    dims: &[usize],
    sys: usize,
    op: &CMatrix,
) -> CVector {
    let d = dims[sys];
    debug_assert_eq!(op.nrows(), d);
    debug_assert_eq!(dims_product(dims), state.len());
    let post: usize = dims[sys + 1..].iter().product();
    let pre: usize = dims[..sys].iter().product();
    let mut out = CVector::zeros(state.len());
    for p in 0..pre {
        for q in 0..post {
            let base = p * d * post + q;
            for i in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..d {
                    acc += op[(i, j)] * state[base + j * post];
                }
                out[base + i * post] = acc;
            }
        }
    }
    out
}

/// Reduced density matrix of |ψ⟩⟨ψ| on the `keep` subsystems (in the order
/// given), tracing out the rest.
pub(crate) fn reduced_density(state: &CVector, dims: &[usize], keep: &[usize]) -> CMatrix {
    let keep_dims: Vec<usize> = keep.iter().map(|&s| dims[s]).collect();
    let keep_dim = dims_product(&keep_dims);
    let trace_dim = state.len() / keep_dim;
    // Rearrange ψ into M[keep_index, trace_index]; then ρ = M M†.
    let mut m = CMatrix::zeros(keep_dim, trace_dim);
    let is_kept: Vec<bool> = {
        let mut v = vec![false; dims.len()];
        for &s in keep {
            v[s] = true;
        }
        v
    };
    // Strides of each system inside the kept / traced flat indices.
    let mut keep_stride = vec![0usize; dims.len()];
    {
        let mut stride = 1usize;
        for &s in keep.iter().rev() {
            keep_stride[s] = stride;
            stride *= dims[s];
        }
    }
    let mut trace_stride = vec![0usize; dims.len()];
    {
        let mut stride = 1usize;
        for (s, &d) in dims.iter().enumerate().rev() {
            if !is_kept[s] {
                trace_stride[s] = stride;
                stride *= d;
            }
        }
    }
    let mut digits = vec![0usize; dims.len()];
    for (flat, amp) in state.iter().enumerate() {
        // Decompose the row-major flat index into per-system digits.
        let mut rem = flat;
        for (s, &d) in dims.iter().enumerate().rev() {
            digits[s] = rem % d;
            rem /= d;
        }
        let mut k = 0usize;
        let mut t = 0usize;
        for s in 0..dims.len() {
            if is_kept[s] {
                k += digits[s] * keep_stride[s];
            } else {
                t += digits[s] * trace_stride[s];
            }
        }
        m[(k, t)] += *amp;
    }
    let adj = m.adjoint();
    m * adj
}

/// Zero every entry of `rho` whose row and column indices differ in any of
/// the listed registers (positions into `dims`). This is the channel induced
/// by orthogonal environment records of those registers.
pub(crate) fn dephase_registers(rho: &mut CMatrix, dims: &[usize], registers: &[usize]) {
    let n = rho.nrows();
    let is_classical: Vec<bool> = {
        let mut v = vec![false; dims.len()];
        for &s in registers {
            v[s] = true;
        }
        v
    };
    let digits_of = |mut flat: usize, out: &mut Vec<usize>| {
        for (s, &d) in dims.iter().enumerate().rev() {
            out[s] = flat % d;
            flat /= d;
        }
    };
    let mut row_digits = vec![0usize; dims.len()];
    let mut col_digits = vec![0usize; dims.len()];
    for r in 0..n {
        digits_of(r, &mut row_digits);
        for c in 0..n {
            digits_of(c, &mut col_digits);
            let mismatch =
                (0..dims.len()).any(|s| is_classical[s] && row_digits[s] != col_digits[s]);
            if mismatch {
                rho[(r, c)] = C64::new(0.0, 0.0);
            }
        }
    }
}

pub(crate) fn kron_pow(m: &CMatrix, n: usize) -> CMatrix {
    assert!(n >= 1);
    let mut out = m.clone();
    for _ in 1..n {
        out = out.kronecker(m);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn trace_distance_identical_and_orthogonal() {
        let p0 = PureState::new(CVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        let p1 = PureState::new(CVector::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)])).unwrap();
        let a = p0.projector();
        let b = p1.projector();
        assert_eq!(trace_distance(&a, &a).unwrap(), 0.0);
        assert!((trace_distance(&a, &b).unwrap() - 2.0).abs() <= 1e-12);
        assert_eq!(pure_state_distance(&p0, &p0).unwrap(), 0.0);
        assert!((pure_state_distance(&p0, &p1).unwrap() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn trace_distance_dimension_mismatch() {
        let a = DenseOperator::identity(2);
        let b = DenseOperator::identity(3);
        assert!(matches!(
            trace_distance(&a, &b),
            Err(HilbertError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mat =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.5), c(0.5, -0.5), c(1.0, 0.0)]);
        let op = DenseOperator::new(mat.clone()).unwrap();
        let root = op.sqrt_psd().unwrap();
        let back = root.matrix() * root.matrix();
        assert!((back - mat).norm() <= 1e-12);
    }

    #[test]
    fn sqrt_psd_rejects_indefinite() {
        let op = DenseOperator::from_real_diagonal(&[1.0, -0.5]);
        assert!(matches!(op.sqrt_psd(), Err(HilbertError::NotPsd { .. })));
    }

    #[test]
    fn projector_validation() {
        DenseOperator::basis_projector(4, 2)
            .validate_projector()
            .unwrap();
        let not_projector = DenseOperator::from_real_diagonal(&[0.5, 1.0]);
        assert!(not_projector.validate_projector().is_err());
    }

    #[test]
    fn setup_requires_completeness() {
        let half = DenseOperator::from_real_diagonal(&[0.5, 0.5]);
        let err = MeasurementSetup::new(vec![half.clone()], vec![0], None).unwrap_err();
        assert!(matches!(err, HilbertError::IncompletePovm { .. }));
        MeasurementSetup::new(vec![half.clone(), half], vec![0, 1], None).unwrap();
    }

    #[test]
    fn apply_to_system_matches_kron() {
        let dims = [2usize, 3];
        let x =
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let state = CVector::from_fn(6, |i, _| c(i as f64 + 1.0, -(i as f64)));
        let direct = apply_to_system(&state, &dims, 0, &x);
        let full = x.kronecker(&CMatrix::identity(3, 3));
        let expected = full * &state;
        assert!((direct - expected).norm() <= 1e-13);
    }

    #[test]
    fn reduced_density_of_product_state() {
        // |+⟩ ⊗ |0⟩ reduced over the second system gives |+⟩⟨+|.
        let s = 1.0 / 2.0f64.sqrt();
        let amps = CVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(s, 0.0), c(0.0, 0.0)]);
        let rho = reduced_density(&amps, &[2, 2], &[0]);
        assert!((rho[(0, 0)].re - 0.5).abs() <= 1e-13);
        assert!((rho[(0, 1)].re - 0.5).abs() <= 1e-13);
        assert!((rho[(1, 1)].re - 0.5).abs() <= 1e-13);
    }

    #[test]
    fn reduced_density_traces_out_entanglement() {
        // Bell state: reduced single side is maximally mixed.
        let s = 1.0 / 2.0f64.sqrt();
        let amps = CVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let rho = reduced_density(&amps, &[2, 2], &[1]);
        assert!((rho[(0, 0)].re - 0.5).abs() <= 1e-13);
        assert!(rho[(0, 1)].norm() <= 1e-13);
        assert!((rho[(1, 1)].re - 0.5).abs() <= 1e-13);
    }

    #[test]
    fn dephasing_kills_off_diagonal_register_blocks() {
        let s = 1.0 / 2.0f64.sqrt();
        let amps = CVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let mut rho = (&amps * amps.adjoint()).clone_owned();
        dephase_registers(&mut rho, &[2, 2], &[0]);
        assert!(rho[(0, 3)].norm() <= 1e-15);
        assert!((rho[(0, 0)].re - 0.5).abs() <= 1e-13);
        assert!((rho[(3, 3)].re - 0.5).abs() <= 1e-13);
    }

    #[test]
    fn partial_trace_never_increases_distance() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_pure_state(&mut rng, 12);
            let b = random_pure_state(&mut rng, 12);
            let full = trace_distance(&a.projector(), &b.projector()).unwrap();
            let ra = DenseOperator::new(reduced_density(a.amplitudes(), &[3, 4], &[0])).unwrap();
            let rb = DenseOperator::new(reduced_density(b.amplitudes(), &[3, 4], &[0])).unwrap();
            let reduced = trace_distance(&ra, &rb).unwrap();
            assert!(reduced <= full + 1e-10, "reduced {reduced} > full {full}");
        }
    }
}
