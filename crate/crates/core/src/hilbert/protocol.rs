//! Measurement channels, post-measurement protocol states, the overlap
//! deficit β between the unfiltered and filtered protocols, and the two
//! sides of the dimension-reduction bound.

use super::{
    apply_to_system, check_budget, dephase_registers, dims_product, kron_pow, reduced_density,
    CMatrix, CVector, DenseOperator, HilbertError, MeasurementSetup, PureState, C64,
};

/// Outcome probabilities and conditional states of a POVM measurement on the
/// first tensor factor: ρ_XR = Σ_x |x⟩⟨x| ⊗ tr_A(√M_x ρ √M_x).
pub fn measure_channel(
    rho: &DenseOperator,
    setup: &MeasurementSetup,
) -> Result<DenseOperator, HilbertError> {
    let dim_a = setup.dim();
    let dim = rho.dim();
    if !dim.is_multiple_of(dim_a) {
        return Err(HilbertError::DimensionMismatch {
            expected: dim_a,
            got: dim,
        });
    }
    let dim_r = dim / dim_a;
    rho.validate_density_matrix()?;
    let outcomes = setup.elements().len();
    let mut out = CMatrix::zeros(outcomes * dim_r, outcomes * dim_r);
    let eye_r = CMatrix::identity(dim_r, dim_r);
    for (x, element) in setup.elements().iter().enumerate() {
        let root = element.sqrt_psd()?;
        let kraus = root.matrix().kronecker(&eye_r);
        let term = &kraus * rho.matrix() * kraus.adjoint();
        for i in 0..dim_r {
            for j in 0..dim_r {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..dim_a {
                    acc += term[(a * dim_r + i, a * dim_r + j)];
                }
                out[(x * dim_r + i, x * dim_r + j)] = acc;
            }
        }
    }
    DenseOperator::new(out)
}

/// How the detector/environment records are represented in the constructed
/// protocol state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// One orthonormal outcome register per measurement; the discarded
    /// environment record is accounted for by dephasing the outcome
    /// registers when reducing. Reduced states are exactly those of the
    /// full dilation.
    ImplicitEnvironment,
    /// Materialize the environment record registers as well; reductions are
    /// plain partial traces. Only practical for N = 1 cross-checks.
    ExplicitDilation,
}

/// A normalized post-measurement state over
/// `[X_1..X_N, Y_1..Y_N, (Q registers when explicit), A_1, B_1, ..., E]`.
#[derive(Debug, Clone)]
pub struct ProtocolStates {
    pub state: PureState,
    dims: Vec<usize>,
    n: usize,
    representation: Representation,
}

impl ProtocolStates {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The classical-quantum state on the outcome registers and E after the
    /// received systems (and environment records) are discarded.
    pub fn reduced_xye(&self) -> DenseOperator {
        let n = self.n;
        let e_index = match self.representation {
            Representation::ImplicitEnvironment => 4 * n,
            Representation::ExplicitDilation => 6 * n,
        };
        let mut keep: Vec<usize> = (0..2 * n).collect();
        keep.push(e_index);
        let mut rho = reduced_density(self.state.amplitudes(), &self.dims, &keep);
        if self.representation == Representation::ImplicitEnvironment {
            let mut keep_dims: Vec<usize> = self.dims[..2 * n].to_vec();
            keep_dims.push(self.dims[e_index]);
            let classical: Vec<usize> = (0..2 * n).collect();
            dephase_registers(&mut rho, &keep_dims, &classical);
        }
        DenseOperator::new(rho).expect("reduced density is square")
    }
}

/// Build the normalized post-measurement state of the protocol, with or
/// without per-system filters in front of the detectors.
///
/// `psi` lives on interleaved pairs plus environment: `[A_1, B_1, ..., A_N,
/// B_N, E]`. Each of the N pairs is measured with `setup_a` / `setup_b`,
/// keeping only accepted outcomes. With `filter_on`, each setup's filter
/// projector is applied to its system first; the state is renormalized at
/// the end, and a vanishing norm is reported as [`HilbertError::ZeroProbability`].
pub fn build_protocol_states(
    psi: &PureState,
    setup_a: &MeasurementSetup,
    setup_b: &MeasurementSetup,
    n: usize,
    dim_e: usize,
    filter_on: bool,
    representation: Representation,
) -> Result<ProtocolStates, HilbertError> {
    let dim_a = setup_a.dim();
    let dim_b = setup_b.dim();
    let mut dims_in: Vec<usize> = Vec::with_capacity(2 * n + 1);
    for _ in 0..n {
        dims_in.push(dim_a);
        dims_in.push(dim_b);
    }
    dims_in.push(dim_e);
    let dim_in = dims_product(&dims_in);
    if psi.dim() != dim_in {
        return Err(HilbertError::DimensionMismatch {
            expected: dim_in,
            got: psi.dim(),
        });
    }

    let k_a = setup_a.accepted().len();
    let k_b = setup_b.accepted().len();
    let outcome_dim = k_a.pow(n as u32) * k_b.pow(n as u32);
    let record_factor = match representation {
        Representation::ImplicitEnvironment => 1,
        Representation::ExplicitDilation => outcome_dim,
    };
    let dim_out = outcome_dim * record_factor * dim_in;
    check_budget(dim_out)?;

    let mut filtered = psi.amplitudes().clone();
    if filter_on {
        for i in 0..n {
            if let Some(f) = setup_a.filter() {
                filtered = apply_to_system(&filtered, &dims_in, 2 * i, f.matrix());
            }
            if let Some(f) = setup_b.filter() {
                filtered = apply_to_system(&filtered, &dims_in, 2 * i + 1, f.matrix());
            }
        }
    }

    let roots_a: Vec<CMatrix> = setup_a
        .accepted()
        .iter()
        .map(|&x| Ok(setup_a.elements()[x].sqrt_psd()?.into_matrix()))
        .collect::<Result<_, HilbertError>>()?;
    let roots_b: Vec<CMatrix> = setup_b
        .accepted()
        .iter()
        .map(|&y| Ok(setup_b.elements()[y].sqrt_psd()?.into_matrix()))
        .collect::<Result<_, HilbertError>>()?;

    let mut out = CVector::zeros(dim_out);
    let mut xs = vec![0usize; n];
    let mut ys = vec![0usize; n];
    for outcome_flat in 0..outcome_dim {
        // Outcome registers are ordered [X_1..X_N, Y_1..Y_N], row-major.
        let mut rem = outcome_flat;
        for i in (0..n).rev() {
            ys[i] = rem % k_b;
            rem /= k_b;
        }
        for i in (0..n).rev() {
            xs[i] = rem % k_a;
            rem /= k_a;
        }
        let mut branch = filtered.clone();
        for i in 0..n {
            branch = apply_to_system(&branch, &dims_in, 2 * i, &roots_a[xs[i]]);
            branch = apply_to_system(&branch, &dims_in, 2 * i + 1, &roots_b[ys[i]]);
        }
        let base = match representation {
            Representation::ImplicitEnvironment => outcome_flat * dim_in,
            // Environment record mirrors the outcome: |x⟩|Q_x⟩.
            Representation::ExplicitDilation => {
                (outcome_flat * outcome_dim + outcome_flat) * dim_in
            }
        };
        for (offset, amp) in branch.iter().enumerate() {
            out[base + offset] = *amp;
        }
    }

    let state = PureState::normalized(out)?;
    let mut dims: Vec<usize> = Vec::new();
    dims.extend(std::iter::repeat_n(k_a, n));
    dims.extend(std::iter::repeat_n(k_b, n));
    if representation == Representation::ExplicitDilation {
        dims.extend(std::iter::repeat_n(k_a, n));
        dims.extend(std::iter::repeat_n(k_b, n));
    }
    dims.extend_from_slice(&dims_in);
    Ok(ProtocolStates {
        state,
        dims,
        n,
        representation,
    })
}

fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Overlap deficit between the filtered and unfiltered protocols:
/// |β| = √( tr[D̃^{⊗N} P̄ ρ P̄] / tr[D̃^{⊗N} ρ] ), with P̄ the complement of
/// the N-fold filter projector and D̃ the per-pair acceptance element.
///
/// `rho` lives on `[(A,B) pairs; N] ⊗ E`; `dtilde_pair` and `filter_pair`
/// act on one A⊗B pair.
pub fn compute_beta(
    rho: &DenseOperator,
    dtilde_pair: &DenseOperator,
    filter_pair: &DenseOperator,
    n: usize,
    dim_e: usize,
) -> Result<f64, HilbertError> {
    let dim_ab = dtilde_pair.dim();
    if filter_pair.dim() != dim_ab {
        return Err(HilbertError::DimensionMismatch {
            expected: dim_ab,
            got: filter_pair.dim(),
        });
    }
    let expected = dim_ab.pow(n as u32) * dim_e;
    if rho.dim() != expected {
        return Err(HilbertError::DimensionMismatch {
            expected,
            got: rho.dim(),
        });
    }
    check_budget(expected)?;
    filter_pair.validate_projector()?;

    let eye_e = CMatrix::identity(dim_e, dim_e);
    let acceptance = kron_pow(dtilde_pair.matrix(), n).kronecker(&eye_e);
    let keep = kron_pow(filter_pair.matrix(), n).kronecker(&eye_e);
    let complement = CMatrix::identity(expected, expected) - keep;
    let masked = &complement * rho.matrix() * &complement;
    let numerator = trace_product(&acceptance, &masked).re;
    let denominator = trace_product(&acceptance, rho.matrix()).re;
    if denominator <= 1e-14 {
        return Err(HilbertError::DegenerateDenominator);
    }
    Ok((numerator.max(0.0) / denominator).sqrt())
}

/// Squared norm of the component of `psi` inside the N-fold product filter
/// (every A digit < d_a and every B digit < d_b).
fn inside_filter_norm_sq(psi: &PureState, dims: &[usize], d_a: usize, d_b: usize) -> f64 {
    let n_pairs = dims.len() / 2;
    let mut digits = vec![0usize; dims.len()];
    let mut acc = 0.0;
    for (flat, amp) in psi.amplitudes().iter().enumerate() {
        let mut rem = flat;
        for (s, &d) in dims.iter().enumerate().rev() {
            digits[s] = rem % d;
            rem /= d;
        }
        let inside = (0..n_pairs).all(|i| digits[2 * i] < d_a && digits[2 * i + 1] < d_b);
        if inside {
            acc += amp.norm_sqr();
        }
    }
    acc
}

/// ⟨Ψ| (D̃^A D̃^B)^{⊗N} |Ψ⟩ for a state orthogonal to the N-fold filter
/// range; `psi` lives on interleaved pairs `[A_1, B_1, ..., A_N, B_N]`.
pub fn theorem1_lhs(
    psi: &PureState,
    dtilde_a: &DenseOperator,
    dtilde_b: &DenseOperator,
    d_a: usize,
    d_b: usize,
    n: usize,
) -> Result<f64, HilbertError> {
    let dim_a = dtilde_a.dim();
    let dim_b = dtilde_b.dim();
    let mut dims: Vec<usize> = Vec::with_capacity(2 * n);
    for _ in 0..n {
        dims.push(dim_a);
        dims.push(dim_b);
    }
    let dim = dims_product(&dims);
    if psi.dim() != dim {
        return Err(HilbertError::DimensionMismatch {
            expected: dim,
            got: psi.dim(),
        });
    }
    check_budget(dim)?;
    let inside = inside_filter_norm_sq(psi, &dims, d_a, d_b).sqrt();
    if inside > 1e-10 {
        return Err(HilbertError::ComplementViolation { norm: inside });
    }
    let mut phi = psi.amplitudes().clone();
    for i in 0..n {
        phi = apply_to_system(&phi, &dims, 2 * i, dtilde_a.matrix());
        phi = apply_to_system(&phi, &dims, 2 * i + 1, dtilde_b.matrix());
    }
    let value = psi.amplitudes().dotc(&phi);
    debug_assert!(value.im.abs() <= 1e-9, "expectation should be real");
    Ok(value.re)
}

/// The off-diagonal bound N·[Σ_{i, j≥d_A} |⟨i|D̃^A|j⟩| + Σ_{i, j≥d_B}
/// |⟨i|D̃^B|j⟩|], with rows ranging over the whole (finite) working basis.
pub fn theorem1_rhs(
    dtilde_a: &DenseOperator,
    dtilde_b: &DenseOperator,
    d_a: usize,
    d_b: usize,
    n: usize,
) -> f64 {
    let sum_tail = |op: &DenseOperator, d: usize| -> f64 {
        let dim = op.dim();
        let mut acc = 0.0;
        for i in 0..dim {
            for j in d..dim {
                acc += op.matrix()[(i, j)].norm();
            }
        }
        acc
    };
    n as f64 * (sum_tail(dtilde_a, d_a) + sum_tail(dtilde_b, d_b))
}

/// Both sides of the weighted Cauchy-Schwarz step: for a PSD contraction
/// `M = Σ a_i |φ_i⟩⟨φ_i|`,
/// |⟨ψ|M|ψ'⟩| ≤ √(Σ a_i |⟨ψ|φ_i⟩|²) ≤ 1.
pub fn cauchy_schwarz_lemma_check(
    m: &DenseOperator,
    psi: &PureState,
    psi_prime: &PureState,
) -> Result<(f64, f64), HilbertError> {
    if psi.dim() != m.dim() || psi_prime.dim() != m.dim() {
        return Err(HilbertError::DimensionMismatch {
            expected: m.dim(),
            got: psi.dim(),
        });
    }
    m.validate_povm_element()?;
    let (vals, vecs) = m.hermitian_eigen()?;
    let phi = m.matrix() * psi_prime.amplitudes();
    let lhs = psi.amplitudes().dotc(&phi).norm();
    let mut acc = 0.0;
    for (i, &a) in vals.iter().enumerate() {
        let overlap = psi.amplitudes().dotc(&vecs.column(i).clone_owned());
        acc += a.max(0.0) * overlap.norm_sqr();
    }
    Ok((lhs, acc.sqrt()))
}
