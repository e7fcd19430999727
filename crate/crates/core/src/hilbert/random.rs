//! Deterministic instance generation for the randomized verifiers. Every
//! generator is a pure function of its seed; retries derive sub-seeds so a
//! reported counterexample can always be replayed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{
    apply_to_system, check_budget, dims_product, CMatrix, CVector, DenseOperator, HilbertError,
    MeasurementSetup, PureState, C64,
};

/// Mix a base seed with an index (splitmix64 finalizer) to derive
/// independent per-trial seeds.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, dim: usize) -> CVector {
    CVector::from_fn(dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-like random pure state: complex Gaussian amplitudes, normalized.
pub fn random_pure_state(rng: &mut ChaCha8Rng, dim: usize) -> PureState {
    loop {
        if let Ok(state) = PureState::normalized(gaussian_vector(rng, dim)) {
            return state;
        }
    }
}

/// Random PSD operator with spectral norm scaled just below 1.
pub fn random_psd_contraction(rng: &mut ChaCha8Rng, dim: usize) -> DenseOperator {
    let b = gaussian_matrix(rng, dim);
    let g = &b * b.adjoint();
    let op = DenseOperator::new(g).expect("square by construction");
    let (_, max) = op.eigenvalue_range().expect("B B† is Hermitian");
    let scale = 1.0 / (max * (1.0 + 1e-12));
    DenseOperator::new(op.matrix().scale(scale)).expect("square")
}

/// Random complete POVM: normalized random PSD parts
/// `M_i = S^{-1/2} G_i S^{-1/2}` with `S = Σ G_i`.
pub fn random_complete_povm(
    rng: &mut ChaCha8Rng,
    dim: usize,
    outcomes: usize,
) -> Vec<DenseOperator> {
    assert!(outcomes >= 1);
    let parts: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let b = gaussian_matrix(rng, dim);
            &b * b.adjoint() + CMatrix::identity(dim, dim).scale(1e-6)
        })
        .collect();
    let mut total = CMatrix::zeros(dim, dim);
    for p in &parts {
        total += p;
    }
    let (vals, vecs) = DenseOperator::new(total)
        .unwrap()
        .hermitian_eigen()
        .expect("sum of PSD parts is Hermitian");
    let inv_roots: Vec<f64> = vals.iter().map(|&v| 1.0 / v.max(1e-300).sqrt()).collect();
    let s_inv_root =
        &vecs * DenseOperator::from_real_diagonal(&inv_roots).into_matrix() * vecs.adjoint();
    parts
        .into_iter()
        .map(|g| {
            let m = &s_inv_root * g * &s_inv_root;
            // Re-hermitize to shed rounding drift from the triple product.
            let m = (&m + m.adjoint()).scale(0.5);
            DenseOperator::new(m).expect("square")
        })
        .collect()
}

/// Shape of a brute-force instance for the dimension-reduction bound.
#[derive(Debug, Clone, Copy)]
pub struct Theorem1Spec {
    pub dim_a: usize,
    pub dim_b: usize,
    pub d_a: usize,
    pub d_b: usize,
    pub n: usize,
}

/// Random acceptance elements plus a state orthogonal to the filter range.
#[derive(Debug, Clone)]
pub struct Theorem1Instance {
    pub spec: Theorem1Spec,
    pub dtilde_a: DenseOperator,
    pub dtilde_b: DenseOperator,
    pub psi: PureState,
}

/// Generate a deterministic instance: two random PSD contractions and a
/// random state projected onto the complement of the N-fold filter range
/// (re-seeded up to 16 times if the complement component is degenerate).
pub fn theorem1_instance(seed: u64, spec: Theorem1Spec) -> Result<Theorem1Instance, HilbertError> {
    if spec.n == 0 || spec.d_a == 0 || spec.d_b == 0 {
        return Err(HilbertError::InvalidSetup(
            "need n >= 1 and cutoffs >= 1".into(),
        ));
    }
    if spec.d_a > spec.dim_a || spec.d_b > spec.dim_b {
        return Err(HilbertError::InvalidSetup(
            "cutoff exceeds the system dimension".into(),
        ));
    }
    let mut dims: Vec<usize> = Vec::with_capacity(2 * spec.n);
    for _ in 0..spec.n {
        dims.push(spec.dim_a);
        dims.push(spec.dim_b);
    }
    let dim = dims_product(&dims);
    check_budget(dim)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dtilde_a = random_psd_contraction(&mut rng, spec.dim_a);
    let dtilde_b = random_psd_contraction(&mut rng, spec.dim_b);
    let psi = complement_state(seed, &dims, spec.d_a, spec.d_b)?;
    Ok(Theorem1Instance {
        spec,
        dtilde_a,
        dtilde_b,
        psi,
    })
}

/// Project a random state with `I - (P_A ⊗ P_B)^{⊗N}` and renormalize,
/// deriving a fresh sub-seed per attempt.
fn complement_state(
    seed: u64,
    dims: &[usize],
    d_a: usize,
    d_b: usize,
) -> Result<PureState, HilbertError> {
    const ATTEMPTS: u32 = 16;
    let n_pairs = dims.len() / 2;
    for attempt in 0..ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 0x100 + attempt as u64));
        let mut amps = random_pure_state(&mut rng, dims_product(dims))
            .amplitudes()
            .clone();
        let mut digits = vec![0usize; dims.len()];
        for flat in 0..amps.len() {
            let mut rem = flat;
            for (s, &d) in dims.iter().enumerate().rev() {
                digits[s] = rem % d;
                rem /= d;
            }
            let inside = (0..n_pairs).all(|i| digits[2 * i] < d_a && digits[2 * i + 1] < d_b);
            if inside {
                amps[flat] = C64::new(0.0, 0.0);
            }
        }
        if amps.norm() > 1e-6 {
            return PureState::normalized(amps);
        }
    }
    Err(HilbertError::DegenerateProjection { attempts: ATTEMPTS })
}

/// A random PSD contraction plus two random states, for checking the
/// weighted Cauchy-Schwarz step.
pub fn lemma_instance(seed: u64, dim: usize) -> (DenseOperator, PureState, PureState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = random_psd_contraction(&mut rng, dim);
    let psi = random_pure_state(&mut rng, dim);
    let phi = random_pure_state(&mut rng, dim);
    (m, psi, phi)
}

/// Shape of an overlap-deficit soundness instance.
#[derive(Debug, Clone, Copy)]
pub struct BetaSpec {
    pub dim_a: usize,
    pub dim_b: usize,
    pub dim_e: usize,
    pub n: usize,
    pub outcomes_a: usize,
    pub outcomes_b: usize,
}

/// Random measurements with accepted-outcome subsets, random filters, and a
/// random tripartite state.
#[derive(Debug, Clone)]
pub struct BetaInstance {
    pub spec: BetaSpec,
    pub setup_a: MeasurementSetup,
    pub setup_b: MeasurementSetup,
    pub d_a: usize,
    pub d_b: usize,
    pub psi: PureState,
}

impl BetaInstance {
    /// Per-pair acceptance element D̃^A ⊗ D̃^B from the accepted outcomes.
    pub fn dtilde_pair(&self) -> DenseOperator {
        self.setup_a
            .acceptance_element()
            .kron(&self.setup_b.acceptance_element())
    }

    /// Per-pair filter projector P_A ⊗ P_B.
    pub fn filter_pair(&self) -> DenseOperator {
        DenseOperator::basis_projector(self.spec.dim_a, self.d_a)
            .kron(&DenseOperator::basis_projector(self.spec.dim_b, self.d_b))
    }
}

fn random_accepted(rng: &mut ChaCha8Rng, outcomes: usize) -> Vec<usize> {
    loop {
        let accepted: Vec<usize> = (0..outcomes).filter(|_| rng.gen_bool(0.7)).collect();
        if !accepted.is_empty() {
            return accepted;
        }
    }
}

/// Generate a deterministic overlap-deficit instance. Degenerate draws
/// (acceptance probability or filtered norm below 1e-6, so the ratio is
/// numerically meaningless) are re-generated from derived sub-seeds, up to
/// 16 attempts.
pub fn beta_instance(seed: u64, spec: BetaSpec) -> Result<BetaInstance, HilbertError> {
    const ATTEMPTS: u32 = 16;
    if spec.n == 0 || spec.dim_a < 2 || spec.dim_b < 2 || spec.dim_e < 1 {
        return Err(HilbertError::InvalidSetup(
            "need n >= 1, side dims >= 2, environment >= 1".into(),
        ));
    }
    for attempt in 0..ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, 0x200 + attempt as u64));
        let d_a = rng.gen_range(1..spec.dim_a);
        let d_b = rng.gen_range(1..spec.dim_b);
        let accepted_a = random_accepted(&mut rng, spec.outcomes_a);
        let accepted_b = random_accepted(&mut rng, spec.outcomes_b);

        // The constructed protocol state is the binding dimension:
        // (k_a k_b)^n (dim_a dim_b)^n dim_e must fit the budget.
        let per_pair = accepted_a.len() * accepted_b.len() * spec.dim_a * spec.dim_b;
        let total = per_pair.pow(spec.n as u32) * spec.dim_e;
        check_budget(total)?;

        let setup_a = MeasurementSetup::new(
            random_complete_povm(&mut rng, spec.dim_a, spec.outcomes_a),
            accepted_a,
            Some(DenseOperator::basis_projector(spec.dim_a, d_a)),
        )?;
        let setup_b = MeasurementSetup::new(
            random_complete_povm(&mut rng, spec.dim_b, spec.outcomes_b),
            accepted_b,
            Some(DenseOperator::basis_projector(spec.dim_b, d_b)),
        )?;
        let mut dims: Vec<usize> = Vec::new();
        for _ in 0..spec.n {
            dims.push(spec.dim_a);
            dims.push(spec.dim_b);
        }
        dims.push(spec.dim_e);
        let psi = random_pure_state(&mut rng, dims_product(&dims));

        let instance = BetaInstance {
            spec,
            setup_a,
            setup_b,
            d_a,
            d_b,
            psi,
        };
        if acceptance_probability(&instance, &dims, false) > 1e-6
            && acceptance_probability(&instance, &dims, true) > 1e-6
        {
            return Ok(instance);
        }
    }
    Err(HilbertError::DegenerateProjection { attempts: ATTEMPTS })
}

/// ⟨ψ| F (D̃^A D̃^B)^{⊗N} F |ψ⟩ with F the N-fold filter (or identity).
fn acceptance_probability(instance: &BetaInstance, dims: &[usize], filtered: bool) -> f64 {
    let da = instance.setup_a.acceptance_element();
    let db = instance.setup_b.acceptance_element();
    let fa = DenseOperator::basis_projector(instance.spec.dim_a, instance.d_a);
    let fb = DenseOperator::basis_projector(instance.spec.dim_b, instance.d_b);
    let mut phi = instance.psi.amplitudes().clone();
    if filtered {
        for i in 0..instance.spec.n {
            phi = apply_to_system(&phi, dims, 2 * i, fa.matrix());
            phi = apply_to_system(&phi, dims, 2 * i + 1, fb.matrix());
        }
    }
    let base = phi.clone();
    for i in 0..instance.spec.n {
        phi = apply_to_system(&phi, dims, 2 * i, da.matrix());
        phi = apply_to_system(&phi, dims, 2 * i + 1, db.matrix());
    }
    base.dotc(&phi).re
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let spec = Theorem1Spec {
            dim_a: 3,
            dim_b: 3,
            d_a: 2,
            d_b: 2,
            n: 2,
        };
        let a = theorem1_instance(42, spec).unwrap();
        let b = theorem1_instance(42, spec).unwrap();
        assert_eq!(a.psi.amplitudes(), b.psi.amplitudes());
        assert_eq!(a.dtilde_a.matrix(), b.dtilde_a.matrix());
        let c = theorem1_instance(43, spec).unwrap();
        assert_ne!(a.psi.amplitudes(), c.psi.amplitudes());
    }

    #[test]
    fn generated_povm_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3, 4] {
            let povm = random_complete_povm(&mut rng, dim, 3);
            let mut sum = CMatrix::zeros(dim, dim);
            for m in &povm {
                sum += m.matrix();
            }
            let dev = (&sum - CMatrix::identity(dim, dim)).norm();
            assert!(dev <= 1e-12, "completeness deviation {dev}");
        }
    }

    #[test]
    fn contraction_has_spectrum_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let op = random_psd_contraction(&mut rng, 4);
            let (min, max) = op.eigenvalue_range().unwrap();
            assert!(min >= -1e-12);
            assert!(max <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn complement_state_is_orthogonal_to_filter_range() {
        let spec = Theorem1Spec {
            dim_a: 4,
            dim_b: 4,
            d_a: 3,
            d_b: 3,
            n: 2,
        };
        let inst = theorem1_instance(11, spec).unwrap();
        let dims = [4usize, 4, 4, 4];
        let mut inside = 0.0;
        let mut digits = [0usize; 4];
        for (flat, amp) in inst.psi.amplitudes().iter().enumerate() {
            let mut rem = flat;
            for (s, &d) in dims.iter().enumerate().rev() {
                digits[s] = rem % d;
                rem /= d;
            }
            if digits.iter().all(|&x| x < 3) {
                inside += amp.norm_sqr();
            }
        }
        assert!(inside.sqrt() <= 1e-10);
    }

    #[test]
    fn budget_violations_are_rejected() {
        let spec = Theorem1Spec {
            dim_a: 4,
            dim_b: 4,
            d_a: 2,
            d_b: 2,
            n: 4,
        };
        assert!(matches!(
            theorem1_instance(1, spec),
            Err(HilbertError::BudgetExceeded { .. })
        ));
    }
}
