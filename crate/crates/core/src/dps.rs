//! Differential-phase-shift detector bounds: inefficient photon-number-
//! resolving detector POVM weights, photon-number subspace dimensions, the
//! certified cross-term bound outside a photon cutoff, and the minimal
//! cutoff search.
//!
//! The detector POVM element for reading `n` photons is
//! `Π_n = Σ_{m≥n} C(m,n) γ^n (1-γ)^{m-n} P_m` with `γ` the efficiency and
//! `P_m` the projector onto the `m`-photon subspace of an `l`-mode block.
//! Everything here is scalar/combinatorial; operator-level checks at tiny
//! sizes live in [`crate::hilbert`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    log_binomial, log_factorial, sum_certified_with, CertifiedValue, CompensatedSum, NumericsError,
    SumOptions,
};

/// Default cap for the photon-cutoff search.
pub const DEFAULT_CUTOFF_CAP: u64 = 100_000;

#[derive(Debug, Error)]
pub enum DpsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integer result overflows; log of the value is {log_value}")]
    Overflow { log_value: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("budget {budget} unreachable: bound is {value_at_cap} at the cutoff cap {cap}")]
    BudgetUnreachable {
        budget: f64,
        cap: u64,
        value_at_cap: f64,
    },
}

/// Detector and filter parameters for one block of `block_size` pulses.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DpsParams {
    /// Detector efficiency γ ∈ (0, 1].
    pub gamma: f64,
    /// Maximum photon count observed in any block.
    pub n0: u64,
    /// Block length l (number of modes).
    pub block_size: u64,
    /// Filter cutoff: the filter keeps total photon numbers 0..=m0.
    pub m0: u64,
}

impl DpsParams {
    pub fn new(gamma: f64, n0: u64, block_size: u64, m0: u64) -> Result<Self, DpsError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(DpsError::Domain(format!(
                "detector efficiency must lie in (0, 1], got {gamma}"
            )));
        }
        if block_size < 1 {
            return Err(DpsError::Domain("block_size must be >= 1".into()));
        }
        if m0 < n0 {
            return Err(DpsError::Domain(format!(
                "cutoff m0 ({m0}) must be >= observed maximum n0 ({n0})"
            )));
        }
        Ok(Self {
            gamma,
            n0,
            block_size,
            m0,
        })
    }
}

/// How the `m`-photon subspace dimension enters the cross-term bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FmVariant {
    /// `f_m ≤ l (m+l-1)!/m!` folded into the printed simplification
    /// `(1-γ)^{m-n} (l/n!) (m+l-1)^{l+n-1}`.
    #[serde(rename = "paper-bound")]
    PaperBound,
    /// Exact `f_m = C(m+l-1, l-1)` with the exact binomial detector weight.
    #[serde(rename = "exact-fm")]
    ExactFm,
}

impl FmVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            FmVariant::PaperBound => "paper-bound",
            FmVariant::ExactFm => "exact-fm",
        }
    }
}

/// Binomial detector weight C(m,n) γ^n (1-γ)^{m-n}: the probability that an
/// efficiency-γ detector reads `n` photons out of `m` arriving ones.
pub fn povm_weight(n: u64, m: u64, gamma: f64) -> Result<f64, DpsError> {
    if n > m {
        return Err(DpsError::Domain(format!(
            "weight requires n <= m, got n={n}, m={m}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(DpsError::Domain(format!(
            "detector efficiency must lie in (0, 1], got {gamma}"
        )));
    }
    if gamma == 1.0 {
        return Ok(if n == m { 1.0 } else { 0.0 });
    }
    let log_c = log_binomial(m, n)?;
    Ok((log_c + n as f64 * gamma.ln() + (m - n) as f64 * (1.0 - gamma).ln()).exp())
}

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 1..=k {
        result = result.checked_mul((n - k + i) as u128)?;
        result /= i as u128; // exact: result is C(n-k+i, i) after this step
    }
    Some(result)
}

/// Exact dimension of the `m`-photon subspace of `l` modes:
/// C(m+l-1, l-1), the number of occupation tuples summing to `m`.
pub fn subspace_dim_exact(m: u64, l: u64) -> Result<u64, DpsError> {
    if l < 1 {
        return Err(DpsError::Domain("need at least one mode".into()));
    }
    let value = binomial_u128(m + l - 1, l - 1)
        .filter(|&v| v <= u64::MAX as u128)
        .ok_or(DpsError::Overflow {
            log_value: log_binomial(m + l - 1, l - 1).unwrap_or(f64::INFINITY),
        })?;
    Ok(value as u64)
}

/// Upper bound `l (m+l-1)!/m!` on the subspace dimension, in log-stable
/// form. Exceeds the exact count by a factor of exactly l!.
pub fn subspace_dim_paper_bound(m: u64, l: u64) -> f64 {
    assert!(l >= 1, "need at least one mode");
    ((l as f64).ln() + log_factorial(m + l - 1) - log_factorial(m)).exp()
}

/// Filter dimension Σ_{m=0}^{m0} C(m+l-1, l-1) = C(m0+l, l).
pub fn filter_dimension(m0: u64, l: u64) -> Result<u64, DpsError> {
    if l < 1 {
        return Err(DpsError::Domain("need at least one mode".into()));
    }
    let value = binomial_u128(m0 + l, l)
        .filter(|&v| v <= u64::MAX as u128)
        .ok_or(DpsError::Overflow {
            log_value: log_binomial(m0 + l, l).unwrap_or(f64::INFINITY),
        })?;
    Ok(value as u64)
}

/// ln of the inner-series term; `None` encodes an exact zero.
fn ln_inner_term(m: u64, n: u64, params: &DpsParams, variant: FmVariant) -> Option<f64> {
    let l = params.block_size;
    let one_minus = 1.0 - params.gamma;
    debug_assert!(m >= n);
    let decay = if m == n {
        0.0
    } else if one_minus == 0.0 {
        return None;
    } else {
        (m - n) as f64 * one_minus.ln()
    };
    match variant {
        FmVariant::PaperBound => {
            let exponent = l + n - 1; // l >= 1 so this cannot underflow
            let power = if exponent == 0 {
                0.0 // empty product, covers the (m+l-1) == 0 corner
            } else {
                exponent as f64 * ((m + l - 1) as f64).ln()
            };
            Some(decay + (l as f64).ln() - log_factorial(n) + power)
        }
        FmVariant::ExactFm => {
            let log_c = log_binomial(m, n).expect("m >= n");
            let log_fm = log_binomial(m + l - 1, l - 1).expect("l >= 1");
            Some(decay + log_c + log_fm)
        }
    }
}

/// Proven, nonincreasing upper bound on term(m+1)/term(m) for the inner
/// series at fixed `n`.
fn inner_ratio_bound(m: u64, n: u64, params: &DpsParams, variant: FmVariant) -> f64 {
    let l = params.block_size;
    let one_minus = 1.0 - params.gamma;
    match variant {
        FmVariant::PaperBound => {
            let exponent = l + n - 1;
            if exponent == 0 {
                one_minus
            } else {
                let base = (m + l) as f64 / (m + l - 1) as f64;
                one_minus * base.powi(exponent as i32)
            }
        }
        FmVariant::ExactFm => {
            // exact ratio: (1-γ) (m+1)/(m+1-n) · (m+l)/(m+1)
            one_minus * ((m + 1) as f64 / (m + 1 - n) as f64) * ((m + l) as f64 / (m + 1) as f64)
        }
    }
}

/// Certified bound on the cross-term weight of the detector acceptance
/// element outside the photon cutoff:
/// `Σ_{n=0}^{n0} γ^n Σ_{m=m0}^{∞} (inner term)`.
pub fn diff_bound(params: &DpsParams) -> Result<CertifiedValue, DpsError> {
    diff_bound_with(params, FmVariant::PaperBound, SumOptions::default())
}

pub fn diff_bound_with(
    params: &DpsParams,
    variant: FmVariant,
    sum_opts: SumOptions,
) -> Result<CertifiedValue, DpsError> {
    if params.gamma == 1.0 {
        // A perfect detector pins the photon number: only m = n survives,
        // and m >= m0 > n0 >= n leaves nothing.
        if params.m0 > params.n0 {
            return Ok(CertifiedValue::ZERO);
        }
        let mut acc = CompensatedSum::new();
        for n in params.m0..=params.n0 {
            let t = ln_inner_term(n, n, params, variant).map_or(0.0, f64::exp);
            acc.add(t);
        }
        return Ok(CertifiedValue::new(acc.value(), 0.0));
    }
    let mut value = CompensatedSum::new();
    let mut tail = CompensatedSum::new();
    for n in 0..=params.n0 {
        let inner = sum_certified_with(
            params.m0,
            |m| ln_inner_term(m, n, params, variant).map_or(0.0, f64::exp),
            |m| inner_ratio_bound(m, n, params, variant),
            sum_opts,
        )?;
        let scale = (n as f64 * params.gamma.ln()).exp();
        value.add(scale * inner.value);
        tail.add(scale * inner.tail_bound);
    }
    let v = value.value();
    Ok(CertifiedValue::new(
        v,
        tail.value() + 2.0 * f64::EPSILON * v.abs(),
    ))
}

/// Smallest cutoff m0 >= n0 whose certified bound (value + tail) fits within
/// `budget`; minimal because the bound is nonincreasing in m0.
pub fn find_min_cutoff(gamma: f64, n0: u64, block_size: u64, budget: f64) -> Result<u64, DpsError> {
    find_min_cutoff_with(
        gamma,
        n0,
        block_size,
        budget,
        FmVariant::PaperBound,
        DEFAULT_CUTOFF_CAP,
        SumOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn find_min_cutoff_with(
    gamma: f64,
    n0: u64,
    block_size: u64,
    budget: f64,
    variant: FmVariant,
    cap: u64,
    sum_opts: SumOptions,
) -> Result<u64, DpsError> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(DpsError::Domain(format!(
            "budget must be positive, got {budget}"
        )));
    }
    let fits = |m0: u64| -> Result<bool, DpsError> {
        let params = DpsParams::new(gamma, n0, block_size, m0)?;
        Ok(diff_bound_with(&params, variant, sum_opts)?.upper() <= budget)
    };
    if fits(n0)? {
        return Ok(n0);
    }
    let mut lo = n0;
    let mut hi = (n0 + 1).max(2 * n0);
    loop {
        if hi >= cap {
            if !fits(cap)? {
                let params = DpsParams::new(gamma, n0, block_size, cap)?;
                let value_at_cap = diff_bound_with(&params, variant, sum_opts)?.upper();
                return Err(DpsError::BudgetUnreachable {
                    budget,
                    cap,
                    value_at_cap,
                });
            }
            hi = cap;
            break;
        }
        if fits(hi)? {
            break;
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
