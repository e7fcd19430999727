//! Heterodyne-detection bounds: the disk-acceptance POVM element in the Fock
//! basis, certified off-diagonal sums outside a photon-number filter, and the
//! minimal filter-dimension search.
//!
//! The acceptance element for "both quadratures landed inside the disk
//! p² + q² ≤ v_max" is `(1/π) ∫_disk |α⟩⟨α| d²α`. Angular integration makes
//! it diagonal in the Fock basis with entries P(n+1, v_max), so two routes to
//! the off-diagonal weight outside the filter exist: the literal radial-form
//! bound kept for reproduction, and the exact diagonal tail.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{
    integrate_adaptive_with, log_factorial, regularized_lower_gamma, sum_certified_with,
    CertifiedValue, CompensatedSum, NumericsError, QuadOptions, SumOptions, DEFAULT_QUAD_TOL,
    DEFAULT_SUM_REL_TOL,
};

/// Default cap for the filter-dimension search.
pub const DEFAULT_DIMENSION_CAP: u64 = 100_000;

#[derive(Debug, Error)]
pub enum HeterodyneError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("budget {budget} unreachable: off-diagonal sum is {value_at_cap} at the dimension cap {cap}")]
    BudgetUnreachable {
        budget: f64,
        cap: u64,
        value_at_cap: f64,
    },
}

/// Which side of the link a bound belongs to. Purely a reporting label; both
/// sides use the same construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SideLabel {
    A,
    B,
}

/// One side's acceptance disk: the maximum accepted p² + q² in
/// vacuum-variance units.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeterodyneSide {
    pub v_max: f64,
    pub label: SideLabel,
}

impl HeterodyneSide {
    pub fn new(v_max: f64, label: SideLabel) -> Result<Self, HeterodyneError> {
        if !v_max.is_finite() || v_max < 0.0 {
            return Err(HeterodyneError::InvalidParameter(format!(
                "v_max must be finite and nonnegative, got {v_max}"
            )));
        }
        Ok(Self { v_max, label })
    }
}

/// How an off-diagonal sum is evaluated.
///
/// `PaperLiteral` reproduces the radial-form bound exactly as printed in the
/// original derivation (measure `dr`, prefactor 2). The printed form drops
/// the `r` of the polar measure, so `PaperLiteralPolar` is the same integrand
/// multiplied by `r`. `ExactDiagonal` uses the fact that the acceptance
/// element is diagonal, reducing the sum to a certified incomplete-gamma
/// tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlapMethod {
    #[serde(rename = "paper-literal")]
    PaperLiteral,
    #[serde(rename = "paper-literal-polar")]
    PaperLiteralPolar,
    #[serde(rename = "exact-diagonal")]
    ExactDiagonal,
}

impl OverlapMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            OverlapMethod::PaperLiteral => "paper-literal",
            OverlapMethod::PaperLiteralPolar => "paper-literal-polar",
            OverlapMethod::ExactDiagonal => "exact-diagonal",
        }
    }
}

/// A computed off-diagonal sum for a filter keeping Fock levels `0..d-1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OverlapBound {
    pub d: u64,
    pub method: OverlapMethod,
    pub value: CertifiedValue,
}

impl OverlapBound {
    /// Worst-case (certified) bound used in every budget comparison.
    pub fn total(&self) -> f64 {
        self.value.upper()
    }
}

/// Tolerance knobs shared by the heterodyne evaluations.
#[derive(Debug, Clone, Copy)]
pub struct HeterodyneOptions {
    /// Relative tolerance for the certified series inside the integrand and
    /// for the exact-diagonal tail.
    pub sum_rel_tol: f64,
    /// Relative tolerance target for the radial quadrature.
    pub quad_rel_tol: f64,
}

impl Default for HeterodyneOptions {
    fn default() -> Self {
        Self {
            sum_rel_tol: DEFAULT_SUM_REL_TOL,
            quad_rel_tol: DEFAULT_QUAD_TOL,
        }
    }
}

/// |⟨n|p+iq⟩| = r^n e^{-r²/2} / √(n!) with r² = p² + q², evaluated in log
/// space.
pub fn fock_overlap_magnitude(n: u64, r: f64) -> f64 {
    assert!(r >= 0.0 && r.is_finite(), "radius must be finite and >= 0");
    if r == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (n as f64 * r.ln() - 0.5 * r * r - 0.5 * log_factorial(n)).exp()
}

/// Exact Fock matrix element ⟨m| D̃ |n⟩ of the disk acceptance element.
///
/// The angular phase e^{i(m−n)θ} integrates to zero unless m = n; the
/// diagonal reduces to the regularized lower incomplete gamma P(n+1, v_max).
pub fn dtilde_matrix_element_exact(m: u64, n: u64, v_max: f64) -> f64 {
    assert!(
        v_max >= 0.0 && v_max.is_finite(),
        "v_max must be finite and >= 0"
    );
    if m != n {
        return 0.0;
    }
    regularized_lower_gamma(n as f64 + 1.0, v_max)
        .expect("P(n+1, v) with n >= 0, v >= 0 is always defined")
}

/// Σ_{k>=start} r^k / √(k!) with a certified geometric tail
/// (term ratio r/√(k+1), valid and nonincreasing once it is < 1).
fn fock_amplitude_series(
    r: f64,
    start: u64,
    opts: SumOptions,
) -> Result<CertifiedValue, NumericsError> {
    debug_assert!(r > 0.0);
    let first = (start as f64 * r.ln() - 0.5 * log_factorial(start)).exp();
    let mut running = first;
    let mut next_index = start;
    let term = move |k: u64| {
        debug_assert_eq!(k, next_index);
        let t = running;
        running *= r / ((k + 1) as f64).sqrt();
        next_index += 1;
        t
    };
    sum_certified_with(start, term, |k| r / ((k + 1) as f64).sqrt(), opts)
}

/// Integrand of the radial form; a summation failure (possible only for
/// extreme radii that exhaust the term cap) is stashed in `failure` and the
/// point reported as zero, to be rethrown after the quadrature returns.
fn radial_integrand(
    r: f64,
    d: u64,
    polar: bool,
    sum_opts: SumOptions,
    failure: &std::cell::Cell<Option<NumericsError>>,
) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let series = fock_amplitude_series(r, 0, sum_opts)
        .and_then(|all| Ok((all, fock_amplitude_series(r, d, sum_opts)?)));
    match series {
        Ok((all, tail)) => {
            let measure = if polar { r } else { 1.0 };
            (-r * r).exp() * all.value * tail.value * measure
        }
        Err(e) => {
            let first = failure.take().unwrap_or(e);
            failure.set(Some(first));
            0.0
        }
    }
}

/// Off-diagonal sum over i ∈ [0,∞), j ∈ [d,∞) via the radial-form bound:
/// `2 ∫_{r² ≤ v_max} e^{-r²} Σ_i r^i/√(i!) Σ_{j≥d} r^j/√(j!) dr`
/// (times `r` inside the integral for the polar variant).
fn offdiag_sum_radial(
    side: &HeterodyneSide,
    d: u64,
    polar: bool,
    opts: HeterodyneOptions,
) -> Result<CertifiedValue, HeterodyneError> {
    let r_max = side.v_max.sqrt();
    if r_max == 0.0 {
        return Ok(CertifiedValue::ZERO);
    }
    let sum_opts = SumOptions {
        rel_tol: opts.sum_rel_tol,
        ..SumOptions::default()
    };
    let failure = std::cell::Cell::new(None);
    let f = |r: f64| radial_integrand(r, d, polar, sum_opts, &failure);

    // Coarse composite-Simpson pass to scale the quadrature tolerance; the
    // sums can span hundreds of orders of magnitude across d, so an absolute
    // tolerance would be meaningless.
    let coarse = {
        let n = 32;
        let h = r_max / n as f64;
        let mut acc = CompensatedSum::new();
        for i in 0..n {
            let a = i as f64 * h;
            acc.add(h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h)));
        }
        acc.value().abs()
    };
    let tol = (opts.quad_rel_tol * coarse).max(f64::MIN_POSITIVE);
    let integral = integrate_adaptive_with(f, 0.0, r_max, tol, QuadOptions::default())?;
    if let Some(e) = failure.take() {
        return Err(e.into());
    }

    // The certified series leave a relative truncation of at most
    // ~2 * sum_rel_tol per factor; fold that into the reported tail.
    let series_slack = 4.0 * opts.sum_rel_tol * integral.value.abs();
    let mut value = 2.0 * integral.value;
    let mut tail = 2.0 * (integral.tail_bound + series_slack);
    if value < 0.0 {
        // The true sum is nonnegative; shifting a rounding-level negative
        // value to zero widens the certificate by the same amount.
        tail += -value;
        value = 0.0;
    }
    Ok(CertifiedValue::new(value, tail))
}

/// Off-diagonal sum via the exact diagonal form: Σ_{j≥d} P(j+1, v_max).
///
/// P(j+1, v) equals the Poisson tail Σ_{m>j} e^{-v} v^m / m!, so successive
/// terms are dominated geometrically with ratio v/(j+2-v) once j+2 > v.
fn offdiag_sum_diagonal(
    side: &HeterodyneSide,
    d: u64,
    opts: HeterodyneOptions,
) -> Result<CertifiedValue, HeterodyneError> {
    let v = side.v_max;
    if v == 0.0 {
        return Ok(CertifiedValue::ZERO);
    }
    let sum_opts = SumOptions {
        rel_tol: opts.sum_rel_tol,
        ..SumOptions::default()
    };
    let term = |j: u64| {
        regularized_lower_gamma(j as f64 + 1.0, v).expect("P(j+1, v) is always defined here")
    };
    let ratio = |j: u64| {
        let denom = (j + 2) as f64 - v;
        if denom > 0.0 {
            v / denom
        } else {
            f64::INFINITY
        }
    };
    Ok(sum_certified_with(d, term, ratio, sum_opts)?)
}

/// Evaluate the off-diagonal sum for the filter keeping levels `0..d-1` with
/// the requested method.
pub fn offdiag_sum(
    side: &HeterodyneSide,
    d: u64,
    method: OverlapMethod,
) -> Result<OverlapBound, HeterodyneError> {
    offdiag_sum_with(side, d, method, HeterodyneOptions::default())
}

pub fn offdiag_sum_with(
    side: &HeterodyneSide,
    d: u64,
    method: OverlapMethod,
    opts: HeterodyneOptions,
) -> Result<OverlapBound, HeterodyneError> {
    if d == 0 {
        return Err(HeterodyneError::InvalidParameter(
            "filter dimension d must be >= 1".into(),
        ));
    }
    let value = match method {
        OverlapMethod::PaperLiteral => offdiag_sum_radial(side, d, false, opts)?,
        OverlapMethod::PaperLiteralPolar => offdiag_sum_radial(side, d, true, opts)?,
        OverlapMethod::ExactDiagonal => offdiag_sum_diagonal(side, d, opts)?,
    };
    Ok(OverlapBound { d, method, value })
}

/// Radial-form bound, measure exactly as printed (`dr`, prefactor 2).
pub fn offdiag_sum_paper(side: &HeterodyneSide, d: u64) -> Result<OverlapBound, HeterodyneError> {
    offdiag_sum(side, d, OverlapMethod::PaperLiteral)
}

/// Exact diagonal tail Σ_{j≥d} P(j+1, v_max).
pub fn offdiag_sum_exact(side: &HeterodyneSide, d: u64) -> Result<OverlapBound, HeterodyneError> {
    offdiag_sum(side, d, OverlapMethod::ExactDiagonal)
}

/// Smallest `d` whose certified off-diagonal sum (value + tail bound) fits
/// within `budget`, found by doubling then bisection. Minimality relies on
/// the sum being nonincreasing in `d`.
pub fn find_min_dimension(
    side: &HeterodyneSide,
    budget: f64,
    method: OverlapMethod,
) -> Result<u64, HeterodyneError> {
    find_min_dimension_with(
        side,
        budget,
        method,
        DEFAULT_DIMENSION_CAP,
        HeterodyneOptions::default(),
    )
}

pub fn find_min_dimension_with(
    side: &HeterodyneSide,
    budget: f64,
    method: OverlapMethod,
    cap: u64,
    opts: HeterodyneOptions,
) -> Result<u64, HeterodyneError> {
    if !budget.is_finite() || budget <= 0.0 {
        return Err(HeterodyneError::InvalidParameter(format!(
            "budget must be positive, got {budget}"
        )));
    }
    let fits = |d: u64| -> Result<bool, HeterodyneError> {
        Ok(offdiag_sum_with(side, d, method, opts)?.total() <= budget)
    };
    if fits(1)? {
        return Ok(1);
    }
    let mut lo = 1u64; // largest known failing d
    let mut hi = 2u64;
    loop {
        if hi >= cap {
            if !fits(cap)? {
                let value_at_cap = offdiag_sum_with(side, cap, method, opts)?.total();
                return Err(HeterodyneError::BudgetUnreachable {
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

#[cfg(test)]
mod tests {
    use super::*;

    fn side(v: f64) -> HeterodyneSide {
        HeterodyneSide::new(v, SideLabel::A).unwrap()
    }

    #[test]
    fn fock_overlap_trivial() {
        assert_eq!(fock_overlap_magnitude(0, 0.0), 1.0);
        assert_eq!(fock_overlap_magnitude(5, 0.0), 0.0);
    }

    #[test]
    #[allow(clippy::excessive_precision)] // frozen extended-precision value
    fn fock_overlap_direct_formula() {
        // Direct (non-log) evaluation as the oracle.
        let r: f64 = 1.5;
        let expected = r.powi(3) * (-r * r / 2.0).exp() / 6.0f64.sqrt();
        let got = fock_overlap_magnitude(3, r);
        assert!((got - expected).abs() <= 1e-14 * expected);
        assert!((got - 0.447_318_499_929_484_614).abs() <= 1e-13);
    }

    #[test]
    fn dtilde_offdiagonal_vanishes() {
        for v in [0.0, 1.0, 4.0, 9.5] {
            assert_eq!(dtilde_matrix_element_exact(2, 3, v), 0.0);
            assert_eq!(dtilde_matrix_element_exact(7, 0, v), 0.0);
        }
    }

    #[test]
    fn dtilde_vacuum_diagonal_closed_form() {
        for v in [0.0, 0.5, 2.0, 8.0] {
            let got = dtilde_matrix_element_exact(0, 0, v);
            let expected = 1.0 - (-v).exp();
            assert!((got - expected).abs() <= 1e-14);
        }
    }

    #[test]
    fn offdiag_sums_vanish_for_empty_disk() {
        let s = side(0.0);
        for method in [
            OverlapMethod::PaperLiteral,
            OverlapMethod::PaperLiteralPolar,
            OverlapMethod::ExactDiagonal,
        ] {
            let b = offdiag_sum(&s, 7, method).unwrap();
            assert_eq!(b.value.value, 0.0);
            assert_eq!(b.value.tail_bound, 0.0);
        }
    }

    #[test]
    fn offdiag_sum_rejects_zero_dimension() {
        assert!(offdiag_sum(&side(1.0), 0, OverlapMethod::PaperLiteral).is_err());
    }

    #[test]
    fn exact_diagonal_never_exceeds_radial_bound() {
        let s = side(4.0);
        for d in [1u64, 2, 5, 10, 20, 40] {
            let exact = offdiag_sum(&s, d, OverlapMethod::ExactDiagonal).unwrap();
            let paper = offdiag_sum(&s, d, OverlapMethod::PaperLiteral).unwrap();
            assert!(
                exact.value.value
                    <= paper.value.value + paper.value.tail_bound + exact.value.tail_bound,
                "d={d}: exact {} > radial {}",
                exact.value.value,
                paper.value.value
            );
        }
    }

    #[test]
    fn min_dimension_trivial_budget() {
        let s = side(4.0);
        let at_one = offdiag_sum_paper(&s, 1).unwrap().total();
        assert_eq!(
            find_min_dimension(&s, at_one * 1.01, OverlapMethod::PaperLiteral).unwrap(),
            1
        );
    }

    #[test]
    fn min_dimension_monotone_in_budget() {
        let s = side(4.0);
        let tight = find_min_dimension(&s, 1e-12, OverlapMethod::PaperLiteral).unwrap();
        let loose = find_min_dimension(&s, 1e-6, OverlapMethod::PaperLiteral).unwrap();
        assert!(tight > loose, "tight={tight}, loose={loose}");
    }

    #[test]
    fn min_dimension_budget_unreachable_at_cap() {
        let s = side(4.0);
        let err = find_min_dimension_with(
            &s,
            1e-30,
            OverlapMethod::PaperLiteral,
            8,
            HeterodyneOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            HeterodyneError::BudgetUnreachable { cap: 8, .. }
        ));
    }

    #[test]
    fn min_dimension_is_minimal() {
        let s = side(4.0);
        for budget in [1e-6, 1e-9, 1e-12] {
            let d = find_min_dimension(&s, budget, OverlapMethod::ExactDiagonal).unwrap();
            assert!(offdiag_sum_exact(&s, d).unwrap().total() <= budget);
            if d > 1 {
                assert!(offdiag_sum_exact(&s, d - 1).unwrap().total() > budget);
            }
        }
    }
}
