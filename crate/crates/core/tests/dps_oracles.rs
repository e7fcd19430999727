//! Independent oracles for the DPS detector bounds: exact rational
//! arithmetic for binomial weights, occupation-tuple enumeration for
//! subspace dimensions, and long compensated summation for the cross-term
//! bound.

mod common;

use common::{count_occupations, diff_oracle_exact_fm, diff_oracle_printed};
use effdim::dps::{
    diff_bound, diff_bound_with, filter_dimension, find_min_cutoff, povm_weight,
    subspace_dim_exact, subspace_dim_paper_bound, DpsParams, FmVariant,
};
use effdim::numerics::{CompensatedSum, SumOptions};
use num::{BigInt, BigRational, ToPrimitive};

fn rational_weight(n: u64, m: u64, gamma_num: i64, gamma_den: i64) -> f64 {
    let gamma = BigRational::new(BigInt::from(gamma_num), BigInt::from(gamma_den));
    let one = BigRational::from_integer(BigInt::from(1));
    let mut binom = BigRational::from_integer(BigInt::from(1));
    for i in 1..=n {
        binom *= BigRational::new(BigInt::from(m - n + i), BigInt::from(i));
    }
    let w = binom
        * num::pow::pow(gamma.clone(), n as usize)
        * num::pow::pow(one - gamma, (m - n) as usize);
    w.to_f64().unwrap()
}

#[test]
fn weights_match_exact_rational_oracle() {
    let expected = rational_weight(2, 5, 3, 10);
    let got = povm_weight(2, 5, 0.3).unwrap();
    assert!((got - expected).abs() <= 1e-15, "{got} vs {expected}");
    assert!((got - 0.3087).abs() <= 1e-15);

    for m in 0..=25u64 {
        for n in 0..=m {
            for &(num, den) in &[(1i64, 10i64), (1, 2), (9, 10)] {
                let gamma = num as f64 / den as f64;
                let got = povm_weight(n, m, gamma).unwrap();
                let expected = rational_weight(n, m, num, den);
                assert!(
                    (got - expected).abs() <= 1e-13 * expected.max(1e-30),
                    "n={n}, m={m}, gamma={gamma}: {got} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn weight_completeness_up_to_two_hundred_photons() {
    for &gamma in &[0.1, 0.5, 0.9] {
        for m in 0..=200u64 {
            let mut acc = CompensatedSum::new();
            for n in 0..=m {
                acc.add(povm_weight(n, m, gamma).unwrap());
            }
            assert!(
                (acc.value() - 1.0).abs() <= 1e-12,
                "gamma={gamma}, m={m}: {}",
                acc.value()
            );
        }
    }
}

#[test]
fn subspace_dimension_matches_enumeration() {
    for l in 1..=6u64 {
        for m in 0..=20u64 {
            assert_eq!(
                subspace_dim_exact(m, l).unwrap(),
                count_occupations(m, l),
                "m={m}, l={l}"
            );
        }
    }
    // The specific six states of two photons in three modes.
    assert_eq!(subspace_dim_exact(2, 3).unwrap(), 6);
    assert!(subspace_dim_paper_bound(2, 3) >= 36.0 - 1e-9);
}

#[test]
fn filter_dimension_matches_cumulative_enumeration() {
    for l in 1..=6u64 {
        let mut acc = 0;
        for m0 in 0..=20u64 {
            acc += count_occupations(m0, l);
            assert_eq!(filter_dimension(m0, l).unwrap(), acc, "m0={m0}, l={l}");
        }
    }
}

#[test]
fn diff_bound_matches_long_summation_oracle() {
    let params = DpsParams::new(0.2, 2, 2, 10).unwrap();
    let got = diff_bound(&params).unwrap();
    let oracle = diff_oracle_printed(0.2, 2, 2, 10, 2000);
    let rel = (got.value - oracle).abs() / oracle;
    assert!(
        rel <= 1e-10,
        "value {} vs oracle {oracle}, rel {rel}",
        got.value
    );
    assert!(oracle >= got.lower() - 1e-12 && oracle <= got.upper() + 1e-12);

    let exact = diff_bound_with(&params, FmVariant::ExactFm, SumOptions::default()).unwrap();
    let exact_oracle = diff_oracle_exact_fm(0.2, 2, 2, 10, 2000);
    let rel = (exact.value - exact_oracle).abs() / exact_oracle;
    assert!(rel <= 1e-10, "exact-fm {} vs {exact_oracle}", exact.value);
}

#[test]
fn min_cutoff_matches_linear_scan() {
    let budget = 1e-9;
    let got = find_min_cutoff(0.5, 2, 2, budget).unwrap();
    let mut scan = None;
    for m0 in 2..500u64 {
        if diff_oracle_printed(0.5, 2, 2, m0, 3000) <= budget {
            scan = Some(m0);
            break;
        }
    }
    assert_eq!(got, scan.expect("scan must terminate"));
}

#[test]
fn diff_bound_monotone_in_every_parameter() {
    let value = |gamma: f64, n0: u64, l: u64, m0: u64| {
        diff_bound(&DpsParams::new(gamma, n0, l, m0).unwrap())
            .unwrap()
            .value
    };
    // Nonincreasing in m0.
    let mut prev = f64::INFINITY;
    for m0 in 4..24u64 {
        let v = value(0.3, 3, 2, m0);
        assert!(v <= prev);
        prev = v;
    }
    // Nondecreasing in n0.
    let mut prev = 0.0;
    for n0 in 0..6u64 {
        let v = value(0.3, n0, 2, 8);
        assert!(v >= prev, "n0={n0}");
        prev = v;
    }
    // Nondecreasing in l.
    let mut prev = 0.0;
    for l in 1..6u64 {
        let v = value(0.3, 2, l, 8);
        assert!(v >= prev, "l={l}");
        prev = v;
    }
    // Nondecreasing in 1 - gamma.
    let mut prev = 0.0;
    for gamma in [0.9, 0.7, 0.5, 0.3, 0.1] {
        let v = value(gamma, 2, 2, 8);
        assert!(v >= prev, "gamma={gamma}");
        prev = v;
    }
}
