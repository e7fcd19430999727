//! Shared brute-force oracles for the integration and acceptance suites.
//! Everything here recomputes quantities from first principles (fixed-grid
//! quadrature, direct summation, enumeration) independently of the library's
//! certified evaluation paths.

#![allow(dead_code)]

use effdim::numerics::{log_factorial, CompensatedSum};

/// Composite Simpson on `intervals` (even) panels.
pub fn simpson_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals.is_multiple_of(2));
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Product-rule quadrature of (1/π) ∬_disk ⟨m|α⟩⟨α|n⟩ dp dq in polar
/// coordinates: radial and angular factors integrated on dense grids, with
/// no use of the closed-form answer.
pub struct DiskQuadrature {
    radial: Vec<f64>,         // ∫_0^{√v} r^{s+1} e^{-r²} dr for s = m + n
    angular: Vec<(f64, f64)>, // ∮ e^{ikθ} dθ for k = m - n (offset by max_index)
    max_index: usize,
}

impl DiskQuadrature {
    pub fn new(v: f64, max_index: usize) -> Self {
        let r_max = v.sqrt();
        let radial = (0..=2 * max_index)
            .map(|s| simpson_composite(|r| r.powi(s as i32 + 1) * (-r * r).exp(), 0.0, r_max, 4096))
            .collect();
        let n_theta = 256usize;
        let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
        let angular = (0..=2 * max_index)
            .map(|idx| {
                let k = idx as i64 - max_index as i64;
                let mut re = 0.0;
                let mut im = 0.0;
                for j in 0..n_theta {
                    let phase = k as f64 * j as f64 * dtheta;
                    re += phase.cos() * dtheta;
                    im += phase.sin() * dtheta;
                }
                (re, im)
            })
            .collect();
        Self {
            radial,
            angular,
            max_index,
        }
    }

    /// Quadrature value of ⟨m| D̃ |n⟩ as (re, im).
    pub fn element(&self, m: usize, n: usize) -> (f64, f64) {
        let norm = (-0.5 * (log_factorial(m as u64) + log_factorial(n as u64))).exp();
        let (re, im) = self.angular[m + self.max_index - n];
        let scale = self.radial[m + n] * norm / std::f64::consts::PI;
        (re * scale, im * scale)
    }
}

/// Radial-form off-diagonal bound evaluated with a fixed-grid composite
/// Simpson rule and plain recurrence sums (500 terms past the cutoff).
pub fn paper_oracle(v: f64, d: u64, polar: bool, intervals: usize) -> f64 {
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        let mut all = 0.0;
        let mut tail = 0.0;
        let mut term = 1.0;
        for k in 0..(d + 500) {
            if k >= d {
                tail += term;
            }
            all += term;
            term *= r / ((k + 1) as f64).sqrt();
        }
        let measure = if polar { r } else { 1.0 };
        (-r * r).exp() * all * tail * measure
    };
    2.0 * simpson_composite(integrand, 0.0, v.sqrt(), intervals)
}

/// Σ_{j≥d} P(j+1, v) via Poisson probabilities accumulated by recurrence.
pub fn diagonal_oracle(v: f64, d: u64, max_j: u64) -> f64 {
    let extent = (max_j + 200) as usize;
    let mut pmf = vec![0.0f64; extent];
    pmf[0] = (-v).exp();
    for m in 1..extent {
        pmf[m] = pmf[m - 1] * v / m as f64;
    }
    let mut suffix = vec![0.0f64; extent + 1];
    for m in (0..extent).rev() {
        suffix[m] = suffix[m + 1] + pmf[m];
    }
    (d..=max_j).map(|j| suffix[j as usize + 1]).sum()
}

/// The printed DPS cross-term bound summed directly to `m_max` with
/// compensated accumulation (no certified stopping logic).
pub fn diff_oracle_printed(gamma: f64, n0: u64, l: u64, m0: u64, m_max: u64) -> f64 {
    let mut outer = CompensatedSum::new();
    for n in 0..=n0 {
        let n_fact: f64 = (1..=n).map(|i| i as f64).product();
        let mut inner = CompensatedSum::new();
        for m in m0..=m_max {
            let decay = (1.0 - gamma).powi((m - n) as i32);
            let power = ((m + l - 1) as f64).powi((l + n - 1) as i32);
            inner.add(decay * (l as f64 / n_fact) * power);
        }
        outer.add(gamma.powi(n as i32) * inner.value());
    }
    outer.value()
}

fn binom_f64(n: u64, k: u64) -> f64 {
    let kk = k.min(n - k);
    let mut r = 1.0f64;
    for i in 1..=kk {
        r *= (n - kk + i) as f64 / i as f64;
    }
    r
}

/// The exact-f_m DPS variant summed directly.
pub fn diff_oracle_exact_fm(gamma: f64, n0: u64, l: u64, m0: u64, m_max: u64) -> f64 {
    let mut outer = CompensatedSum::new();
    for n in 0..=n0 {
        let mut inner = CompensatedSum::new();
        for m in m0..=m_max {
            inner.add(
                binom_f64(m, n) * (1.0 - gamma).powi((m - n) as i32) * binom_f64(m + l - 1, l - 1),
            );
        }
        outer.add(gamma.powi(n as i32) * inner.value());
    }
    outer.value()
}

/// Number of l-tuples of nonnegative integers summing to m.
pub fn count_occupations(m: u64, l: u64) -> u64 {
    if l == 1 {
        return 1;
    }
    (0..=m)
        .map(|first| count_occupations(m - first, l - 1))
        .sum()
}

/// Plain least-squares fit `y ≈ slope·x + intercept` plus R².
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r2)
}
