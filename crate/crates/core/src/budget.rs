//! Security-parameter bookkeeping and end-to-end dimension planning: composes
//! the heterodyne / DPS calculators with (N, ε) to pick filter dimensions
//! whose certified bound fits within ε³/N, and derives the composed security
//! labels of the filtered and unfiltered protocols.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dps::{
    diff_bound_with, filter_dimension, find_min_cutoff_with, DpsError, DpsParams, FmVariant,
    DEFAULT_CUTOFF_CAP,
};
use crate::heterodyne::{
    find_min_dimension, offdiag_sum, HeterodyneError, HeterodyneSide, OverlapMethod,
};
use crate::numerics::{CertifiedValue, SumOptions};

/// `(d_A d_B)² ≤ N / SMALL_DIM_FACTOR` is reported as the "filtered space is
/// much smaller than the key size" regime.
pub const SMALL_DIM_FACTOR: f64 = 100.0;

#[derive(Debug, Error)]
pub enum BudgetError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Heterodyne(#[from] HeterodyneError),
    #[error(transparent)]
    Dps(#[from] DpsError),
}

/// The ε-components of the composed security statement. `leak_ir` is carried
/// as an opaque reconciliation-leakage figure (bits) and does not enter the
/// labels.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SecurityBudget {
    pub delta: f64,
    pub eps_smooth: f64,
    pub eps_ir: f64,
    pub eps_pe: f64,
    pub leak_ir: f64,
}

impl SecurityBudget {
    pub fn new(
        delta: f64,
        eps_smooth: f64,
        eps_ir: f64,
        eps_pe: f64,
        leak_ir: f64,
    ) -> Result<Self, BudgetError> {
        for (name, v) in [
            ("delta", delta),
            ("eps_smooth", eps_smooth),
            ("eps_ir", eps_ir),
            ("eps_pe", eps_pe),
            ("leak_ir", leak_ir),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(BudgetError::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self {
            delta,
            eps_smooth,
            eps_ir,
            eps_pe,
            leak_ir,
        })
    }

    /// ε = ε' + ε'' + ε'''.
    pub fn total_epsilon(&self) -> f64 {
        self.eps_smooth + self.eps_ir + self.eps_pe
    }

    /// Security label of the unfiltered protocol: 5δ + ε.
    pub fn protocol1_security_label(&self) -> f64 {
        5.0 * self.delta + self.total_epsilon()
    }

    /// Security label of the filtered protocol: 2δ + ε.
    pub fn protocol2_security_label(&self) -> f64 {
        2.0 * self.delta + self.total_epsilon()
    }

    /// Strength of the parameter estimation when data from the unfiltered
    /// protocol stands in for the filtered one: ε''' + 2δ.
    pub fn parameter_estimation_strength(&self) -> f64 {
        self.eps_pe + 2.0 * self.delta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanProtocol {
    Heterodyne,
    Dps,
}

/// Calculator-specific inputs of a plan.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "lowercase")]
pub enum PlanParams {
    Heterodyne {
        side_a: HeterodyneSide,
        side_b: HeterodyneSide,
        method: OverlapMethod,
        /// Fraction of ε³/N assigned to side A; the rest goes to side B.
        split: f64,
    },
    Dps {
        gamma: f64,
        n0: u64,
        block_size: u64,
        variant: FmVariant,
    },
}

/// A chosen pair of filter dimensions together with the certified bound it
/// achieves against the ε³/N requirement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionPlan {
    pub protocol: PlanProtocol,
    pub params: PlanParams,
    pub n_signals: u64,
    pub epsilon: f64,
    pub d_a: u64,
    pub d_b: u64,
    /// Photon cutoff; present for DPS plans only.
    pub m0: Option<u64>,
    pub achieved_sum: CertifiedValue,
    /// ε³/N minus the certified bound; nonnegative by construction.
    pub margin: f64,
    /// Whether (d_A d_B)² ≤ N / 100 holds, i.e. the filtered space is small
    /// compared to the key size.
    pub small_dim_regime: bool,
}

/// Pick minimal filter dimensions whose certified bound fits within ε³/N.
///
/// For heterodyne links the budget is split `split : 1 - split` between the
/// two sides. For DPS the modulation side is already finite (dimension 2^l),
/// so the whole budget drives the photon-cutoff search.
pub fn plan_dimensions(
    params: &PlanParams,
    n_signals: u64,
    epsilon: f64,
) -> Result<DimensionPlan, BudgetError> {
    if n_signals < 1 {
        return Err(BudgetError::InvalidParameter(
            "need at least one signal".into(),
        ));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BudgetError::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let total_budget = epsilon.powi(3) / n_signals as f64;
    if total_budget == 0.0 {
        return Err(BudgetError::InvalidParameter(format!(
            "epsilon^3 / N underflows for epsilon={epsilon}, N={n_signals}"
        )));
    }
    match *params {
        PlanParams::Heterodyne {
            side_a,
            side_b,
            method,
            split,
        } => {
            if !(split > 0.0 && split < 1.0) {
                return Err(BudgetError::InvalidParameter(format!(
                    "split must lie in (0, 1), got {split}"
                )));
            }
            let d_a = find_min_dimension(&side_a, split * total_budget, method)?;
            let d_b = find_min_dimension(&side_b, (1.0 - split) * total_budget, method)?;
            let bound_a = offdiag_sum(&side_a, d_a, method)?.value;
            let bound_b = offdiag_sum(&side_b, d_b, method)?.value;
            let achieved = CertifiedValue::new(
                bound_a.value + bound_b.value,
                bound_a.tail_bound + bound_b.tail_bound,
            );
            finish_plan(
                PlanProtocol::Heterodyne,
                *params,
                n_signals,
                epsilon,
                d_a,
                d_b,
                None,
                achieved,
                total_budget,
            )
        }
        PlanParams::Dps {
            gamma,
            n0,
            block_size,
            variant,
        } => {
            let m0 = find_min_cutoff_with(
                gamma,
                n0,
                block_size,
                total_budget,
                variant,
                DEFAULT_CUTOFF_CAP,
                SumOptions::default(),
            )?;
            let achieved = diff_bound_with(
                &DpsParams::new(gamma, n0, block_size, m0)?,
                variant,
                SumOptions::default(),
            )?;
            let d_b = filter_dimension(m0, block_size)?;
            let d_a = 1u64
                .checked_shl(
                    block_size.try_into().map_err(|_| {
                        BudgetError::InvalidParameter("block size too large".into())
                    })?,
                )
                .ok_or_else(|| {
                    BudgetError::InvalidParameter(format!(
                        "modulation dimension 2^{block_size} overflows"
                    ))
                })?;
            finish_plan(
                PlanProtocol::Dps,
                *params,
                n_signals,
                epsilon,
                d_a,
                d_b,
                Some(m0),
                achieved,
                total_budget,
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_plan(
    protocol: PlanProtocol,
    params: PlanParams,
    n_signals: u64,
    epsilon: f64,
    d_a: u64,
    d_b: u64,
    m0: Option<u64>,
    achieved: CertifiedValue,
    total_budget: f64,
) -> Result<DimensionPlan, BudgetError> {
    let margin = total_budget - achieved.upper();
    debug_assert!(margin >= 0.0, "planner returned an infeasible dimension");
    let dims_sq = (d_a as f64 * d_b as f64).powi(2);
    Ok(DimensionPlan {
        protocol,
        params,
        n_signals,
        epsilon,
        d_a,
        d_b,
        m0,
        achieved_sum: achieved,
        margin,
        small_dim_regime: dims_sq <= n_signals as f64 / SMALL_DIM_FACTOR,
    })
}

/// One grid point of a scaling sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_signals: u64,
    pub epsilon: f64,
    pub log_ratio: f64,
    pub d_a: u64,
    pub d_b: u64,
    pub m0: Option<u64>,
    pub fitted_dimension: u64,
    pub achieved_sum: CertifiedValue,
}

/// Least-squares fit of the dimension column against ln(N/ε³).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Absent when fewer than two distinct abscissas exist.
    pub fit: Option<ScalingFit>,
}

/// Plan every (ε, N) grid point and fit the resulting dimension against
/// ln(N/ε³). Rows follow the input grid order (ε outer, N inner). The fitted
/// dimension is max(d_A, d_B) for heterodyne and the photon cutoff for DPS.
pub fn scaling_report(
    params: &PlanParams,
    epsilon_grid: &[f64],
    n_grid: &[u64],
) -> Result<ScalingReport, BudgetError> {
    if epsilon_grid.is_empty() || n_grid.is_empty() {
        return Err(BudgetError::InvalidParameter("empty grid".into()));
    }
    let mut rows = Vec::with_capacity(epsilon_grid.len() * n_grid.len());
    for &epsilon in epsilon_grid {
        for &n in n_grid {
            let plan = plan_dimensions(params, n, epsilon)?;
            let fitted_dimension = match plan.protocol {
                PlanProtocol::Heterodyne => plan.d_a.max(plan.d_b),
                PlanProtocol::Dps => plan.m0.expect("dps plan always carries m0"),
            };
            rows.push(ScalingRow {
                n_signals: n,
                epsilon,
                log_ratio: (n as f64).ln() - 3.0 * epsilon.ln(),
                d_a: plan.d_a,
                d_b: plan.d_b,
                m0: plan.m0,
                fitted_dimension,
                achieved_sum: plan.achieved_sum,
            });
        }
    }
    let fit = fit_rows(&rows);
    Ok(ScalingReport { rows, fit })
}

fn fit_rows(rows: &[ScalingRow]) -> Option<ScalingFit> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.log_ratio).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.fitted_dimension as f64).collect();
    let mean_x = xs.iter().sum::<f64>() / n as f64;
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(ScalingFit {
        slope,
        intercept,
        r_squared,
        rms_residual: (ss_res / n as f64).sqrt(),
    })
}
