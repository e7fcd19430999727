//! Argument definitions. Every flag that affects a computation is echoed
//! back in the report's `config` object with defaults resolved.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use effdim::budget::PlanParams;
use effdim::dps::FmVariant;
use effdim::heterodyne::{HeterodyneSide, OverlapMethod, SideLabel};

use crate::report::OutputFormat;
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "effdim",
    version,
    about = "Finite-dimensional filter bounds for unknown-dimensional QKD protocols"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    /// Radial-form bound as printed (measure dr).
    Paper,
    /// Radial-form bound with the polar measure r dr.
    Polar,
    /// Exact diagonal incomplete-gamma tail.
    Exact,
}

impl From<MethodArg> for OverlapMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Paper => OverlapMethod::PaperLiteral,
            MethodArg::Polar => OverlapMethod::PaperLiteralPolar,
            MethodArg::Exact => OverlapMethod::ExactDiagonal,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToleranceArgs {
    /// Relative tolerance for certified series summation.
    #[arg(long, default_value_t = effdim::numerics::DEFAULT_SUM_REL_TOL)]
    pub sum_tol: f64,
    /// Relative tolerance target for the radial quadrature.
    #[arg(long, default_value_t = effdim::numerics::DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
}

/// Protocol-specific parameters shared by `plan` and `scaling`.
#[derive(Debug, Args)]
pub struct ProtocolArgs {
    /// Which protocol to plan for.
    #[arg(long, value_enum)]
    pub protocol: ProtocolKind,
    /// Acceptance-disk radius squared for both sides (heterodyne).
    #[arg(long)]
    pub vmax: Option<f64>,
    /// Side-A override of --vmax.
    #[arg(long)]
    pub vmax_a: Option<f64>,
    /// Side-B override of --vmax.
    #[arg(long)]
    pub vmax_b: Option<f64>,
    /// Off-diagonal sum evaluation method (heterodyne).
    #[arg(long, value_enum, default_value = "paper")]
    pub method: MethodArg,
    /// Fraction of the budget assigned to side A (heterodyne).
    #[arg(long, default_value_t = 0.5)]
    pub split: f64,
    /// Detector efficiency in (0, 1] (DPS).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Maximum observed photon count per block (DPS).
    #[arg(long)]
    pub n0: Option<u64>,
    /// Block length / number of modes (DPS).
    #[arg(long)]
    pub block_size: Option<u64>,
    /// Use the exact subspace dimension instead of the printed bound (DPS).
    #[arg(long)]
    pub exact_fm: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolKind {
    Hetero,
    Dps,
}

impl ProtocolArgs {
    pub fn to_plan_params(&self) -> Result<PlanParams, CliError> {
        match self.protocol {
            ProtocolKind::Hetero => {
                let v_a = self.vmax_a.or(self.vmax).ok_or_else(|| {
                    CliError::InvalidArguments(
                        "heterodyne planning needs --vmax or --vmax-a".into(),
                    )
                })?;
                let v_b = self.vmax_b.or(self.vmax).ok_or_else(|| {
                    CliError::InvalidArguments(
                        "heterodyne planning needs --vmax or --vmax-b".into(),
                    )
                })?;
                Ok(PlanParams::Heterodyne {
                    side_a: HeterodyneSide::new(v_a, SideLabel::A)?,
                    side_b: HeterodyneSide::new(v_b, SideLabel::B)?,
                    method: self.method.into(),
                    split: self.split,
                })
            }
            ProtocolKind::Dps => {
                let gamma = self.gamma.ok_or_else(|| {
                    CliError::InvalidArguments("DPS planning needs --gamma".into())
                })?;
                let n0 = self
                    .n0
                    .ok_or_else(|| CliError::InvalidArguments("DPS planning needs --n0".into()))?;
                let block_size = self.block_size.ok_or_else(|| {
                    CliError::InvalidArguments("DPS planning needs --block-size".into())
                })?;
                Ok(PlanParams::Dps {
                    gamma,
                    n0,
                    block_size,
                    variant: if self.exact_fm {
                        FmVariant::ExactFm
                    } else {
                        FmVariant::PaperBound
                    },
                })
            }
        }
    }
}

/// Three comma-separated dimensions `a,b,e`.
#[derive(Debug, Clone, Copy)]
pub struct DimsArg(pub [usize; 3]);

pub fn parse_dims(s: &str) -> Result<DimsArg, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated dimensions a,b,e".into());
    }
    let mut dims = [0usize; 3];
    for (slot, part) in dims.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("`{part}` is not a dimension"))?;
    }
    Ok(DimsArg(dims))
}

/// Parse integers that may be written in scientific notation (e.g. 1e9).
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s
        .parse()
        .map_err(|_| format!("`{s}` is not a nonnegative integer"))?;
    if !f.is_finite() || f < 0.0 || f > u64::MAX as f64 || f.fract() != 0.0 {
        return Err(format!("`{s}` is not a nonnegative integer"));
    }
    Ok(f as u64)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heterodyne off-diagonal sum for a filter dimension, or the minimal
    /// dimension fitting a budget.
    Hetero {
        /// Maximum accepted p² + q² (vacuum-variance units).
        #[arg(long)]
        vmax: f64,
        /// Evaluate the off-diagonal sum at this filter dimension.
        #[arg(long, group = "mode", required = true)]
        d: Option<u64>,
        /// Search the smallest dimension whose certified sum fits.
        #[arg(long, group = "mode")]
        budget: Option<f64>,
        #[arg(long, value_enum, default_value = "paper")]
        method: MethodArg,
        /// Dimension-search cap.
        #[arg(long, default_value_t = effdim::heterodyne::DEFAULT_DIMENSION_CAP)]
        dim_cap: u64,
        #[command(flatten)]
        tolerances: ToleranceArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// DPS cross-term bound at a photon cutoff, or the minimal cutoff
    /// fitting a budget.
    Dps {
        /// Detector efficiency in (0, 1].
        #[arg(long)]
        gamma: f64,
        /// Maximum observed photon count per block.
        #[arg(long)]
        n0: u64,
        /// Block length (number of modes).
        #[arg(long)]
        block_size: u64,
        /// Evaluate the bound at this cutoff.
        #[arg(long, group = "mode", required = true)]
        m0: Option<u64>,
        /// Search the smallest cutoff whose certified bound fits.
        #[arg(long, group = "mode")]
        budget: Option<f64>,
        /// Use the exact subspace dimension instead of the printed bound.
        #[arg(long)]
        exact_fm: bool,
        /// Cutoff-search cap.
        #[arg(long, default_value_t = effdim::dps::DEFAULT_CUTOFF_CAP)]
        cutoff_cap: u64,
        #[command(flatten)]
        tolerances: ToleranceArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Pick filter dimensions meeting the ε³/N requirement.
    Plan {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Requirement parameter ε in (0, 1).
        #[arg(long)]
        epsilon: f64,
        /// Number of signals N.
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Composed security labels from the ε-budget components.
    Budget {
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        eps_smooth: f64,
        #[arg(long)]
        eps_ir: f64,
        #[arg(long)]
        eps_pe: f64,
        /// Reconciliation leakage in bits (carried through, not used in labels).
        #[arg(long, default_value_t = 0.0)]
        leak_ir: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Brute-force the dimension-reduction bound on random instances.
    VerifyTheorem1 {
        /// Per-system dimension of both sides.
        #[arg(long)]
        dim: usize,
        /// Filter cutoff on both sides.
        #[arg(long)]
        cutoff: usize,
        /// Number of signal pairs per instance.
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_count)]
        trials: u64,
        /// Base seed; per-trial seeds derive from it.
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check trace_distance ≤ 2|β| on random protocol instances.
    VerifyBeta {
        /// Comma-separated side and environment dimensions a,b,e.
        #[arg(long, value_parser = parse_dims)]
        dims: DimsArg,
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_count)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the weighted Cauchy-Schwarz step on random operators.
    VerifyLemma {
        #[arg(long)]
        dim: usize,
        #[arg(long, value_parser = parse_count)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Sweep (ε, N) grids and fit the chosen dimension against ln(N/ε³).
    Scaling {
        #[command(flatten)]
        protocol: ProtocolArgs,
        /// Comma-separated ε grid.
        #[arg(long, value_delimiter = ',', required = true)]
        eps_grid: Vec<f64>,
        /// Comma-separated N grid (scientific notation allowed).
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_count)]
        n_grid: Vec<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}
