//! Finite-dimensional filter ("effective dimension") bounds for QKD protocols
//! whose Hilbert-space dimension is unknown, plus an exact small-dimension
//! simulator that verifies every bound by brute force.
//!
//! The crate is organized around the reduction: if the POVM element that
//! describes "the measurement result fell in the accepted region" has small
//! off-diagonal weight outside a finite-dimensional subspace, the protocol is
//! well approximated by one with finite-dimensional filters in front of the
//! detectors.
//!
//! - [`numerics`]: certified series tails, incomplete gamma, log-factorials,
//!   adaptive quadrature.
//! - [`heterodyne`]: disk POVM element of heterodyne detection in the Fock
//!   basis and its off-diagonal sums, plus the minimal filter-dimension
//!   search.
//! - [`dps`]: inefficient photon-number-resolving detector bounds for
//!   differential-phase-shift protocols and the photon-cutoff search.
//! - [`hilbert`]: dense-matrix states, POVMs, measurement channels, the
//!   protocol-state constructions, and randomized brute-force verifiers.
//! - [`budget`]: security-parameter bookkeeping and end-to-end dimension
//!   planning.

pub mod budget;
pub mod dps;
pub mod heterodyne;
pub mod hilbert;
pub mod numerics;

pub use numerics::CertifiedValue;
