//! Event-driven simulation and stability analysis of pulse-coupled
//! oscillator networks with partial reset.
//!
//! Oscillators carry a membrane potential that rises to a threshold,
//! emit a pulse, and are reset. Supra-threshold input charge `zeta` is
//! not discarded on reset but mapped through a partial reset function
//! `R(zeta)`, which interpolates between the classical absorption rule
//! (`R = 0`) and full charge conservation (`R(zeta) = zeta`).
//!
//! The crate is organized around the phase representation of these
//! networks:
//!
//! * [`rise`] — rise functions `U` mapping phase to potential, with
//!   closed-form inverses and derivatives, plus the icpd/dcpd shape
//!   classifier.
//! * [`reset`] — partial reset functions.
//! * [`coupling`] — pulse coupling matrices (homogeneous all-to-all,
//!   meta-oscillator reductions, random-uniform).
//! * [`maps`] — the elementary sub-threshold (`H`), supra-threshold
//!   (`J`) and shift (`S`) maps and their compositions.
//! * [`engine`] — exact event-driven simulation: avalanche resolution,
//!   firing and return maps, event logs, cluster/periodicity detection.
//! * [`analysis`] — splay-state existence, linear stability via firing
//!   map Jacobians and the Enestroem-Kakeya bound, cluster invariance
//!   bounds, and the exact bifurcation curve for the `U_b` family.
//! * [`config`] / [`experiment`] — experiment configuration, built-in
//!   presets, seeded single runs, parallel sweeps and theory tables.

pub mod analysis;
pub mod classify;
pub mod config;
pub mod coupling;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod maps;
pub mod reset;
pub mod rise;

pub use coupling::CouplingMatrix;
pub use error::{Error, Result};
pub use reset::PartialReset;
pub use rise::{Family, RiseFunction};

/// Reset potential (normalized).
pub const RESET_POTENTIAL: f64 = 0.0;
/// Firing threshold (normalized).
pub const THRESHOLD: f64 = 1.0;
/// Free oscillation period (normalized).
pub const PERIOD: f64 = 1.0;

/// Absolute tolerance for fixed-point and round-trip comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
/// An oscillator counts as at threshold when its phase or potential is
/// within this distance of 1. Absorbs rounding from U/U^-1 round trips
/// in long event-driven chains.
pub const THRESHOLD_TOL: f64 = 1e-12;
