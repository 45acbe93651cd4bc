//! Energy-efficiency optimization for an IRS-assisted multi-antenna uplink.
//!
//! Single-antenna users talk to a multi-antenna base station through an
//! intelligent reflecting surface (no direct link). The library jointly
//! tunes three blocks to maximize the system energy efficiency (bit/J)
//! under per-user SINR floors and power caps:
//!
//! - transmit power control (Dinkelbach fractional programming with a
//!   difference-of-concave inner loop),
//! - receive beamforming at the base station (closed-form MMSE),
//! - passive phase shifts at the surface (semidefinite relaxation with a
//!   DC outer loop and Gaussian randomization).
//!
//! The blocks alternate inside a block-coordinate-descent loop
//! ([`bcd::optimize`]) whose energy-efficiency trace is non-decreasing.
//! [`experiments`] adds a seeded Monte-Carlo harness that sweeps the power
//! budget, the number of surface elements or the number of BS antennas and
//! writes per-mode averages to CSV.
//!
//! All numerical code is generic over the real scalar type via
//! [`scalar::Real`]; `f64` aliases for the main types live at the crate
//! root.

pub mod bcd;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod mmse;
pub mod model;
pub mod phase;
pub mod power;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::{CMatrix, CVector, Real};

/// `f64` instantiations of the core types.
pub type SystemConfig64 = model::SystemConfig<f64>;
pub type ChannelSet64 = model::ChannelSet<f64>;
pub type PhaseVector64 = model::PhaseVector<f64>;
pub type PowerAllocation64 = model::PowerAllocation<f64>;
pub type BeamformerSet64 = model::BeamformerSet<f64>;
pub type SolutionState64 = model::SolutionState<f64>;
pub type ChannelParams64 = channel::ChannelParams<f64>;
pub type BcdSettings64 = bcd::BcdSettings<f64>;

/// `f32` instantiations, for callers that trade accuracy for footprint.
pub type SystemConfig32 = model::SystemConfig<f32>;
pub type ChannelSet32 = model::ChannelSet<f32>;
pub type PhaseVector32 = model::PhaseVector<f32>;
pub type PowerAllocation32 = model::PowerAllocation<f32>;
pub type BeamformerSet32 = model::BeamformerSet<f32>;
pub type SolutionState32 = model::SolutionState<f32>;
