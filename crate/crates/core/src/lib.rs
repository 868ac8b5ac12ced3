//! Classical free particles carrying an action phase, and a detector that
//! aggregates those phases per bin into a recorded count.
//!
//! The crate is organised the way a run flows:
//!
//! * [`model`] samples particles and moves them (free flight, hard wall,
//!   straight photon rays) while accumulating their phase.
//! * [`detector`] bins particle positions at a snapshot time and keeps one
//!   complex phase accumulator per arrival channel. A finalized bin reports
//!   both the raw count `N` and the recorded count `N̄ = |Σ_k S_k/√N_k|²`.
//! * [`scenario`] holds the registered experiments and the deterministic
//!   parallel runner.
//! * [`reference`] provides Schrödinger solutions, large-time approximations,
//!   a Crank–Nicolson propagator and the comparison metrics.
//!
//! Massive-particle quantities are expressed in the dimensionless system of
//! [`units::SimulationUnits`] (`ħ/m = σ_v = 1`). Photon quantities are SI.

pub mod detector;
pub mod model;
pub mod reference;
pub mod scenario;
pub mod units;

pub use detector::{ChannelAccumulator, DensityProfile, DetectionBin, DetectorArray, DetectorError, DetectorLayout};
pub use model::{Particle, PhotonGeometry, VelocityDistribution};
pub use scenario::{ScenarioConfig, ScenarioError, ScenarioKind};
