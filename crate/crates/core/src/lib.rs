//! Simulation and analysis of time-energy entanglement distribution over
//! fiber with unbalanced Mach-Zehnder analyzers (Franson interferometry).
//!
//! The crate is split the way the experiment is:
//!
//! - [`physics`]: closed-form interference, dispersion, dB and CHSH formulas,
//!   generic over [`Real`].
//! - [`mc`]: seeded Monte Carlo of pair emission, channels, analyzers and
//!   detectors, producing sorted click streams.
//! - [`tia`]: start/stop histograms, coincidence windows and fringe fits.
//! - [`budget`]: loss ledgers, rate and visibility prediction, window choice.
//! - [`runner`]: scenarios, presets and the simulate → fit → verdict pipeline.
//!
//! ```
//! use franson_core::physics::chsh_from_visibility;
//! let v = chsh_from_visibility(0.805_f64).unwrap();
//! assert!(v.violates);
//! ```

pub mod budget;
pub mod config;
pub mod error;
pub mod mc;
pub mod physics;
pub mod runner;
pub mod scalar;
pub mod tia;

pub use config::SimulationConfig;
pub use error::{Error, Result};
pub use scalar::Real;

/// Bin probabilities at the crate's default precision.
pub type BinProbabilities = physics::BinProbabilities<f64>;
pub type Verdict = physics::ChshVerdict<f64>;
pub type Branch = physics::Branch<f64>;

/// Single-precision variants, for callers evaluating formulas in bulk.
pub type BinProbabilitiesF32 = physics::BinProbabilities<f32>;
pub type VerdictF32 = physics::ChshVerdict<f32>;
