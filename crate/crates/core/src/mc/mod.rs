//! Seeded event-level Monte Carlo of the link.

mod clicks;
mod detector;
mod engine;
mod paths;
mod process;
pub mod rng;

pub use clicks::{
    encode_binary, encode_text, read_clicks, write_clicks, write_text, ClickFormat, ClickHeader,
    ClickStream,
};
pub use detector::{detect, dispersive_excess_sigma, dispersive_spread, gaussian_spread, timing_response};
pub use engine::{
    run_simulation, run_simulation_with, simulate_explicit, simulate_histogram, Diagnostics,
    EngineOptions, ExplicitOutput, HistogramMode, PairEmission, PointCounts, SimulationOutput,
    DEFAULT_CHUNK_S, EXPLICIT_MAX_PAIRS,
};
pub use paths::{sample_pair_paths, JointPathModel, PortOutcome, PortPath};
pub use process::{binomial_count, generate_emissions, poisson_count, thin_by_loss, uniform_times};
pub use rng::{derive_seed, stage_rng, SimRng, Stage};
