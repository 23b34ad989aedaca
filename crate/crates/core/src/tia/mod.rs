//! Time-interval-analyzer emulation and fringe analysis.

mod fringe;
mod histogram;

pub use fringe::{
    fit_fringe, fit_fringe_with, visibility_from_extrema, visibility_from_extrema_with, Abscissa,
    EstimateMethod, FitOptions, FringePoint, FringeScan, Normalization, VisibilityEstimate,
};
pub use histogram::{build_histogram, build_histogram_for_delay, count_in_window, DelayHistogram};
