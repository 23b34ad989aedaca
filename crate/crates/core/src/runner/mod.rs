//! Scenario ingestion, presets, and the end-to-end pipeline.

mod run;
mod scenario;

pub use run::{
    budget_report, emit_outputs, verdict_for, histogram_range_ps, point_config, run_scenario, BudgetReport, FitStatus,
    OutputFormat, PointRecord, RunReport, SweepRow,
};
pub use scenario::{
    config_hash, config_to_toml, ideal_config, load_config, load_scenario, preset, scenario_to_toml,
    validate_batch, OutputTargets, ScanPlan, Scenario, Sweep, SweepParameter, BACK_TO_BACK_POINT_ACQUISITION_S,
    MU_SWEEP_POINT_ACQUISITION_S, LONG_LINK_POINT_ACQUISITION_S,
    PRESET_NAMES,
};
