//! Scenario descriptions, presets and file loading.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Arm, SimulationConfig};
use crate::error::{Error, Result};
use crate::mc::HistogramMode;
use crate::physics::DetectorSpec;
use crate::tia::{Abscissa, Normalization};

/// Per-point acquisition of the 100 km presets: about 1.4e3 window counts
/// at the fringe maximum.
pub const LONG_LINK_POINT_ACQUISITION_S: f64 = 6000.0;

/// Back-to-back per-point acquisition giving the same statistics as
/// [`LONG_LINK_POINT_ACQUISITION_S`] with 20 dB less channel loss.
pub const BACK_TO_BACK_POINT_ACQUISITION_S: f64 = 60.0;

/// The μ sweep reruns every point per value, so it uses shorter points.
pub const MU_SWEEP_POINT_ACQUISITION_S: f64 = 1200.0;

pub const PRESET_NAMES: [&str; 5] = ["paper-100km", "back-to-back", "ideal", "window-sweep", "mu-sweep"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanPlan {
    #[serde(default)]
    pub abscissa: Abscissa,
    /// Explicit settings; when empty, `n_points` phases evenly cover 2π.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    pub acquisition_s: f64,
    /// Analyzer whose setting is scanned; the other stays as configured.
    #[serde(default = "default_scanned")]
    pub scanned_arm: Arm,
    #[serde(default)]
    pub mode: HistogramMode,
    #[serde(default)]
    pub normalization: Normalization,
}

fn default_scanned() -> Arm {
    Arm::Idler
}

impl ScanPlan {
    pub fn phases(n_points: usize, acquisition_s: f64) -> Self {
        Self {
            abscissa: Abscissa::PhaseRad,
            points: Vec::new(),
            n_points: Some(n_points),
            acquisition_s,
            scanned_arm: Arm::Idler,
            mode: HistogramMode::Auto,
            normalization: Normalization::AcquisitionTime,
        }
    }

    pub fn settings(&self) -> Vec<f64> {
        if !self.points.is_empty() {
            return self.points.clone();
        }
        let n = self.n_points.unwrap_or(0);
        (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.settings().is_empty() {
            return Err(Error::validation("scan.points", "fringe scan needs at least one point"));
        }
        if self.settings().iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("scan.points", "settings must be finite"));
        }
        if !(self.acquisition_s > 0.0) || !self.acquisition_s.is_finite() {
            return Err(Error::validation("scan.acquisition_s", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    WindowPs,
    MeanPairsPerWindow,
}

/// A one-parameter family of runs around the scenario's configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputTargets {
    pub scan: bool,
    pub report: bool,
    pub histograms: bool,
}

impl Default for OutputTargets {
    fn default() -> Self {
        Self {
            scan: true,
            report: true,
            histograms: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub config: SimulationConfig,
    pub scan: ScanPlan,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub outputs: OutputTargets,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::validation("name", "scenario name must not be empty"));
        }
        self.config.validate()?;
        self.scan.validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(Error::validation("sweep.values", "sweep needs at least one value"));
            }
            let mut seen = sweep.values.clone();
            seen.sort_by(|a, b| a.total_cmp(b));
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::validation("sweep.values", "sweep values must be unique"));
            }
        }
        Ok(())
    }

    /// Sha-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        hash_json(self)
    }
}

/// Validate a set of scenarios meant to run together.
pub fn validate_batch(scenarios: &[Scenario]) -> Result<()> {
    for (i, s) in scenarios.iter().enumerate() {
        s.validate()?;
        if scenarios[..i].iter().any(|o| o.name == s.name) {
            return Err(Error::validation("name", format!("duplicate scenario name `{}`", s.name)));
        }
    }
    Ok(())
}

fn hash_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}

pub fn config_hash(cfg: &SimulationConfig) -> String {
    hash_json(cfg)
}

pub fn ideal_config() -> SimulationConfig {
    let mut cfg = SimulationConfig::default();
    cfg.pre_fiber = None;
    for arm in [Arm::Signal, Arm::Idler] {
        cfg.analyzer_mut(arm).insertion_loss_db = 0.0;
    }
    cfg.channel_signal.pre_fiber_loss_db = 0.0;
    cfg.channel_idler.pre_fiber_loss_db = 0.0;
    cfg.set_fiber_length_km(0.0);
    cfg.detector_signal = DetectorSpec::ideal();
    cfg.detector_idler = DetectorSpec::ideal();
    cfg.source.mean_pairs_per_window = 1e-6;
    cfg
}

pub fn preset(name: &str) -> Result<Scenario> {
    let link = |name: &str, km: f64, acquisition_s: f64| {
        let mut config = SimulationConfig::default();
        config.set_fiber_length_km(km);
        Scenario {
            name: name.to_string(),
            config,
            scan: ScanPlan::phases(16, acquisition_s),
            sweep: None,
            outputs: OutputTargets::default(),
        }
    };
    let scenario = match name {
        "paper-100km" => link(name, 50.0, LONG_LINK_POINT_ACQUISITION_S),
        "back-to-back" => link(name, 0.0, BACK_TO_BACK_POINT_ACQUISITION_S),
        "ideal" => Scenario {
            name: name.to_string(),
            config: ideal_config(),
            scan: ScanPlan::phases(16, 4.0),
            sweep: None,
            outputs: OutputTargets::default(),
        },
        "window-sweep" => Scenario {
            sweep: Some(Sweep {
                parameter: SweepParameter::WindowPs,
                values: (0..9).map(|k| 60.0 + 10.0 * k as f64).collect(),
            }),
            ..link(name, 50.0, LONG_LINK_POINT_ACQUISITION_S)
        },
        "mu-sweep" => Scenario {
            sweep: Some(Sweep {
                parameter: SweepParameter::MeanPairsPerWindow,
                values: vec![0.01, 0.02, 0.05, 0.1, 0.2],
            }),
            ..link(name, 50.0, MU_SWEEP_POINT_ACQUISITION_S)
        },
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown preset `{other}`; known presets: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(scenario)
}

fn read_text(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            column: 1,
            message: "file is empty".into(),
        });
    }
    Ok(text)
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((1, 1), |s| line_col(text, s.start));
        Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

/// Load and validate a [`SimulationConfig`] from TOML. Unknown keys are
/// rejected.
pub fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = read_text(path)?;
    let cfg: SimulationConfig = parse_toml(path, &text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn config_to_toml(cfg: &SimulationConfig) -> String {
    toml::to_string(cfg).expect("config serializes to TOML")
}

pub fn scenario_to_toml(s: &Scenario) -> String {
    toml::to_string(s).expect("scenario serializes to TOML")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    preset: Option<String>,
    config: Option<SimulationConfig>,
    scan: Option<ScanPlan>,
    sweep: Option<Sweep>,
    outputs: Option<OutputTargets>,
}

/// Load a scenario from TOML. A `preset = "<name>"` key starts from that
/// preset; any of `config`, `scan`, `sweep` and `outputs` given in the file
/// replace the preset's table wholesale.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = read_text(path)?;
    let file: ScenarioFile = parse_toml(path, &text)?;
    let mut scenario = match &file.preset {
        Some(p) => preset(p)?,
        None => {
            let missing = |field: &str| Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                column: 1,
                message: format!("missing `{field}` (or a `preset` to start from)"),
            };
            Scenario {
                name: String::new(),
                config: file.config.clone().ok_or_else(|| missing("config"))?,
                scan: file.scan.clone().ok_or_else(|| missing("scan"))?,
                sweep: None,
                outputs: OutputTargets::default(),
            }
        }
    };
    if let Some(c) = file.config {
        scenario.config = c;
    }
    if let Some(s) = file.scan {
        scenario.scan = s;
    }
    if file.sweep.is_some() {
        scenario.sweep = file.sweep;
    }
    if let Some(o) = file.outputs {
        scenario.outputs = o;
    }
    scenario.name = file
        .name
        .or(file.preset)
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "scenario".into());
    scenario.validate()?;
    Ok(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_carry_link_values() {
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
        let p = preset("paper-100km").unwrap();
        assert_eq!(p.config.analyzer_signal.delay_ps, 100.0);
        assert_eq!(p.config.detector_signal.jitter_fwhm_ps, 65.0);
        assert_eq!(p.config.source.mean_pairs_per_window, 0.05);
        assert_eq!(p.config.channel_signal.fiber_length_km + p.config.channel_idler.fiber_length_km, 100.0);
        assert_eq!(p.config.tia.window_ps, 100.0);
        assert_eq!(p.scan.settings().len(), 16);
        assert!(preset("nope").is_err());
    }

    #[test]
    fn line_and_column() {
        assert_eq!(line_col("ab\ncd\nef", 4), (2, 2));
        assert_eq!(line_col("x", 0), (1, 1));
    }

    #[test]
    fn duplicate_names_rejected() {
        let a = preset("ideal").unwrap();
        assert!(validate_batch(&[a.clone(), a]).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = preset("paper-100km").unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.config.master_seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
