//! Analytic link budget: loss ledgers, expected rates, predicted
//! visibility and coincidence-window optimization.

use serde::{Deserialize, Serialize};

use crate::config::{Arm, LossReading, SimulationConfig};
use crate::error::{Error, Result};
use crate::physics::{
    accidental_rate, chsh_from_visibility, db_to_linear, dispersion_broaden, franson_bin_probabilities,
    fwhm_to_sigma,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossEntry {
    pub label: String,
    pub db: f64,
}

/// Ordered loss items of one arm.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossLedger {
    pub entries: Vec<LossEntry>,
}

impl LossLedger {
    pub fn push(&mut self, label: impl Into<String>, db: f64) {
        self.entries.push(LossEntry {
            label: label.into(),
            db,
        });
    }

    pub fn total_db(&self) -> f64 {
        self.entries.iter().map(|e| e.db).sum()
    }

    pub fn transmission(&self) -> f64 {
        db_to_linear(self.total_db())
    }

    pub fn concat(&self, other: &LossLedger) -> LossLedger {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        LossLedger { entries }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("item,loss_db\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.label, e.db));
        }
        out.push_str(&format!("total,{}\n", self.total_db()));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkLedger {
    pub signal: LossLedger,
    pub idler: LossLedger,
    /// How an itemized pre-fiber figure was assigned to the arms, if one
    /// was given.
    pub reading: Option<LossReading>,
}

impl LinkLedger {
    pub fn arm(&self, arm: Arm) -> &LossLedger {
        match arm {
            Arm::Signal => &self.signal,
            Arm::Idler => &self.idler,
        }
    }
}

pub fn build_ledger(cfg: &SimulationConfig) -> LinkLedger {
    let arm_ledger = |arm: Arm| {
        let mut l = LossLedger::default();
        let ch = cfg.channel(arm);
        match &cfg.pre_fiber {
            Some(pre) => {
                let (pigtail, filters) = pre.per_arm_items();
                l.push("source/pigtail", pigtail);
                l.push("filters", filters);
            }
            None => l.push("pre-fiber", ch.pre_fiber_loss_db),
        }
        l.push("MZI insertion", cfg.analyzer(arm).insertion_loss_db);
        l.push("fiber", ch.fiber_loss_db());
        l
    };
    LinkLedger {
        signal: arm_ledger(Arm::Signal),
        idler: arm_ledger(Arm::Idler),
        reading: cfg.pre_fiber.as_ref().map(|p| p.reading),
    }
}

/// Expected rates in Hz.
///
/// Singles include the factor 1/2 for the single monitored analyzer port.
/// The accidental rate is the product-rate floor over one coincidence
/// window, split into its dark–dark, dark–photon and photon–photon parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub pair_rate_hz: f64,
    pub singles_signal_hz: f64,
    pub singles_idler_hz: f64,
    /// Pairs with both photons transmitted and within detector efficiency,
    /// before analyzer port selection: `R·Ts·ηs·Ti·ηi`.
    pub true_coincidence_hz: f64,
    /// Pairs registered at both monitored ports at the configured phases,
    /// over all three delay peaks.
    pub monitored_coincidence_hz: f64,
    /// Central-peak rate at the fringe maximum.
    pub central_bin_hz: f64,
    pub accidental_hz: f64,
    pub accidental_dark_dark_hz: f64,
    pub accidental_dark_photon_hz: f64,
    pub accidental_photon_photon_hz: f64,
    pub window_ps: f64,
    pub loss_reading: Option<LossReading>,
}

pub fn predict_rates(cfg: &SimulationConfig) -> Result<RatePrediction> {
    cfg.validate()?;
    let r = cfg.pair_rate_hz();
    let us = cfg.arm_transmission(Arm::Signal) * cfg.detector_signal.quantum_efficiency;
    let ui = cfg.arm_transmission(Arm::Idler) * cfg.detector_idler.quantum_efficiency;
    let photon_s = 0.5 * r * us;
    let photon_i = 0.5 * r * ui;
    let (dark_s, dark_i) = (cfg.detector_signal.dark_rate_hz, cfg.detector_idler.dark_rate_hz);
    let w = cfg.tia.window_ps * 1e-12;
    let bins = franson_bin_probabilities(
        cfg.analyzer_signal.effective_phase(),
        cfg.analyzer_idler.effective_phase(),
        cfg.source.pump_phase_offset_rad,
        cfg.contrast_total(),
    )?;
    let true_coinc = r * us * ui;
    let dd = accidental_rate(dark_s, dark_i, w);
    let dp = accidental_rate(dark_s, photon_i, w) + accidental_rate(photon_s, dark_i, w);
    let pp = accidental_rate(photon_s, photon_i, w);
    Ok(RatePrediction {
        pair_rate_hz: r,
        singles_signal_hz: photon_s + dark_s,
        singles_idler_hz: photon_i + dark_i,
        true_coincidence_hz: true_coinc,
        monitored_coincidence_hz: true_coinc * bins.joint(),
        central_bin_hz: true_coinc * (1.0 + cfg.contrast_total()) / 8.0,
        accidental_hz: dd + dp + pp,
        accidental_dark_dark_hz: dd,
        accidental_dark_photon_hz: dp,
        accidental_photon_photon_hz: pp,
        window_ps: cfg.tia.window_ps,
        loss_reading: cfg.pre_fiber.as_ref().map(|p| p.reading),
    })
}

/// Standard deviation (ps) of the idler-minus-signal delay within one
/// peak: both detectors' jitter, both photons' dispersed widths and the
/// drift walk's rms over the acquisition.
pub fn delay_sigma_ps(cfg: &SimulationConfig) -> Result<f64> {
    let mut var = 0.0;
    for arm in [Arm::Signal, Arm::Idler] {
        let ch = cfg.channel(arm);
        let width = dispersion_broaden(cfg.source.photon_fwhm_ps, ch.beta2_ps2_per_km, ch.fiber_length_km)?;
        var += fwhm_to_sigma(width).powi(2) + fwhm_to_sigma(cfg.detector(arm).jitter_fwhm_ps).powi(2);
    }
    if let Some(d) = &cfg.drift {
        var += d.rms_over(cfg.acquisition_time_s).powi(2);
    }
    Ok(var.sqrt())
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Fraction of a Gaussian peak centred at `mu` that falls in `[−w/2, w/2]`.
fn captured(mu: f64, sigma: f64, window_ps: f64) -> f64 {
    let h = 0.5 * window_ps;
    if sigma == 0.0 {
        return if mu.abs() <= h { 1.0 } else { 0.0 };
    }
    normal_cdf((h - mu) / sigma) - normal_cdf((-h - mu) / sigma)
}

/// Expected coincidences in a window centred on the central peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowPrediction {
    pub window_ps: f64,
    /// Fraction of the central peak inside the window.
    pub capture: f64,
    /// Fraction of one side peak inside the window.
    pub side_leak: f64,
    /// Central-peak rate at the configured phases.
    pub central_hz: f64,
    /// Central-peak rate at the fringe maximum and minimum.
    pub central_max_hz: f64,
    pub central_min_hz: f64,
    pub side_leak_hz: f64,
    pub accidental_hz: f64,
    pub visibility: f64,
}

impl WindowPrediction {
    pub fn total_hz(&self) -> f64 {
        self.central_hz + self.side_leak_hz + self.accidental_hz
    }
}

/// Window prediction for an arbitrary window width (otherwise using `cfg`).
pub fn predict_window(cfg: &SimulationConfig, window_ps: f64) -> Result<WindowPrediction> {
    let mut c = cfg.clone();
    c.tia.window_ps = window_ps;
    let rates = predict_rates(&c)?;
    let sigma = delay_sigma_ps(&c)?;
    let tau4 = 0.5 * (c.analyzer_signal.delay_ps + c.analyzer_idler.delay_ps);
    let capture = captured(0.0, sigma, window_ps);
    let side_leak = captured(tau4, sigma, window_ps);
    let contrast = c.contrast_total();
    let p_c = franson_bin_probabilities(
        c.analyzer_signal.effective_phase(),
        c.analyzer_idler.effective_phase(),
        c.source.pump_phase_offset_rad,
        contrast,
    )?
    .central;
    let t = rates.true_coincidence_hz;
    let leak_hz = t * 2.0 / 16.0 * side_leak;
    let c_max = t * (1.0 + contrast) / 8.0 * capture;
    let c_min = t * (1.0 - contrast) / 8.0 * capture;
    let floor = leak_hz + rates.accidental_hz;
    let visibility = if c_max + c_min + 2.0 * floor > 0.0 {
        (c_max - c_min) / (c_max + c_min + 2.0 * floor)
    } else {
        0.0
    };
    Ok(WindowPrediction {
        window_ps,
        capture,
        side_leak,
        central_hz: t * p_c * capture,
        central_max_hz: c_max,
        central_min_hz: c_min,
        side_leak_hz: leak_hz,
        accidental_hz: rates.accidental_hz,
        visibility,
    })
}

/// Predicted fringe visibility for the configured window,
/// `contrast·C / (C + 2(A + L))` with `C` the captured central-peak rate
/// amplitude, `A` the accidental floor and `L` the side-peak leakage into
/// the window.
pub fn predict_visibility(cfg: &SimulationConfig) -> Result<f64> {
    Ok(predict_window(cfg, cfg.tia.window_ps)?.visibility)
}

/// Result of fitting the analyzer contrast to a target visibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastCalibration {
    /// Contrast applied to each analyzer; the fringe sees its square.
    pub per_analyzer: f64,
    pub predicted_visibility: f64,
    /// True when even unit contrast falls short of the target.
    pub saturated: bool,
}

/// Choose one contrast, shared by both analyzers, so that
/// [`predict_visibility`] hits `target`. Contrast cannot exceed 1; if the
/// target is out of reach the result is unit contrast with `saturated` set.
pub fn calibrate_contrast(cfg: &SimulationConfig, target: f64) -> Result<ContrastCalibration> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidInput(format!("target visibility must lie in [0, 1], got {target}")));
    }
    let v_at = |c: f64| {
        let mut k = cfg.clone();
        k.analyzer_signal.contrast = c;
        k.analyzer_idler.contrast = c;
        predict_visibility(&k)
    };
    let v_max = v_at(1.0)?;
    if v_max <= target {
        return Ok(ContrastCalibration {
            per_analyzer: 1.0,
            predicted_visibility: v_max,
            saturated: v_max < target,
        });
    }
    // V is increasing in the contrast.
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if v_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ContrastCalibration {
        per_analyzer: hi,
        predicted_visibility: v_at(hi)?,
        saturated: false,
    })
}

/// Copy of `cfg` with both analyzers set to the calibrated contrast.
pub fn with_contrast(cfg: &SimulationConfig, cal: &ContrastCalibration) -> SimulationConfig {
    let mut k = cfg.clone();
    k.analyzer_signal.contrast = cal.per_analyzer;
    k.analyzer_idler.contrast = cal.per_analyzer;
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowObjective {
    /// CHSH value `S = 2√2·V`.
    #[default]
    ChshS,
    /// `V²·rate`, with rate the captured central-peak rate at maximum.
    RateWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub window_ps: f64,
    pub capture: f64,
    pub visibility: f64,
    pub rate_hz: f64,
    pub s_value: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOptimization {
    pub best_window_ps: f64,
    pub objective: WindowObjective,
    pub table: Vec<WindowRow>,
}

impl WindowOptimization {
    pub fn row(&self, window_ps: f64) -> Option<&WindowRow> {
        self.table.iter().find(|r| r.window_ps == window_ps)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_ps,capture,visibility,rate_hz,s_value,objective\n");
        for r in &self.table {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.window_ps, r.capture, r.visibility, r.rate_hz, r.s_value, r.objective
            ));
        }
        out
    }
}

/// Evaluate each window and return the one maximizing `objective`; ties
/// go to the smallest window. Windows of `2τ4` or more would take in whole
/// side peaks and are rejected.
pub fn optimize_window(
    cfg: &SimulationConfig,
    grid_ps: &[f64],
    objective: WindowObjective,
) -> Result<WindowOptimization> {
    if grid_ps.is_empty() {
        return Err(Error::InvalidInput("window grid is empty".into()));
    }
    let limit = 2.0 * cfg.analyzer_signal.delay_ps.min(cfg.analyzer_idler.delay_ps);
    let mut table = Vec::with_capacity(grid_ps.len());
    for &w in grid_ps {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidInput(format!("window must be > 0 ps, got {w}")));
        }
        if w >= limit {
            return Err(Error::InvalidInput(format!(
                "window {w} ps reaches the side peaks (must be < 2τ4 = {limit} ps)"
            )));
        }
        let p = predict_window(cfg, w)?;
        let s = chsh_from_visibility(p.visibility.clamp(0.0, 1.0))?.s_value;
        let score = match objective {
            WindowObjective::ChshS => s,
            WindowObjective::RateWeighted => p.visibility.powi(2) * p.central_max_hz,
        };
        table.push(WindowRow {
            window_ps: w,
            capture: p.capture,
            visibility: p.visibility,
            rate_hz: p.central_max_hz,
            s_value: s,
            objective: score,
        });
    }
    let best = table
        .iter()
        .fold(None::<&WindowRow>, |best, r| match best {
            None => Some(r),
            Some(b) if r.objective > b.objective => Some(r),
            Some(b) if r.objective == b.objective && r.window_ps < b.window_ps => Some(r),
            Some(b) => Some(b),
        })
        .expect("non-empty grid");
    Ok(WindowOptimization {
        best_window_ps: best.window_ps,
        objective,
        table,
    })
}
