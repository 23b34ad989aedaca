use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{beta2_for_broadening, temp_to_phase};
use crate::scalar::wrap_phase;

/// Group-velocity dispersion that broadens a 4 ps FWHM pulse to 25 ps over
/// 50 km, obtained by inverting the Gaussian broadening law.
pub const DSF_BETA2_PS2_PER_KM: f64 = 0.712_054_410_682_895_9;

/// Pump and pair-source parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceSpec {
    /// Pump coherence time τ1 (FWHM).
    pub pump_coherence_fwhm_ps: f64,
    /// Single-photon duration τ2 (FWHM) set by the band-pass filters.
    pub photon_fwhm_ps: f64,
    /// Mean number of generated pairs per `window_base_ps`.
    pub mean_pairs_per_window: f64,
    pub window_base_ps: f64,
    /// Constant pump phase picked up across one MZI delay.
    pub pump_phase_offset_rad: f64,
}

impl Default for SourceSpec {
    fn default() -> Self {
        Self {
            pump_coherence_fwhm_ps: 4.0e6,
            photon_fwhm_ps: 4.0,
            mean_pairs_per_window: 0.05,
            window_base_ps: 60.0,
            pump_phase_offset_rad: 0.0,
        }
    }
}

impl SourceSpec {
    /// Generated pair rate in Hz, `μ / window_base`.
    pub fn pair_rate_hz(&self) -> f64 {
        self.mean_pairs_per_window / (self.window_base_ps * 1e-12)
    }

    pub fn validate(&self) -> Result<()> {
        positive("source.pump_coherence_fwhm_ps", self.pump_coherence_fwhm_ps)?;
        positive("source.photon_fwhm_ps", self.photon_fwhm_ps)?;
        positive("source.window_base_ps", self.window_base_ps)?;
        non_negative("source.mean_pairs_per_window", self.mean_pairs_per_window)?;
        finite("source.pump_phase_offset_rad", self.pump_phase_offset_rad)?;
        if self.pump_coherence_fwhm_ps <= 100.0 * self.photon_fwhm_ps {
            return Err(Error::validation(
                "source.pump_coherence_fwhm_ps",
                format!(
                    "Franson condition requires pump coherence τ1 ≫ photon duration τ2 \
                     (τ1 > 100·τ2); got τ1 = {} ps, τ2 = {} ps",
                    self.pump_coherence_fwhm_ps, self.photon_fwhm_ps
                ),
            ));
        }
        Ok(())
    }
}

/// One fiber arm: the spool plus the lumped losses upstream of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    pub fiber_length_km: f64,
    pub fiber_loss_db_per_km: f64,
    pub beta2_ps2_per_km: f64,
    pub pre_fiber_loss_db: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            fiber_length_km: 50.0,
            fiber_loss_db_per_km: 0.2,
            beta2_ps2_per_km: DSF_BETA2_PS2_PER_KM,
            pre_fiber_loss_db: 10.0,
        }
    }
}

impl ChannelSpec {
    pub fn fiber_loss_db(&self) -> f64 {
        self.fiber_length_km * self.fiber_loss_db_per_km
    }

    pub fn validate(&self, arm: &str) -> Result<()> {
        non_negative(&format!("{arm}.fiber_length_km"), self.fiber_length_km)?;
        non_negative(&format!("{arm}.fiber_loss_db_per_km"), self.fiber_loss_db_per_km)?;
        non_negative(&format!("{arm}.pre_fiber_loss_db"), self.pre_fiber_loss_db)?;
        finite(&format!("{arm}.beta2_ps2_per_km"), self.beta2_ps2_per_km)
    }
}

/// Unbalanced Mach–Zehnder analyzer.
///
/// The effective phase comes from exactly one of `phase_rad` or
/// `temperature_c`; the latter goes through the linear calibration
/// `(T − reference_temp_c)·phase_per_kelvin_rad`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzerSpec {
    pub delay_ps: f64,
    pub insertion_loss_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature_c: Option<f64>,
    pub phase_per_kelvin_rad: f64,
    pub reference_temp_c: f64,
    /// Intrinsic fringe contrast of the device.
    pub contrast: f64,
}

impl Default for AnalyzerSpec {
    fn default() -> Self {
        Self {
            delay_ps: 100.0,
            insertion_loss_db: 5.0,
            phase_rad: Some(0.0),
            temperature_c: None,
            phase_per_kelvin_rad: 0.0,
            reference_temp_c: 22.5,
            contrast: 1.0,
        }
    }
}

impl AnalyzerSpec {
    pub fn effective_phase(&self) -> f64 {
        match (self.phase_rad, self.temperature_c) {
            (Some(phase), _) => wrap_phase(phase),
            (None, Some(t)) => temp_to_phase(t, self.reference_temp_c, self.phase_per_kelvin_rad),
            (None, None) => 0.0,
        }
    }

    /// Drive the analyzer by phase, clearing any temperature setting.
    pub fn with_phase(mut self, phase: f64) -> Self {
        self.phase_rad = Some(phase);
        self.temperature_c = None;
        self
    }

    pub fn with_temperature(mut self, temp_c: f64) -> Self {
        self.temperature_c = Some(temp_c);
        self.phase_rad = None;
        self
    }

    pub fn validate(&self, arm: &str) -> Result<()> {
        positive(&format!("{arm}.delay_ps"), self.delay_ps)?;
        non_negative(&format!("{arm}.insertion_loss_db"), self.insertion_loss_db)?;
        finite(&format!("{arm}.phase_per_kelvin_rad"), self.phase_per_kelvin_rad)?;
        finite(&format!("{arm}.reference_temp_c"), self.reference_temp_c)?;
        unit_interval(&format!("{arm}.contrast"), self.contrast)?;
        match (self.phase_rad, self.temperature_c) {
            (Some(p), None) => finite(&format!("{arm}.phase_rad"), p),
            (None, Some(t)) => finite(&format!("{arm}.temperature_c"), t),
            _ => Err(Error::validation(
                format!("{arm}.phase_rad"),
                "exactly one of phase_rad or temperature_c must be set",
            )),
        }
    }
}

/// Single-photon detector response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSpec {
    pub quantum_efficiency: f64,
    pub dark_rate_hz: f64,
    /// Gaussian timing jitter τ3 (FWHM) of this detector alone.
    pub jitter_fwhm_ps: f64,
    pub dead_time_ps: f64,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self::signal()
    }
}

impl DetectorSpec {
    pub fn signal() -> Self {
        Self {
            quantum_efficiency: 0.007,
            dark_rate_hz: 100.0,
            jitter_fwhm_ps: 65.0,
            dead_time_ps: 0.0,
        }
    }

    pub fn idler() -> Self {
        Self {
            quantum_efficiency: 0.021,
            ..Self::signal()
        }
    }

    pub fn ideal() -> Self {
        Self {
            quantum_efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_fwhm_ps: 0.0,
            dead_time_ps: 0.0,
        }
    }

    pub fn validate(&self, arm: &str) -> Result<()> {
        unit_interval(&format!("{arm}.quantum_efficiency"), self.quantum_efficiency)?;
        non_negative(&format!("{arm}.dark_rate_hz"), self.dark_rate_hz)?;
        non_negative(&format!("{arm}.jitter_fwhm_ps"), self.jitter_fwhm_ps)?;
        non_negative(&format!("{arm}.dead_time_ps"), self.dead_time_ps)
    }
}

/// Time-interval-analyzer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoincidenceWindowSpec {
    pub window_ps: f64,
    pub histogram_bin_ps: f64,
}

impl Default for CoincidenceWindowSpec {
    fn default() -> Self {
        Self {
            window_ps: 100.0,
            histogram_bin_ps: 10.0,
        }
    }
}

impl CoincidenceWindowSpec {
    pub fn validate(&self) -> Result<()> {
        positive("tia.window_ps", self.window_ps)?;
        positive("tia.histogram_bin_ps", self.histogram_bin_ps)?;
        if self.histogram_bin_ps > self.window_ps {
            return Err(Error::validation(
                "tia.histogram_bin_ps",
                "histogram bin must not exceed the coincidence window",
            ));
        }
        if self.histogram_bin_ps.fract() != 0.0 || self.window_ps.fract() != 0.0 {
            return Err(Error::validation(
                "tia.window_ps",
                "window and bin must be whole picoseconds",
            ));
        }
        Ok(())
    }
}

/// Which arm each photon took through its analyzer, as `(signal, idler)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathOutcome {
    ShortShort,
    ShortLong,
    LongShort,
    LongLong,
}

impl PathOutcome {
    pub const ALL: [PathOutcome; 4] = [
        PathOutcome::ShortShort,
        PathOutcome::ShortLong,
        PathOutcome::LongShort,
        PathOutcome::LongLong,
    ];

    /// Arrival offsets of (signal, idler) in units of τ4.
    pub fn offsets(self) -> (u8, u8) {
        match self {
            PathOutcome::ShortShort => (0, 0),
            PathOutcome::ShortLong => (0, 1),
            PathOutcome::LongShort => (1, 0),
            PathOutcome::LongLong => (1, 1),
        }
    }

    /// Idler minus signal arrival, in units of τ4.
    pub fn relative_offset(self) -> i8 {
        let (s, i) = self.offsets();
        i as i8 - s as i8
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be > 0, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be >= 0, got {v}")))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must lie in [0, 1], got {v}")))
    }
}

/// β2 recomputed from the 4 ps → 25 ps @ 50 km datum.
pub fn dsf_beta2_from_datum() -> f64 {
    beta2_for_broadening(4.0, 25.0, 50.0).expect("valid datum")
}
