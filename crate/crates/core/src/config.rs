//! Full link configuration shared by the simulator, the analytic budget and
//! the scenario runner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{
    db_to_linear, AnalyzerSpec, ChannelSpec, CoincidenceWindowSpec, DetectorSpec, SourceSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Signal,
    Idler,
}

impl Arm {
    pub fn label(self) -> &'static str {
        match self {
            Arm::Signal => "signal",
            Arm::Idler => "idler",
        }
    }
}

/// How a pre-fiber loss figure quoted for the whole link maps onto the arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossReading {
    /// The quoted figure is the sum over both arms; each arm gets half.
    #[default]
    Split,
    /// Each arm sees the full quoted figure.
    PerArm,
}

/// Itemized pre-fiber loss quoted for the link as a whole.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreFiberLoss {
    /// Waveguide propagation, reflection, scattering and pigtailing.
    pub source_pigtail_db: f64,
    /// Filters and fiber U-benches.
    pub filters_db: f64,
    pub reading: LossReading,
}

impl Default for PreFiberLoss {
    fn default() -> Self {
        Self {
            source_pigtail_db: 10.0,
            filters_db: 10.0,
            reading: LossReading::Split,
        }
    }
}

impl PreFiberLoss {
    /// `(source_pigtail, filters)` as seen by one arm.
    pub fn per_arm_items(&self) -> (f64, f64) {
        match self.reading {
            LossReading::Split => (0.5 * self.source_pigtail_db, 0.5 * self.filters_db),
            LossReading::PerArm => (self.source_pigtail_db, self.filters_db),
        }
    }

    pub fn per_arm_db(&self) -> f64 {
        let (a, b) = self.per_arm_items();
        a + b
    }
}

/// Where the quoted mean pairs per window is referenced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuReference {
    /// Pairs generated at the source, before any loss.
    #[default]
    SourceOutput,
    /// Pairs with both photons surviving the pre-fiber losses.
    AfterPreFiberLoss,
}

/// Slow timing wander of the idler channel: a random walk with Gaussian
/// steps of `step_ps` rms taken every `interval_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub step_ps: f64,
    pub interval_s: f64,
}

impl DriftSpec {
    /// Rms offset of the walk averaged over an acquisition of `span_s`,
    /// `step·sqrt(n/2)` for `n` steps.
    pub fn rms_over(&self, span_s: f64) -> f64 {
        let steps = (span_s / self.interval_s).floor();
        self.step_ps * (0.5 * steps).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default)]
    pub source: SourceSpec,
    #[serde(default)]
    pub channel_signal: ChannelSpec,
    #[serde(default)]
    pub channel_idler: ChannelSpec,
    #[serde(default)]
    pub analyzer_signal: AnalyzerSpec,
    #[serde(default)]
    pub analyzer_idler: AnalyzerSpec,
    #[serde(default = "DetectorSpec::signal")]
    pub detector_signal: DetectorSpec,
    #[serde(default = "DetectorSpec::idler")]
    pub detector_idler: DetectorSpec,
    #[serde(default)]
    pub tia: CoincidenceWindowSpec,
    pub acquisition_time_s: f64,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre_fiber: Option<PreFiberLoss>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
    #[serde(default)]
    pub mu_reference: MuReference,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        let pre_fiber = PreFiberLoss::default();
        let channel = ChannelSpec {
            pre_fiber_loss_db: pre_fiber.per_arm_db(),
            ..ChannelSpec::default()
        };
        Self {
            source: SourceSpec::default(),
            channel_signal: channel.clone(),
            channel_idler: channel,
            analyzer_signal: AnalyzerSpec::default(),
            analyzer_idler: AnalyzerSpec::default(),
            detector_signal: DetectorSpec::signal(),
            detector_idler: DetectorSpec::idler(),
            tia: CoincidenceWindowSpec::default(),
            acquisition_time_s: 1.0,
            master_seed: 1,
            pre_fiber: Some(pre_fiber),
            drift: None,
            mu_reference: MuReference::SourceOutput,
        }
    }
}

impl SimulationConfig {
    pub fn channel(&self, arm: Arm) -> &ChannelSpec {
        match arm {
            Arm::Signal => &self.channel_signal,
            Arm::Idler => &self.channel_idler,
        }
    }

    pub fn analyzer(&self, arm: Arm) -> &AnalyzerSpec {
        match arm {
            Arm::Signal => &self.analyzer_signal,
            Arm::Idler => &self.analyzer_idler,
        }
    }

    pub fn analyzer_mut(&mut self, arm: Arm) -> &mut AnalyzerSpec {
        match arm {
            Arm::Signal => &mut self.analyzer_signal,
            Arm::Idler => &mut self.analyzer_idler,
        }
    }

    pub fn detector(&self, arm: Arm) -> &DetectorSpec {
        match arm {
            Arm::Signal => &self.detector_signal,
            Arm::Idler => &self.detector_idler,
        }
    }

    /// Apply an itemized pre-fiber loss to both channels.
    pub fn with_pre_fiber(mut self, pre_fiber: PreFiberLoss) -> Self {
        let per_arm = pre_fiber.per_arm_db();
        self.channel_signal.pre_fiber_loss_db = per_arm;
        self.channel_idler.pre_fiber_loss_db = per_arm;
        self.pre_fiber = Some(pre_fiber);
        self
    }

    pub fn set_fiber_length_km(&mut self, km: f64) {
        self.channel_signal.fiber_length_km = km;
        self.channel_idler.fiber_length_km = km;
    }

    /// Power transmission of one arm from the source to the detector face,
    /// excluding the interferometer's port split and detector efficiency.
    pub fn arm_transmission(&self, arm: Arm) -> f64 {
        let ch = self.channel(arm);
        let db = ch.pre_fiber_loss_db + self.analyzer(arm).insertion_loss_db + ch.fiber_loss_db();
        db_to_linear(db)
    }

    /// Generated pair rate in Hz after resolving [`MuReference`].
    pub fn pair_rate_hz(&self) -> f64 {
        let quoted = self.source.pair_rate_hz();
        match self.mu_reference {
            MuReference::SourceOutput => quoted,
            MuReference::AfterPreFiberLoss => {
                let t = db_to_linear(self.channel_signal.pre_fiber_loss_db)
                    * db_to_linear(self.channel_idler.pre_fiber_loss_db);
                quoted / t
            }
        }
    }

    /// Phase entering the two-photon fringe, `θs + θi + φp`.
    pub fn total_phase(&self) -> f64 {
        self.analyzer_signal.effective_phase()
            + self.analyzer_idler.effective_phase()
            + self.source.pump_phase_offset_rad
    }

    pub fn contrast_total(&self) -> f64 {
        self.analyzer_signal.contrast * self.analyzer_idler.contrast
    }

    pub fn acquisition_ps(&self) -> i64 {
        (self.acquisition_time_s * 1e12).round() as i64
    }

    /// Largest analyzer delay, rounded to whole picoseconds.
    pub fn max_delay_ps(&self) -> i64 {
        self.analyzer_signal
            .delay_ps
            .max(self.analyzer_idler.delay_ps)
            .round() as i64
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.channel_signal.validate("channel_signal")?;
        self.channel_idler.validate("channel_idler")?;
        self.analyzer_signal.validate("analyzer_signal")?;
        self.analyzer_idler.validate("analyzer_idler")?;
        self.detector_signal.validate("detector_signal")?;
        self.detector_idler.validate("detector_idler")?;
        self.tia.validate()?;

        if !(self.acquisition_time_s > 0.0) || !self.acquisition_time_s.is_finite() {
            return Err(Error::validation(
                "acquisition_time_s",
                format!("must be > 0, got {}", self.acquisition_time_s),
            ));
        }
        if self.acquisition_time_s > 1.0e6 {
            return Err(Error::validation(
                "acquisition_time_s",
                "acquisitions longer than 1e6 s are not supported",
            ));
        }
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::validation(
                "master_seed",
                "seed must fit in a signed 64-bit integer",
            ));
        }

        let tau1 = self.source.pump_coherence_fwhm_ps;
        let tau2 = self.source.photon_fwhm_ps;
        for (field, a) in [
            ("analyzer_signal.delay_ps", &self.analyzer_signal),
            ("analyzer_idler.delay_ps", &self.analyzer_idler),
        ] {
            let tau4 = a.delay_ps;
            if tau4 <= tau2 {
                return Err(Error::validation(
                    field,
                    format!(
                        "Franson condition requires MZI delay τ4 > photon duration τ2; \
                         got τ4 = {tau4} ps, τ2 = {tau2} ps"
                    ),
                ));
            }
            if tau1 < 100.0 * tau4 {
                return Err(Error::validation(
                    field,
                    format!(
                        "Franson condition requires pump coherence τ1 ≫ MZI delay τ4 \
                         (τ1 >= 100·τ4); got τ1 = {tau1} ps, τ4 = {tau4} ps"
                    ),
                ));
            }
            if tau4.fract() != 0.0 {
                return Err(Error::validation(field, "delay must be whole picoseconds"));
            }
        }

        if let Some(pre) = &self.pre_fiber {
            for (name, v) in [
                ("pre_fiber.source_pigtail_db", pre.source_pigtail_db),
                ("pre_fiber.filters_db", pre.filters_db),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::validation(name, format!("must be >= 0, got {v}")));
                }
            }
            let expected = pre.per_arm_db();
            for (field, ch) in [
                ("channel_signal.pre_fiber_loss_db", &self.channel_signal),
                ("channel_idler.pre_fiber_loss_db", &self.channel_idler),
            ] {
                if (ch.pre_fiber_loss_db - expected).abs() > 1e-9 {
                    return Err(Error::validation(
                        field,
                        format!(
                            "itemized pre-fiber loss gives {expected} dB per arm under the \
                             {:?} reading, channel states {} dB",
                            pre.reading, ch.pre_fiber_loss_db
                        ),
                    ));
                }
            }
        }
        if let Some(drift) = &self.drift {
            if !(drift.step_ps >= 0.0) || !drift.step_ps.is_finite() {
                return Err(Error::validation("drift.step_ps", "must be >= 0"));
            }
            if !(drift.interval_s > 0.0) || !drift.interval_s.is_finite() {
                return Err(Error::validation("drift.interval_s", "must be > 0"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let c = SimulationConfig::default();
        c.validate().unwrap();
        assert_eq!(c.channel_signal.pre_fiber_loss_db, 10.0);
        // 10 dB pre-fiber + 5 dB MZI + 10 dB fiber
        assert!((c.arm_transmission(Arm::Signal) - 10f64.powf(-2.5)).abs() < 1e-15);
    }

    #[test]
    fn delay_not_above_photon_duration_is_rejected() {
        let mut c = SimulationConfig::default();
        c.analyzer_idler.delay_ps = 4.0;
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("Franson condition"), "{err}");
        assert!(err.contains("analyzer_idler.delay_ps"), "{err}");
    }

    #[test]
    fn inconsistent_itemized_loss_is_rejected() {
        let mut c = SimulationConfig::default();
        c.channel_idler.pre_fiber_loss_db = 20.0;
        assert!(c.validate().is_err());
        let c = SimulationConfig::default().with_pre_fiber(PreFiberLoss {
            reading: LossReading::PerArm,
            ..PreFiberLoss::default()
        });
        c.validate().unwrap();
        assert_eq!(c.channel_idler.pre_fiber_loss_db, 20.0);
    }

    #[test]
    fn mu_reference_scales_pair_rate() {
        let mut c = SimulationConfig::default();
        let base = c.pair_rate_hz();
        assert!((base - 0.05 / 60e-12).abs() < 1e-3);
        c.mu_reference = MuReference::AfterPreFiberLoss;
        assert!((c.pair_rate_hz() / base - 100.0).abs() < 1e-9);
    }

    #[test]
    fn drift_rms() {
        let d = DriftSpec {
            step_ps: 10.0,
            interval_s: 1.0,
        };
        assert!((d.rms_over(200.0) - 100.0).abs() < 1e-12);
    }
}
