//! Joint path sampling through the two analyzers.
//!
//! Two-photon interference only exists at the level of the joint outcome,
//! so paths are drawn from the analytic joint distribution rather than from
//! independent per-photon coin flips.

use rand::Rng;

use crate::error::Result;
use crate::physics::{franson_bin_probabilities, BinProbabilities, PathOutcome};

/// Where one photon of a pair ended up: not at the monitored port, or at
/// the monitored port via the short or long arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PortPath {
    Unmonitored,
    Short,
    Long,
}

impl PortPath {
    pub fn is_monitored(self) -> bool {
        !matches!(self, PortPath::Unmonitored)
    }

    pub fn is_long(self) -> bool {
        matches!(self, PortPath::Long)
    }
}

/// Full per-pair outcome at both analyzers' output ports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PortOutcome {
    pub signal: PortPath,
    pub idler: PortPath,
}

impl PortOutcome {
    /// Joint path when both photons reached monitored ports.
    pub fn joint_path(self) -> Option<PathOutcome> {
        use PortPath::*;
        match (self.signal, self.idler) {
            (Short, Short) => Some(PathOutcome::ShortShort),
            (Short, Long) => Some(PathOutcome::ShortLong),
            (Long, Short) => Some(PathOutcome::LongShort),
            (Long, Long) => Some(PathOutcome::LongLong),
            _ => None,
        }
    }
}

/// Outcome distribution of one pair across both analyzers.
///
/// Short–short and long–long are indistinguishable; the central weight is
/// split evenly between them purely as a timing label.
#[derive(Debug, Clone, Copy)]
pub struct JointPathModel {
    pub bins: BinProbabilities<f64>,
}

impl JointPathModel {
    pub fn new(theta_s: f64, theta_i: f64, pump_phase: f64, contrast: f64) -> Result<Self> {
        Ok(Self {
            bins: franson_bin_probabilities(theta_s, theta_i, pump_phase, contrast)?,
        })
    }

    /// Probability that a photon of one arm alone reaches its monitored port
    /// while its partner does not, `3/8 − p_central`.
    pub fn single_only(&self) -> f64 {
        (0.5 - self.bins.joint()).max(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PortOutcome {
        use PortPath::*;
        let b = &self.bins;
        let single = self.single_only();
        let u: f64 = rng.random();
        let table = [
            (0.5 * b.central, Short, Short),
            (0.5 * b.central, Long, Long),
            (b.side_late, Short, Long),
            (b.side_early, Long, Short),
            (0.5 * single, Short, Unmonitored),
            (0.5 * single, Long, Unmonitored),
            (0.5 * single, Unmonitored, Short),
            (0.5 * single, Unmonitored, Long),
        ];
        let mut acc = 0.0;
        for (p, signal, idler) in table {
            acc += p;
            if u < acc {
                return PortOutcome { signal, idler };
            }
        }
        PortOutcome {
            signal: Unmonitored,
            idler: Unmonitored,
        }
    }

    /// Idler outcome conditioned on the signal photon having reached its
    /// monitored port via `signal_long`. Scaled by the idler's survival
    /// probability `idler_survival` (transmission × efficiency).
    ///
    /// Returns the idler offset relative to the signal in units of τ4, or
    /// `None` if the idler is not detected at its monitored port.
    pub fn sample_partner<R: Rng + ?Sized>(
        &self,
        signal_long: bool,
        idler_survival: f64,
        rng: &mut R,
    ) -> Option<i8> {
        // P(central | signal at port, path) = 2·p_central; the matching
        // side peak carries (1/16)/(1/4) = 1/4.
        let u: f64 = rng.random();
        let central = 2.0 * self.bins.central * idler_survival;
        if u < central {
            return Some(0);
        }
        let side = 0.25 * idler_survival;
        if u < central + side {
            return Some(if signal_long { -1 } else { 1 });
        }
        None
    }
}

/// Joint path of a pair conditioned on nothing: `Some` when both photons
/// reach monitored ports, `None` otherwise.
pub fn sample_pair_paths<R: Rng + ?Sized>(
    theta_s: f64,
    theta_i: f64,
    pump_phase: f64,
    contrast: f64,
    rng: &mut R,
) -> Result<Option<PathOutcome>> {
    let model = JointPathModel::new(theta_s, theta_i, pump_phase, contrast)?;
    Ok(model.sample(rng).joint_path())
}
