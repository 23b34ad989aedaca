//! Closed-form physics of the Franson link.
//!
//! Everything here is a pure function, generic over [`Real`]. Times are in
//! picoseconds unless a function says otherwise; rates are in Hz.

mod params;

pub use params::{
    AnalyzerSpec, ChannelSpec, CoincidenceWindowSpec, DetectorSpec, PathOutcome, SourceSpec,
    dsf_beta2_from_datum, DSF_BETA2_PS2_PER_KM,
};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{wrap_phase, Real};

/// FWHM of a Gaussian intensity profile in units of its 1/e half-width,
/// `2·sqrt(ln 2)`.
pub const FWHM_PER_E_HALF_WIDTH: f64 = 1.665_109_222_315_395_4;

/// FWHM of a Gaussian in units of its standard deviation, `2·sqrt(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

pub fn fwhm_to_sigma<T: Real>(fwhm: T) -> T {
    fwhm / T::lit(FWHM_PER_SIGMA)
}

pub fn sigma_to_fwhm<T: Real>(sigma: T) -> T {
    sigma * T::lit(FWHM_PER_SIGMA)
}

/// Power transmission of a loss given in dB; negative values are gain.
pub fn db_to_linear<T: Real>(loss_db: T) -> T {
    T::lit(10.0).powf(-loss_db / T::lit(10.0))
}

pub fn linear_to_db<T: Real>(transmission: T) -> T {
    -T::lit(10.0) * transmission.log10()
}

/// Coincidence probabilities for one pair in the three resolvable delay bins.
///
/// `central` is the Δt = 0 bin where the short–short and long–long paths
/// interfere; `side_early` (Δt = −τ4, idler first) and `side_late`
/// (Δt = +τ4) each hold one distinguishable path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinProbabilities<T> {
    pub central: T,
    pub side_early: T,
    pub side_late: T,
}

impl<T: Real> BinProbabilities<T> {
    /// Probability that both photons leave through the monitored ports.
    pub fn joint(&self) -> T {
        self.central + self.side_early + self.side_late
    }
}

/// Per-pair bin probabilities with both monitored ports and unit upstream
/// transmission: `central = (1 + contrast·cos(θs + θi + φp)) / 8`, sides 1/16.
pub fn franson_bin_probabilities<T: Real>(
    theta_s: T,
    theta_i: T,
    pump_phase: T,
    contrast: T,
) -> Result<BinProbabilities<T>> {
    for (name, v) in [
        ("theta_s", theta_s),
        ("theta_i", theta_i),
        ("pump_phase", pump_phase),
        ("contrast", contrast),
    ] {
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("{name} must be finite")));
        }
    }
    if contrast < T::zero() || contrast > T::one() {
        return Err(Error::InvalidInput(format!(
            "contrast must lie in [0, 1], got {contrast}"
        )));
    }
    let total_phase = wrap_phase(theta_s + theta_i + pump_phase);
    let eighth = T::lit(0.125);
    let central = eighth * (T::one() + contrast * total_phase.cos());
    let side = T::lit(0.0625);
    Ok(BinProbabilities {
        central: central.max(T::zero()),
        side_early: side,
        side_late: side,
    })
}

/// One time-shifted, complex-weighted branch leaving an interferometer port.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch<T> {
    pub arrival: T,
    pub amplitude: Complex<T>,
}

/// Branches at the monitored output of an unbalanced MZI: the short arm at
/// `arrival` with amplitude 1/2, the long arm at `arrival + delay` with
/// amplitude `e^{iθ}/2`.
pub fn mzi_split<T: Real>(arrival: T, theta: T, delay: T) -> Result<[Branch<T>; 2]> {
    Ok(mzi_split_ports(arrival, theta, delay)?[0])
}

/// Both output ports: `[monitored, unmonitored]`. The unmonitored port
/// carries `i/2` and `−i·e^{iθ}/2`, so the four squared amplitudes sum to 1.
pub fn mzi_split_ports<T: Real>(arrival: T, theta: T, delay: T) -> Result<[[Branch<T>; 2]; 2]> {
    if !(delay > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "MZI delay must be positive, got {delay}"
        )));
    }
    if !theta.is_finite() || !arrival.is_finite() {
        return Err(Error::InvalidInput("MZI phase and arrival must be finite".into()));
    }
    let half = T::lit(0.5);
    let phasor = Complex::from_polar(half, theta);
    let i = Complex::new(T::zero(), T::one());
    let late = arrival + delay;
    Ok([
        [
            Branch {
                arrival,
                amplitude: Complex::new(half, T::zero()),
            },
            Branch {
                arrival: late,
                amplitude: phasor,
            },
        ],
        [
            Branch {
                arrival,
                amplitude: i * half,
            },
            Branch {
                arrival: late,
                amplitude: -(i * phasor),
            },
        ],
    ])
}

/// Gaussian pulse broadening after `length_km` of fiber with GVD `beta2`
/// (ps²/km): `fwhm·sqrt(1 + (β2·L/T0²)²)` with `T0 = fwhm / 2√ln2`.
pub fn dispersion_broaden<T: Real>(fwhm_in: T, beta2: T, length_km: T) -> Result<T> {
    if !(fwhm_in > T::zero()) || !fwhm_in.is_finite() {
        return Err(Error::InvalidInput(format!(
            "input pulse FWHM must be positive, got {fwhm_in}"
        )));
    }
    if !beta2.is_finite() || !length_km.is_finite() || length_km < T::zero() {
        return Err(Error::InvalidInput(
            "beta2 must be finite and fiber length non-negative".into(),
        ));
    }
    let t0 = fwhm_in / T::lit(FWHM_PER_E_HALF_WIDTH);
    let ratio = beta2 * length_km / (t0 * t0);
    Ok(fwhm_in * (T::one() + ratio * ratio).sqrt())
}

/// |β2| that broadens `fwhm_in` to `fwhm_out` over `length_km`.
pub fn beta2_for_broadening<T: Real>(fwhm_in: T, fwhm_out: T, length_km: T) -> Result<T> {
    if !(fwhm_in > T::zero()) || fwhm_out < fwhm_in || !(length_km > T::zero()) {
        return Err(Error::InvalidInput(
            "need 0 < fwhm_in <= fwhm_out and a positive length".into(),
        ));
    }
    let t0 = fwhm_in / T::lit(FWHM_PER_E_HALF_WIDTH);
    let factor = fwhm_out / fwhm_in;
    Ok((factor * factor - T::one()).sqrt() * t0 * t0 / length_km)
}

/// Fringe visibility `(c_max − c_min) / (c_max + c_min)`.
pub fn visibility<T: Real>(c_max: T, c_min: T) -> Result<T> {
    if !c_max.is_finite() || !c_min.is_finite() {
        return Err(Error::InvalidInput("counts must be finite".into()));
    }
    if c_min < T::zero() || c_max < c_min {
        return Err(Error::InvalidInput(format!(
            "need c_max >= c_min >= 0, got ({c_max}, {c_min})"
        )));
    }
    let sum = c_max + c_min;
    if sum == T::zero() {
        return Err(Error::InvalidInput("visibility undefined for zero counts".into()));
    }
    Ok((c_max - c_min) / sum)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshVerdict<T> {
    pub s_value: T,
    pub violates: bool,
}

/// CHSH value reachable with fringe visibility `v`: `S = 2√2·v`, violation
/// iff `S > 2`.
pub fn chsh_from_visibility<T: Real>(v: T) -> Result<ChshVerdict<T>> {
    if !(v >= T::zero() && v <= T::one()) {
        return Err(Error::InvalidInput(format!(
            "visibility must lie in [0, 1], got {v}"
        )));
    }
    let s_value = T::lit(2.0) * T::SQRT_2() * v;
    Ok(ChshVerdict {
        s_value,
        violates: s_value > T::lit(2.0),
    })
}

/// Accidental coincidence rate between two uncorrelated click streams:
/// `singles_a · singles_b · window` (rates in Hz, window in seconds).
pub fn accidental_rate<T: Real>(singles_a: T, singles_b: T, window_s: T) -> T {
    singles_a * singles_b * window_s
}

/// Probability of a click from a process of `rate_hz` inside one window.
pub fn click_probability_per_window<T: Real>(rate_hz: T, window_s: T) -> T {
    rate_hz * window_s
}

/// MZI phase set by temperature, wrapped to `[0, 2π)`.
pub fn temp_to_phase<T: Real>(temp_c: T, reference_temp_c: T, phase_per_kelvin: T) -> T {
    wrap_phase((temp_c - reference_temp_c) * phase_per_kelvin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    /// Independent amplitude bookkeeping: sum the two-photon amplitudes of
    /// the four path combinations and group by signal–idler delay.
    fn amplitude_oracle(theta_s: f64, theta_i: f64, pump: f64) -> (f64, f64, f64) {
        let a = |long: bool, theta: f64| {
            if long {
                Complex::from_polar(0.5, theta)
            } else {
                Complex::new(0.5, 0.0)
            }
        };
        // Short–short pairs were emitted τ4 later than long–long pairs; the
        // pump phase accumulated in between is carried by the SS term.
        let ss = a(false, theta_s) * a(false, theta_i) * Complex::from_polar(1.0, -pump);
        let ll = a(true, theta_s) * a(true, theta_i);
        let sl = a(false, theta_s) * a(true, theta_i);
        let ls = a(true, theta_s) * a(false, theta_i);
        ((ss + ll).norm_sqr(), ls.norm_sqr(), sl.norm_sqr())
    }

    #[test]
    fn db_examples() {
        assert_eq!(db_to_linear(0.0_f64), 1.0);
        assert_relative_eq!(db_to_linear(10.0_f64), 0.1, max_relative = 1e-15);
        assert_relative_eq!(db_to_linear(20.0_f64), 0.01, max_relative = 1e-15);
        assert!(db_to_linear(-3.0_f64) > 1.0);
        assert_relative_eq!(db_to_linear(10.0_f32), 0.1, max_relative = 1e-6);
    }

    #[test]
    fn franson_examples() {
        let p = franson_bin_probabilities(0.0, 0.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(p.central, 0.25, epsilon = 1e-15);
        assert_eq!((p.side_early, p.side_late), (0.0625, 0.0625));

        let p = franson_bin_probabilities(PI, 0.0, 0.0, 1.0).unwrap();
        assert!(p.central.abs() < 1e-15);

        for (a, b, c) in [(0.3, 1.1, 2.0), (5.0, -2.0, 0.0)] {
            let p = franson_bin_probabilities(a, b, c, 0.0).unwrap();
            assert_eq!(p.central, 0.125);
        }

        let p32 = franson_bin_probabilities(0.0_f32, 0.0, 0.0, 1.0).unwrap();
        assert!((p32.central - 0.25).abs() < 1e-6);
    }

    #[test]
    fn franson_matches_amplitude_oracle_on_grid() {
        for i in 0..24 {
            for j in 0..7 {
                let ts = i as f64 * TAU / 24.0;
                let ti = j as f64 * 0.9 - 2.0;
                let pump = 0.37 * j as f64;
                let (central, early, late) = amplitude_oracle(ts, ti, pump);
                let p = franson_bin_probabilities(ts, ti, pump, 1.0).unwrap();
                assert_relative_eq!(p.central, central, epsilon = 1e-12);
                assert_relative_eq!(p.side_early, early, epsilon = 1e-15);
                assert_relative_eq!(p.side_late, late, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn franson_rejects_bad_input() {
        assert!(franson_bin_probabilities(f64::NAN, 0.0, 0.0, 1.0).is_err());
        assert!(franson_bin_probabilities(0.0, f64::INFINITY, 0.0, 1.0).is_err());
        assert!(franson_bin_probabilities(0.0, 0.0, 0.0, 1.5).is_err());
        assert!(franson_bin_probabilities(0.0, 0.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn franson_phase_average_and_complement() {
        for &c in &[0.0, 0.4, 1.0] {
            let n = 4096;
            let mean: f64 = (0..n)
                .map(|k| {
                    franson_bin_probabilities(k as f64 * TAU / n as f64, 0.0, 0.0, c)
                        .unwrap()
                        .central
                })
                .sum::<f64>()
                / n as f64;
            assert_relative_eq!(mean, 0.125, epsilon = 1e-12);
        }
        for k in 0..50 {
            let th = k as f64 * 0.13;
            let a = franson_bin_probabilities(th, 0.0, 0.0, 1.0).unwrap().central;
            let b = franson_bin_probabilities(th + PI, 0.0, 0.0, 1.0).unwrap().central;
            assert_relative_eq!(a + b, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn side_peaks_phase_independent() {
        let reference = franson_bin_probabilities(0.0, 0.0, 0.0, 1.0).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let p = franson_bin_probabilities(i as f64 * 0.4, j as f64 * 0.4, 0.2, 0.7)
                    .unwrap();
                assert_eq!(p.side_early, reference.side_early);
                assert_eq!(p.side_late, reference.side_late);
            }
        }
    }

    #[test]
    fn mzi_examples() {
        let [short, long] = mzi_split(0.0_f64, 0.0, 100.0).unwrap();
        assert_eq!(short.arrival, 0.0);
        assert_eq!(long.arrival, 100.0);
        assert_eq!(short.amplitude, Complex::new(0.5, 0.0));
        assert_relative_eq!(long.amplitude.re, 0.5, epsilon = 1e-15);
        assert!(long.amplitude.im.abs() < 1e-15);

        let [_, long] = mzi_split(0.0, PI, 100.0).unwrap();
        assert_relative_eq!(long.amplitude.re, -0.5, epsilon = 1e-15);

        assert!(mzi_split(0.0, 0.0, 0.0).is_err());
        assert!(mzi_split(0.0, 0.0, -5.0).is_err());
    }

    #[test]
    fn mzi_monitored_port_carries_half() {
        let ports = mzi_split_ports(3.0, 1.234, 100.0).unwrap();
        let monitored: f64 = ports[0].iter().map(|b| b.amplitude.norm_sqr()).sum();
        assert_relative_eq!(monitored, 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn mzi_four_branches_conserve_probability(theta in -20.0f64..20.0, t in -1e6f64..1e6, d in 1e-3f64..1e4) {
            let ports = mzi_split_ports(t, theta, d).unwrap();
            let total: f64 = ports.iter().flatten().map(|b| b.amplitude.norm_sqr()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn db_round_trip(db in -60.0f64..200.0) {
            let back = linear_to_db(db_to_linear(db));
            prop_assert!((back - db).abs() <= 1e-12 * db.abs().max(1.0));
        }

        #[test]
        fn swapping_analyzer_phases_is_symmetric(a in -10.0f64..10.0, b in -10.0f64..10.0, c in 0.0f64..=1.0) {
            let p = franson_bin_probabilities(a, b, 0.3, c).unwrap();
            let q = franson_bin_probabilities(b, a, 0.3, c).unwrap();
            prop_assert!((p.central - q.central).abs() < 1e-15);
            prop_assert!(p.central >= 0.0 && p.central <= 0.25);
        }

        #[test]
        fn broadening_zero_length_and_sign(f in 0.1f64..100.0, b in -50.0f64..50.0) {
            prop_assert_eq!(dispersion_broaden(f, b, 0.0).unwrap(), f);
            let plus = dispersion_broaden(f, b, 30.0).unwrap();
            let minus = dispersion_broaden(f, -b, 30.0).unwrap();
            prop_assert_eq!(plus, minus);
            prop_assert!(plus >= f);
        }

        #[test]
        fn broadening_monotone(f in 0.5f64..50.0, b in 0.0f64..5.0, l in 0.0f64..200.0, db in 0.0f64..1.0, dl in 0.0f64..10.0) {
            let base = dispersion_broaden(f, b, l).unwrap();
            prop_assert!(dispersion_broaden(f, b + db, l).unwrap() >= base);
            prop_assert!(dispersion_broaden(f, b, l + dl).unwrap() >= base);
        }

        #[test]
        fn visibility_recovers_generating_contrast(a in 1.0f64..1e6, v in 0.0f64..=1.0) {
            let got = visibility(a * (1.0 + v), a * (1.0 - v)).unwrap();
            prop_assert!((got - v).abs() < 1e-12);
        }
    }

    /// Oracle: propagate a transform-limited Gaussian through quadratic
    /// spectral phase by direct Fourier summation and read off the
    /// intensity FWHM numerically.
    fn propagated_fwhm(fwhm_in: f64, beta2: f64, length: f64) -> f64 {
        let t0 = fwhm_in / FWHM_PER_E_HALF_WIDTH;
        let n_w = 1601;
        let w_max = 8.0 / t0;
        let dw = 2.0 * w_max / (n_w - 1) as f64;
        let spectrum: Vec<(f64, Complex<f64>)> = (0..n_w)
            .map(|k| {
                let w = -w_max + k as f64 * dw;
                let amp = (-(w * t0).powi(2) / 2.0).exp();
                (w, Complex::from_polar(amp, 0.5 * beta2 * length * w * w))
            })
            .collect();
        let intensity = |t: f64| {
            spectrum
                .iter()
                .map(|&(w, a)| a * Complex::from_polar(1.0, -w * t))
                .sum::<Complex<f64>>()
                .norm_sqr()
        };
        let peak = intensity(0.0);
        let (mut lo, mut hi) = (0.0, 10.0 * fwhm_in * (1.0 + (beta2 * length / (t0 * t0)).abs()));
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if intensity(mid) > 0.5 * peak {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo + hi
    }

    #[test]
    fn broadening_matches_fourier_propagation() {
        for &(f, b, l) in &[(4.0, 0.712, 50.0), (4.0, 0.712, 10.0), (10.0, -2.0, 20.0)] {
            let oracle = propagated_fwhm(f, b, l);
            let formula = dispersion_broaden(f, b, l).unwrap();
            assert_relative_eq!(formula, oracle, max_relative = 1e-4);
        }
    }

    #[test]
    fn pinned_beta2_reproduces_25ps() {
        // Independent inversion by bisection on the forward formula.
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if dispersion_broaden(4.0, mid, 50.0).unwrap() < 25.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(DSF_BETA2_PS2_PER_KM, 0.5 * (lo + hi), max_relative = 1e-9);
        assert_relative_eq!(
            beta2_for_broadening(4.0, 25.0, 50.0).unwrap(),
            DSF_BETA2_PS2_PER_KM,
            max_relative = 1e-12
        );
        let out = dispersion_broaden(4.0, DSF_BETA2_PS2_PER_KM, 50.0).unwrap();
        assert_relative_eq!(out, 25.0, max_relative = 1e-3);
        assert_eq!(dispersion_broaden(4.0, 0.0, 50.0).unwrap(), 4.0);
        assert!(dispersion_broaden(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn broadening_becomes_linear_in_length() {
        let l50 = dispersion_broaden(4.0, DSF_BETA2_PS2_PER_KM, 50.0).unwrap();
        let l100 = dispersion_broaden(4.0, DSF_BETA2_PS2_PER_KM, 100.0).unwrap();
        assert_relative_eq!(l100 / l50, 2.0, max_relative = 0.02);
        let far = dispersion_broaden(4.0, DSF_BETA2_PS2_PER_KM, 1e4).unwrap();
        let farther = dispersion_broaden(4.0, DSF_BETA2_PS2_PER_KM, 2e4).unwrap();
        assert_relative_eq!(farther / far, 2.0, max_relative = 1e-6);
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(100.0, 0.0).unwrap(), 1.0);
        assert_eq!(visibility(100.0, 100.0).unwrap(), 0.0);
        assert_relative_eq!(visibility(180.5, 19.5).unwrap(), 0.805, epsilon = 1e-15);
        assert!(visibility(0.0, 0.0).is_err());
        assert!(visibility(10.0, 20.0).is_err());
    }

    #[test]
    fn chsh_examples_and_boundary() {
        let v = chsh_from_visibility(1.0_f64).unwrap();
        assert_relative_eq!(v.s_value, 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert!(v.violates);
        let v = chsh_from_visibility(0.7071_f64).unwrap();
        assert!(!v.violates);
        assert!((v.s_value - 2.0).abs() < 1e-3);
        let v = chsh_from_visibility(0.805_f64).unwrap();
        assert!((v.s_value - 2.277).abs() < 1e-3);
        assert!(v.violates);
        assert!(chsh_from_visibility(FRAC_1_SQRT_2 + 1e-9).unwrap().violates);
        assert!(!chsh_from_visibility(FRAC_1_SQRT_2 - 1e-9).unwrap().violates);
        assert!(chsh_from_visibility(1.01).is_err());
        assert!(chsh_from_visibility(-0.01).is_err());
    }

    #[test]
    fn accidental_examples() {
        assert_eq!(click_probability_per_window(100.0, 100e-12), 1.0e-8);
        assert_eq!(accidental_rate(0.0, 5e4, 100e-12), 0.0);
        assert_relative_eq!(accidental_rate(1000.0, 1000.0, 100e-12), 1e-4, max_relative = 1e-12);
    }

    #[test]
    fn temperature_examples() {
        assert_eq!(temp_to_phase(22.5, 22.5, 1.3), 0.0);
        let k = 0.4;
        assert_relative_eq!(temp_to_phase(24.5, 22.5, k), 2.0 * k, epsilon = 1e-12);
        assert_relative_eq!(temp_to_phase(24.5, 22.5, 4.0), wrap_phase(8.0), epsilon = 1e-12);
        for t in [-10.0, 0.0, 55.5] {
            assert_eq!(temp_to_phase(t, 22.5, 0.0), 0.0);
        }
    }
}
