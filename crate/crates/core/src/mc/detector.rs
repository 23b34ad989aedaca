//! Detector response and per-photon timing spread.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mc::clicks::ClickStream;
use crate::mc::process::{poisson_count, uniform_times};
use crate::physics::{dispersion_broaden, fwhm_to_sigma, DetectorSpec};

/// Add zero-mean Gaussian noise of standard deviation `sigma_ps` to each
/// time, rounding to whole picoseconds.
pub fn gaussian_spread<R: Rng + ?Sized>(times: &mut [i64], sigma_ps: f64, rng: &mut R) {
    if !(sigma_ps > 0.0) {
        return;
    }
    let normal = Normal::new(0.0, sigma_ps).expect("finite positive sigma");
    for t in times.iter_mut() {
        *t += normal.sample(rng).round() as i64;
    }
}

/// Standard deviation (ps) that dispersion adds on top of a pulse of
/// `fwhm_in`, `sqrt(out² − in²)` converted from FWHM.
pub fn dispersive_excess_sigma(fwhm_in: f64, beta2: f64, length_km: f64) -> Result<f64> {
    let out = dispersion_broaden(fwhm_in, beta2, length_km)?;
    Ok(fwhm_to_sigma((out * out - fwhm_in * fwhm_in).max(0.0).sqrt()))
}

/// Timing spread from fiber dispersion.
///
/// `arrivals` are taken to already carry the photon's intrinsic `fwhm_in`
/// spread; the added variance brings the total to
/// `dispersion_broaden(fwhm_in, beta2, length_km)`. The result is re-sorted.
pub fn dispersive_spread<R: Rng + ?Sized>(
    arrivals: &[i64],
    fwhm_in: f64,
    beta2: f64,
    length_km: f64,
    rng: &mut R,
) -> Result<Vec<i64>> {
    let sigma = dispersive_excess_sigma(fwhm_in, beta2, length_km)?;
    let mut out = arrivals.to_vec();
    gaussian_spread(&mut out, sigma, rng);
    out.sort_unstable();
    Ok(out)
}

/// Tag carried through merge so true and dark clicks can be counted after
/// dead-time filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Origin {
    Photon,
    Dark,
}

/// Jittered photon clicks plus dark clicks over `[t0, t0 + len)`, unsorted.
pub(crate) fn raw_clicks<R: Rng + ?Sized>(
    mut photons: Vec<i64>,
    spec: &DetectorSpec,
    t0: i64,
    len: i64,
    rng: &mut R,
) -> Vec<(i64, Origin)> {
    gaussian_spread(&mut photons, fwhm_to_sigma(spec.jitter_fwhm_ps), rng);
    let darks = uniform_times(
        poisson_count(spec.dark_rate_hz * len as f64 * 1e-12, rng),
        len.max(1),
        rng,
    );
    let mut tagged = Vec::with_capacity(photons.len() + darks.len());
    tagged.extend(photons.into_iter().map(|t| (t, Origin::Photon)));
    tagged.extend(darks.into_iter().map(|t| (t + t0, Origin::Dark)));
    tagged
}

/// Sort, drop same-picosecond duplicates and clicks inside the dead time,
/// and keep only `[0, span_ps)`.
pub(crate) fn finish_clicks(
    mut tagged: Vec<(i64, Origin)>,
    dead_time_ps: f64,
    span_ps: i64,
    channel: &str,
) -> ClickStream {
    tagged.retain(|&(t, _)| t >= 0 && t < span_ps);
    tagged.sort_unstable();
    let dead = dead_time_ps.round() as i64;
    let mut stream = ClickStream::empty(channel, span_ps);
    stream.timestamps.reserve(tagged.len());
    let mut last: Option<i64> = None;
    for (t, origin) in tagged {
        if let Some(prev) = last {
            // Two clicks in the same picosecond are never resolved, even
            // with zero dead time.
            if t == prev || t - prev < dead {
                continue;
            }
        }
        last = Some(t);
        stream.timestamps.push(t);
        match origin {
            Origin::Photon => stream.true_clicks += 1,
            Origin::Dark => stream.dark_clicks += 1,
        }
    }
    stream
}

/// Detector response to photons that will all be registered: jitter, dark
/// clicks, merge, dead time, and restriction to `[0, span_ps)`.
///
/// Use this when quantum efficiency has already been applied upstream.
pub fn timing_response<R: Rng + ?Sized>(
    photons: Vec<i64>,
    spec: &DetectorSpec,
    span_ps: i64,
    channel: &str,
    rng: &mut R,
) -> ClickStream {
    let tagged = raw_clicks(photons, spec, 0, span_ps, rng);
    finish_clicks(tagged, spec.dead_time_ps, span_ps, channel)
}

/// Full single-photon detector: each arrival is registered with probability
/// `quantum_efficiency`, then [`timing_response`] applies.
pub fn detect<R: Rng + ?Sized>(
    arrivals: &[i64],
    spec: &DetectorSpec,
    span_ps: i64,
    channel: &str,
    rng: &mut R,
) -> Result<ClickStream> {
    if arrivals.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Unsorted(channel.to_string()));
    }
    spec.validate(channel)?;
    let eta = spec.quantum_efficiency;
    let registered: Vec<i64> = if eta >= 1.0 {
        arrivals.to_vec()
    } else {
        arrivals
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < eta)
            .collect()
    };
    Ok(timing_response(registered, spec, span_ps, channel, rng))
}
