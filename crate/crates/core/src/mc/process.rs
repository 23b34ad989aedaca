use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::error::{Error, Result};

/// Draw from Poisson(mean), returning 0 for a zero mean.
pub fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean)
        .expect("finite positive Poisson mean")
        .sample(rng) as u64
}

pub fn binomial_count<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// `count` i.i.d. uniform integer times in `[0, span_ps)`, sorted.
pub fn uniform_times<R: Rng + ?Sized>(count: u64, span_ps: i64, rng: &mut R) -> Vec<i64> {
    let mut times: Vec<i64> = (0..count).map(|_| rng.random_range(0..span_ps)).collect();
    times.sort_unstable();
    times
}

/// Homogeneous Poisson emission times (ps) over `span_s` seconds.
///
/// The count is Poisson(rate·span) and, given the count, times are i.i.d.
/// uniform, returned in ascending order.
pub fn generate_emissions<R: Rng + ?Sized>(rate_hz: f64, span_s: f64, rng: &mut R) -> Result<Vec<i64>> {
    if !(rate_hz >= 0.0) || !rate_hz.is_finite() {
        return Err(Error::InvalidInput(format!("rate must be >= 0, got {rate_hz}")));
    }
    if !(span_s > 0.0) || !span_s.is_finite() {
        return Err(Error::InvalidInput(format!("span must be > 0, got {span_s}")));
    }
    let span_ps = (span_s * 1e12).round() as i64;
    let count = poisson_count(rate_hz * span_s, rng);
    Ok(uniform_times(count, span_ps.max(1), rng))
}

/// Keep each event independently with probability `transmission`.
pub fn thin_by_loss<T: Clone, R: Rng + ?Sized>(
    events: &[T],
    transmission: f64,
    rng: &mut R,
) -> Result<Vec<T>> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::InvalidInput(format!(
            "transmission must lie in [0, 1], got {transmission}"
        )));
    }
    if transmission == 1.0 {
        return Ok(events.to_vec());
    }
    if transmission == 0.0 {
        return Ok(Vec::new());
    }
    Ok(events
        .iter()
        .filter(|_| rng.random::<f64>() < transmission)
        .cloned()
        .collect())
}
