//! Start–stop delay histograms, as a time interval analyzer builds them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mc::ClickStream;

/// Counts of `stop − start` delays in fixed bins over `[origin, origin + n·bin)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayHistogram {
    pub bin_ps: i64,
    pub origin_ps: i64,
    pub counts: Vec<u64>,
    pub starts: u64,
}

impl DelayHistogram {
    /// Empty histogram symmetric about zero, covering `[−range, range)`.
    pub fn symmetric(bin_ps: i64, range_ps: i64) -> Result<Self> {
        if bin_ps <= 0 {
            return Err(Error::InvalidInput(format!("bin must be > 0 ps, got {bin_ps}")));
        }
        if range_ps <= 0 || (2 * range_ps) % bin_ps != 0 {
            return Err(Error::InvalidInput(format!(
                "range {range_ps} ps must be positive with 2·range a multiple of the {bin_ps} ps bin"
            )));
        }
        Ok(Self {
            bin_ps,
            origin_ps: -range_ps,
            counts: vec![0; (2 * range_ps / bin_ps) as usize],
            starts: 0,
        })
    }

    pub fn range_ps(&self) -> i64 {
        -self.origin_ps
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_centre_ps(&self, k: usize) -> f64 {
        self.origin_ps as f64 + (k as f64 + 0.5) * self.bin_ps as f64
    }

    /// Add every start–stop pair with delay inside the histogram range.
    ///
    /// Both slices must be ascending; a sliding lower bound over `stops`
    /// keeps the cost linear in the number of pairs found.
    pub fn accumulate(&mut self, starts: &[i64], stops: &[i64]) {
        let lo_edge = self.origin_ps;
        let hi_edge = self.origin_ps + self.bin_ps * self.counts.len() as i64;
        let mut lo = 0usize;
        for &s in starts {
            while lo < stops.len() && stops[lo] - s < lo_edge {
                lo += 1;
            }
            for &t in &stops[lo..] {
                let d = t - s;
                if d >= hi_edge {
                    break;
                }
                self.counts[((d - lo_edge) / self.bin_ps) as usize] += 1;
            }
        }
        self.starts += starts.len() as u64;
    }

    pub fn merge(&mut self, other: &DelayHistogram) -> Result<()> {
        if other.bin_ps != self.bin_ps
            || other.origin_ps != self.origin_ps
            || other.counts.len() != self.counts.len()
        {
            return Err(Error::InvalidInput("histogram layouts differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.starts += other.starts;
        Ok(())
    }

    /// Delimited dump with a `delay_ps,counts` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delay_ps,counts\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{}\n", self.bin_centre_ps(k), c));
        }
        out
    }
}

fn check_sorted(stream: &ClickStream) -> Result<()> {
    if stream.timestamps.windows(2).any(|w| w[0] > w[1]) {
        Err(Error::Unsorted(stream.channel.clone()))
    } else {
        Ok(())
    }
}

fn whole_ps(name: &str, v: f64) -> Result<i64> {
    if v.is_finite() && v > 0.0 && v.fract() == 0.0 {
        Ok(v as i64)
    } else {
        Err(Error::InvalidInput(format!("{name} must be a positive whole number of ps, got {v}")))
    }
}

/// Histogram of all start–stop delays within `±range_ps`, with `starts` as
/// the start channel.
pub fn build_histogram(
    starts: &ClickStream,
    stops: &ClickStream,
    bin_ps: f64,
    range_ps: f64,
) -> Result<DelayHistogram> {
    check_sorted(starts)?;
    check_sorted(stops)?;
    let mut h = DelayHistogram::symmetric(whole_ps("bin", bin_ps)?, whole_ps("range", range_ps)?)?;
    h.accumulate(&starts.timestamps, &stops.timestamps);
    Ok(h)
}

/// Like [`build_histogram`], additionally requiring the range to cover the
/// side peaks at `±delay_ps` with room to spare (`range ≥ 2·delay`).
pub fn build_histogram_for_delay(
    starts: &ClickStream,
    stops: &ClickStream,
    bin_ps: f64,
    range_ps: f64,
    delay_ps: f64,
) -> Result<DelayHistogram> {
    if range_ps < 2.0 * delay_ps {
        return Err(Error::InvalidInput(format!(
            "range {range_ps} ps must cover ±2τ4 = ±{} ps",
            2.0 * delay_ps
        )));
    }
    build_histogram(starts, stops, bin_ps, range_ps)
}

/// Sum of bins whose centres lie in `[centre − window/2, centre + window/2]`.
pub fn count_in_window(hist: &DelayHistogram, centre_ps: f64, window_ps: f64) -> Result<u64> {
    if !(window_ps >= hist.bin_ps as f64) {
        return Err(Error::InvalidInput(format!(
            "window {window_ps} ps is narrower than one {} ps bin",
            hist.bin_ps
        )));
    }
    // Compare doubled coordinates so half-bin centres stay exact.
    let lo = 2.0 * centre_ps - window_ps;
    let hi = 2.0 * centre_ps + window_ps;
    Ok(hist
        .counts
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let c2 = (2 * hist.origin_ps + (2 * *k as i64 + 1) * hist.bin_ps) as f64;
            c2 >= lo && c2 <= hi
        })
        .map(|(_, c)| c)
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream(ts: Vec<i64>) -> ClickStream {
        ClickStream {
            channel: "t".into(),
            span_ps: ts.last().copied().unwrap_or(0) + 1,
            timestamps: ts,
            true_clicks: 0,
            dark_clicks: 0,
        }
    }

    fn brute(starts: &[i64], stops: &[i64], range: i64) -> u64 {
        let mut n = 0;
        for s in starts {
            for t in stops {
                if (-range..range).contains(&(t - s)) {
                    n += 1;
                }
            }
        }
        n
    }

    #[test]
    fn identical_streams_spike_at_zero() {
        let ts: Vec<i64> = (0..500).map(|k| k * 10_000).collect();
        let h = build_histogram(&stream(ts.clone()), &stream(ts), 10.0, 300.0).unwrap();
        assert_eq!(h.total(), 500);
        let zero_bin = (300 / 10) as usize;
        assert_eq!(h.counts[zero_bin], 500);
        assert_eq!(h.bin_centre_ps(zero_bin), 5.0);
    }

    #[test]
    fn rejects_unsorted_and_bad_layouts() {
        let bad = stream(vec![3, 1]);
        let good = stream(vec![1, 3]);
        assert!(matches!(build_histogram(&bad, &good, 10.0, 300.0), Err(Error::Unsorted(_))));
        assert!(build_histogram(&good, &good, 0.0, 300.0).is_err());
        assert!(build_histogram(&good, &good, 7.0, 300.0).is_err());
        assert!(build_histogram_for_delay(&good, &good, 10.0, 150.0, 100.0).is_err());
    }

    #[test]
    fn window_counting() {
        let mut h = DelayHistogram::symmetric(10, 300).unwrap();
        for (k, c) in h.counts.iter_mut().enumerate() {
            *c = k as u64;
        }
        assert_eq!(count_in_window(&h, 0.0, 600.0).unwrap(), h.total());
        // Centres −45..45 ps fall inside a 100 ps window about zero.
        let want: u64 = (25..35).sum();
        assert_eq!(count_in_window(&h, 0.0, 100.0).unwrap(), want);
        // A centre exactly on the boundary is included.
        assert_eq!(count_in_window(&h, 0.0, 90.0).unwrap(), want);
        assert_eq!(count_in_window(&h, 0.0, 89.0).unwrap(), (26..34).sum::<u64>());
        assert!(count_in_window(&h, 0.0, 5.0).is_err());
        let empty = DelayHistogram::symmetric(10, 300).unwrap();
        assert_eq!(count_in_window(&empty, 0.0, 100.0).unwrap(), 0);
    }

    proptest! {
        #[test]
        fn totals_match_brute_force(
            mut a in proptest::collection::vec(0i64..20_000, 0..120),
            mut b in proptest::collection::vec(0i64..20_000, 0..120),
        ) {
            a.sort_unstable();
            b.sort_unstable();
            let h = build_histogram(&stream(a.clone()), &stream(b.clone()), 10.0, 300.0).unwrap();
            prop_assert_eq!(h.total(), brute(&a, &b, 300));
            prop_assert_eq!(h.starts, a.len() as u64);
        }

        #[test]
        fn window_count_is_monotone(counts in proptest::collection::vec(0u64..50, 60), w in 10u32..600, dw in 0u32..100, c in -100i32..100) {
            let mut h = DelayHistogram::symmetric(10, 300).unwrap();
            h.counts = counts;
            let narrow = count_in_window(&h, c as f64, w as f64).unwrap();
            let wide = count_in_window(&h, c as f64, (w + dw) as f64).unwrap();
            prop_assert!(wide >= narrow);
        }
    }
}
