#![allow(dead_code)]

use std::f64::consts::PI;

use franson_core::mc::SimRng;
use franson_core::tia::FringeScan;
use rand::SeedableRng;
use rand_distr::{Distribution, Poisson};

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// `n` evenly spaced phases with counts `mean·(1 + v·cos(x + phi))`,
/// Poisson-noisy when `rng` is given.
pub fn synthetic_scan(n: usize, mean: f64, v: f64, phi: f64, rng: Option<&mut SimRng>) -> FringeScan {
    let xs: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let mut counts: Vec<f64> = xs.iter().map(|x| mean * (1.0 + v * (x + phi).cos())).collect();
    if let Some(r) = rng {
        for c in &mut counts {
            *c = if *c > 0.0 { Poisson::new(*c).unwrap().sample(r) } else { 0.0 };
        }
    }
    FringeScan::from_counts(&xs, &counts)
}

/// Number of (start, stop) pairs with `-range <= stop − start < range`, by
/// brute force.
pub fn pairs_within(starts: &[i64], stops: &[i64], range: i64) -> u64 {
    let mut n = 0;
    for &a in starts {
        for &b in stops {
            if (-range..range).contains(&(b - a)) {
                n += 1;
            }
        }
    }
    n
}

/// Probability that a Gaussian of mean `mu`, sd `sigma` falls inside
/// `[-w/2, w/2]`, by midpoint-rule integration of the density.
pub fn gaussian_mass_numeric(mu: f64, sigma: f64, w: f64) -> f64 {
    let steps = 200_000;
    let h = w / steps as f64;
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    (0..steps)
        .map(|k| {
            let x = -0.5 * w + (k as f64 + 0.5) * h;
            norm * (-0.5 * ((x - mu) / sigma).powi(2)).exp() * h
        })
        .sum()
}
