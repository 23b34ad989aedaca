//! Fringe scans and visibility extraction.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::visibility;
use crate::scalar::wrap_phase;

/// What the scan's `setting` column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    #[default]
    PhaseRad,
    TemperatureC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub setting: f64,
    pub counts: f64,
    pub acquisition_s: f64,
    pub singles_signal: f64,
    pub singles_idler: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FringeScan {
    pub abscissa: Abscissa,
    pub points: Vec<FringePoint>,
}

impl FringeScan {
    /// Scan from `(setting, counts)` pairs with unit acquisition time and no
    /// singles information.
    pub fn from_counts(settings: &[f64], counts: &[f64]) -> Self {
        Self {
            abscissa: Abscissa::PhaseRad,
            points: settings
                .iter()
                .zip(counts)
                .map(|(&setting, &counts)| FringePoint {
                    setting,
                    counts,
                    acquisition_s: 1.0,
                    singles_signal: 0.0,
                    singles_idler: 0.0,
                })
                .collect(),
        }
    }

    /// Delimited text, one row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("setting,counts,acquisition_s,singles_a,singles_b\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                p.setting, p.counts, p.acquisition_s, p.singles_signal, p.singles_idler
            ));
        }
        out
    }
}

/// Exposure each point's counts are divided by before comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    AcquisitionTime,
    /// Coincidences per signal photon, the y-axis of a Fig.-4-style plot.
    SignalSingles,
}

impl Normalization {
    fn exposure(self, p: &FringePoint) -> f64 {
        match self {
            Normalization::AcquisitionTime => p.acquisition_s,
            Normalization::SignalSingles => p.singles_signal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    SinusoidFit,
    Extrema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityEstimate {
    pub v: f64,
    pub sigma_v: f64,
    /// Fitted fringe amplitude in normalized units.
    pub amplitude: f64,
    /// φ0 of `M·(1 + V·cos(κx + φ0))`, in `[0, 2π)`.
    pub phase_offset: f64,
    pub mean_level: f64,
    /// Abscissa-to-phase scale; 1 for a phase scan.
    pub kappa: f64,
    pub sigma_kappa: f64,
    pub chi2_reduced: f64,
    pub low_statistics: bool,
    pub method: EstimateMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub normalization: Normalization,
    pub max_iterations: usize,
    /// Number of κ values tried before refinement.
    pub grid_points: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            normalization: Normalization::AcquisitionTime,
            max_iterations: 200,
            grid_points: 0,
        }
    }
}

/// A point is low-statistics once its peak count falls below this.
const LOW_STATISTICS_COUNTS: f64 = 10.0;

struct Prepared {
    x: Vec<f64>,
    y: Vec<f64>,
    n: Vec<f64>,
    w: Vec<f64>,
}

fn prepare(scan: &FringeScan, norm: Normalization, min_points: usize) -> Result<Prepared> {
    if scan.points.len() < min_points {
        return Err(Error::InvalidInput(format!(
            "need at least {min_points} scan points, got {}",
            scan.points.len()
        )));
    }
    let mut p = Prepared {
        x: Vec::new(),
        y: Vec::new(),
        n: Vec::new(),
        w: Vec::new(),
    };
    for pt in &scan.points {
        let exposure = norm.exposure(pt);
        if !(pt.counts >= 0.0) || !pt.counts.is_finite() || !pt.setting.is_finite() {
            return Err(Error::InvalidInput(format!("invalid scan point {pt:?}")));
        }
        if !(exposure > 0.0) || !exposure.is_finite() {
            return Err(Error::InvalidInput(format!(
                "normalization {norm:?} needs positive exposure, got {exposure} at setting {}",
                pt.setting
            )));
        }
        p.x.push(pt.setting);
        p.y.push(pt.counts);
        p.n.push(exposure);
        // Poisson weights with the max(count, 1) guard.
        p.w.push(1.0 / pt.counts.max(1.0));
    }
    Ok(p)
}

/// Weighted linear solve for (a, b, c) at fixed κ; returns params and χ².
fn linear_at(p: &Prepared, kappa: f64) -> Option<(Vector3<f64>, f64)> {
    let mut ata = Matrix3::zeros();
    let mut aty = Vector3::zeros();
    for k in 0..p.x.len() {
        let (s, c) = (kappa * p.x[k]).sin_cos();
        let row = Vector3::new(p.n[k], p.n[k] * c, p.n[k] * s);
        ata += row * row.transpose() * p.w[k];
        aty += row * (p.w[k] * p.y[k]);
    }
    let sol = ata.cholesky()?.solve(&aty);
    Some((sol, chi2(p, &Vector4::new(sol[0], sol[1], sol[2], kappa))))
}

fn model(p: &Prepared, k: usize, q: &Vector4<f64>) -> f64 {
    let (s, c) = (q[3] * p.x[k]).sin_cos();
    p.n[k] * (q[0] + q[1] * c + q[2] * s)
}

fn chi2(p: &Prepared, q: &Vector4<f64>) -> f64 {
    (0..p.x.len())
        .map(|k| p.w[k] * (p.y[k] - model(p, k, q)).powi(2))
        .sum()
}

/// JᵀWJ and JᵀW·r at `q`.
fn normal_equations(p: &Prepared, q: &Vector4<f64>) -> (Matrix4<f64>, Vector4<f64>) {
    let mut jtj = Matrix4::zeros();
    let mut jtr = Vector4::zeros();
    for k in 0..p.x.len() {
        let x = p.x[k];
        let (s, c) = (q[3] * x).sin_cos();
        let n = p.n[k];
        let j = Vector4::new(n, n * c, n * s, n * x * (q[2] * c - q[1] * s));
        jtj += j * j.transpose() * p.w[k];
        jtr += j * (p.w[k] * (p.y[k] - model(p, k, q)));
    }
    (jtj, jtr)
}

fn kappa_grid(x: &[f64], points: usize) -> Vec<f64> {
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let dx_min = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 0.0)
        .fold(f64::INFINITY, f64::min);
    // At least half a period across the scan, at most the Nyquist limit.
    let k_lo = std::f64::consts::PI / span;
    let k_hi = if dx_min.is_finite() {
        std::f64::consts::PI / dx_min
    } else {
        k_lo
    };
    let n = if points > 0 { points } else { (64 * x.len()).max(256) };
    (0..n)
        .map(|i| k_lo + (k_hi - k_lo) * i as f64 / (n - 1).max(1) as f64)
        .collect()
}

fn is_flat(p: &Prepared) -> bool {
    let rates: Vec<f64> = p.y.iter().zip(&p.n).map(|(y, n)| y / n).collect();
    let first = rates[0];
    let scale = rates.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    rates
        .iter()
        .all(|r| (r - first).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE))
}

fn degenerate(p: &Prepared) -> Error {
    let mean = p.y.iter().sum::<f64>() / p.n.iter().sum::<f64>();
    Error::FitDegenerate {
        estimate: Box::new(VisibilityEstimate {
            v: 0.0,
            sigma_v: f64::INFINITY,
            amplitude: 0.0,
            phase_offset: 0.0,
            mean_level: mean,
            kappa: f64::NAN,
            sigma_kappa: f64::INFINITY,
            chi2_reduced: 0.0,
            low_statistics: p.y.iter().cloned().fold(0.0, f64::max) < LOW_STATISTICS_COUNTS,
            method: EstimateMethod::SinusoidFit,
        }),
    }
}

pub fn fit_fringe(scan: &FringeScan) -> Result<VisibilityEstimate> {
    fit_fringe_with(scan, &FitOptions::default())
}

/// Weighted least-squares fit of `n_k·M·(1 + V·cos(κx + φ0))` to the counts,
/// where `n_k` is the point's exposure under `opts.normalization`.
///
/// The model is fitted in the linear form `a + b·cos κx + c·sin κx`: a κ
/// grid seeds Levenberg–Marquardt over `(a, b, c, κ)`, and `σ_V` follows
/// from the unscaled covariance `(JᵀWJ)⁻¹`.
pub fn fit_fringe_with(scan: &FringeScan, opts: &FitOptions) -> Result<VisibilityEstimate> {
    let p = prepare(scan, opts.normalization, 5)?;
    if is_flat(&p) {
        return Err(degenerate(&p));
    }

    let grid = kappa_grid(&p.x, opts.grid_points);
    let (k_lo, k_hi) = (grid[0], grid[grid.len() - 1]);
    let mut best: Option<(Vector4<f64>, f64)> = None;
    for &kappa in &grid {
        if let Some((lin, c2)) = linear_at(&p, kappa) {
            // Strict improvement only, so the smallest κ wins ties.
            let better = match &best {
                None => true,
                Some((_, b)) => c2 < *b * (1.0 - 1e-9) - 1e-300,
            };
            if better {
                best = Some((Vector4::new(lin[0], lin[1], lin[2], kappa), c2));
            }
        }
    }
    let (mut q, mut c2) = best.ok_or_else(|| degenerate(&p))?;

    let mut lambda = 1e-3;
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let (jtj, jtr) = normal_equations(&p, &q);
        let mut damped = jtj;
        for i in 0..4 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&jtr) else {
            lambda *= 10.0;
            continue;
        };
        // κ stays inside the range the scan can resolve; below it the model
        // degenerates into a ramp and the fit drifts instead of converging.
        let mut trial = q + step;
        trial[3] = trial[3].clamp(k_lo, k_hi);
        let step = trial - q;
        let c2_trial = chi2(&p, &trial);
        if c2_trial <= c2 {
            let small_step = (0..4).all(|i| step[i].abs() <= 1e-10 * (q[i].abs() + 1e-12));
            let small_gain = c2 - c2_trial <= 1e-12 * c2 + 1e-300;
            q = trial;
            c2 = c2_trial;
            lambda = (lambda / 10.0).max(1e-12);
            if small_step || small_gain {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // No downhill step exists at working precision.
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::FitNotConverged {
            iterations: opts.max_iterations,
        });
    }

    // Canonical κ > 0: the sign only flips the sine coefficient.
    if q[3] < 0.0 {
        q[3] = -q[3];
        q[2] = -q[2];
    }
    let (jtj, _) = normal_equations(&p, &q);
    let cov = jtj.try_inverse().unwrap_or_else(|| Matrix4::from_element(f64::INFINITY));
    let (a, b, c) = (q[0], q[1], q[2]);
    let amp = b.hypot(c);
    let v_raw = amp / a;
    let grad = if amp > 0.0 {
        Vector4::new(-v_raw / a, b / (a * amp), c / (a * amp), 0.0)
    } else {
        Vector4::new(0.0, 1.0 / a, 0.0, 0.0)
    };
    let var_v = (grad.transpose() * cov * grad)[(0, 0)];
    let dof = p.x.len().saturating_sub(4).max(1);
    Ok(VisibilityEstimate {
        v: v_raw.clamp(0.0, 1.0),
        sigma_v: var_v.max(0.0).sqrt(),
        amplitude: amp,
        phase_offset: wrap_phase((-c).atan2(b)),
        mean_level: a,
        kappa: q[3],
        sigma_kappa: cov[(3, 3)].max(0.0).sqrt(),
        chi2_reduced: c2 / dof as f64,
        low_statistics: p.y.iter().cloned().fold(0.0, f64::max) < LOW_STATISTICS_COUNTS,
        method: EstimateMethod::SinusoidFit,
    })
}

pub fn visibility_from_extrema(scan: &FringeScan) -> Result<VisibilityEstimate> {
    visibility_from_extrema_with(scan, Normalization::AcquisitionTime)
}

/// Max/min visibility of the normalized rates, with Poisson errors on the
/// two extreme counts (variance guarded by `max(count, 1)`).
pub fn visibility_from_extrema_with(
    scan: &FringeScan,
    norm: Normalization,
) -> Result<VisibilityEstimate> {
    let p = prepare(scan, norm, 2)?;
    if p.y.iter().all(|&c| c == 0.0) {
        return Err(Error::InvalidInput("all-zero scan has no visibility".into()));
    }
    let rate = |k: usize| p.y[k] / p.n[k];
    let kmax = (0..p.y.len()).max_by(|&i, &j| rate(i).total_cmp(&rate(j))).unwrap();
    let kmin = (0..p.y.len()).min_by(|&i, &j| rate(i).total_cmp(&rate(j))).unwrap();
    let (x, y) = (rate(kmax), rate(kmin));
    let v = visibility(x, y)?;
    let var_x = p.y[kmax].max(1.0) / (p.n[kmax] * p.n[kmax]);
    let var_y = p.y[kmin].max(1.0) / (p.n[kmin] * p.n[kmin]);
    let sigma_v = 2.0 / (x + y).powi(2) * (y * y * var_x + x * x * var_y).sqrt();
    Ok(VisibilityEstimate {
        v,
        sigma_v,
        amplitude: 0.5 * (x - y),
        phase_offset: wrap_phase(-p.x[kmax]),
        mean_level: 0.5 * (x + y),
        kappa: f64::NAN,
        sigma_kappa: f64::NAN,
        chi2_reduced: f64::NAN,
        low_statistics: p.y[kmax] < LOW_STATISTICS_COUNTS,
        method: EstimateMethod::Extrema,
    })
}
