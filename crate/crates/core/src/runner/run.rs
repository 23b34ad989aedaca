//! The simulate → histogram → fit → verdict pipeline and its outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{build_ledger, predict_rates, predict_window, LinkLedger, RatePrediction, WindowPrediction};
use crate::config::{LossReading, SimulationConfig};
use crate::error::{Error, Result};
use crate::mc::{derive_seed, simulate_histogram, Diagnostics, EngineOptions};
use crate::physics::chsh_from_visibility;
use crate::runner::scenario::{config_hash, Scenario, SweepParameter};
use crate::tia::{
    count_in_window, fit_fringe_with, visibility_from_extrema_with, Abscissa, DelayHistogram, FitOptions,
    FringePoint, FringeScan, VisibilityEstimate,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub setting: f64,
    pub seed: u64,
    pub counts: u64,
    pub acquisition_s: f64,
    pub signal_singles: u64,
    pub idler_singles: u64,
    #[serde(skip)]
    pub histogram: Option<DelayHistogram>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub v: f64,
    pub sigma_v: f64,
    pub s_value: f64,
    pub violates: bool,
    pub predicted_v: f64,
    pub fit_status: FitStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub config_hash: String,
    pub loss_reading: Option<LossReading>,
    pub window_ps: f64,
    pub abscissa: Abscissa,
    pub points: Vec<PointRecord>,
    pub visibility: VisibilityEstimate,
    pub fit_status: FitStatus,
    pub extrema: Option<VisibilityEstimate>,
    pub s_value: f64,
    pub violates: bool,
    pub predicted_visibility: f64,
    pub rates: RatePrediction,
    pub diagnostics: Diagnostics,
    pub sweep: Vec<SweepRow>,
    /// Not written to any output file, so outputs stay byte-reproducible.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

impl RunReport {
    pub fn scan(&self) -> FringeScan {
        scan_of(&self.points, self.abscissa)
    }

    pub fn events(&self) -> u64 {
        self.diagnostics.signal_true_clicks
            + self.diagnostics.signal_dark_clicks
            + self.diagnostics.idler_true_clicks
            + self.diagnostics.idler_dark_clicks
    }
}

fn scan_of(points: &[PointRecord], abscissa: Abscissa) -> FringeScan {
    FringeScan {
        abscissa,
        points: points
            .iter()
            .map(|p| FringePoint {
                setting: p.setting,
                counts: p.counts as f64,
                acquisition_s: p.acquisition_s,
                singles_signal: p.signal_singles as f64,
                singles_idler: p.idler_singles as f64,
            })
            .collect(),
    }
}

/// Histogram half-range: three analyzer delays, rounded up to whole bins.
pub fn histogram_range_ps(cfg: &SimulationConfig) -> i64 {
    let bin = cfg.tia.histogram_bin_ps as i64;
    let want = 3 * cfg.max_delay_ps();
    (want + bin - 1) / bin * bin
}

/// Configuration of fringe point `k`: scanned setting applied and seed
/// derived from the master seed.
pub fn point_config(s: &Scenario, base: &SimulationConfig, k: usize, setting: f64) -> SimulationConfig {
    let mut cfg = base.clone();
    let a = cfg.analyzer_mut(s.scan.scanned_arm).clone();
    *cfg.analyzer_mut(s.scan.scanned_arm) = match s.scan.abscissa {
        Abscissa::PhaseRad => a.with_phase(setting),
        Abscissa::TemperatureC => a.with_temperature(setting),
    };
    cfg.acquisition_time_s = s.scan.acquisition_s;
    cfg.master_seed = derive_seed(base.master_seed, k as u64) & (i64::MAX as u64);
    cfg
}

fn simulate_points(s: &Scenario, base: &SimulationConfig) -> Result<Vec<PointRecord>> {
    let settings = s.scan.settings();
    let range = histogram_range_ps(base);
    let bin = base.tia.histogram_bin_ps as i64;
    settings
        .par_iter()
        .enumerate()
        .map(|(k, &setting)| {
            let cfg = point_config(s, base, k, setting);
            let pc = simulate_histogram(&cfg, bin, range, s.scan.mode, &EngineOptions::default())
                .map_err(|e| e.context(format!("scenario `{}`, point {k}", s.name)))?;
            Ok(PointRecord {
                setting,
                seed: cfg.master_seed,
                counts: count_in_window(&pc.histogram, 0.0, base.tia.window_ps)?,
                acquisition_s: cfg.acquisition_time_s,
                signal_singles: pc.signal_singles,
                idler_singles: pc.idler_singles,
                histogram: Some(pc.histogram),
                diagnostics: pc.diagnostics,
            })
        })
        .collect()
}

fn fit(scan: &FringeScan, s: &Scenario) -> Result<(VisibilityEstimate, FitStatus)> {
    let opts = FitOptions {
        normalization: s.scan.normalization,
        ..FitOptions::default()
    };
    if scan.points.len() < 5 {
        // Too few points for a sinusoid; fall back to max/min.
        return Ok((visibility_from_extrema_with(scan, s.scan.normalization)?, FitStatus::Converged));
    }
    match fit_fringe_with(scan, &opts) {
        Ok(v) => Ok((v, FitStatus::Converged)),
        Err(Error::FitDegenerate { estimate }) => Ok((*estimate, FitStatus::Degenerate)),
        Err(e) => Err(e.context(format!("scenario `{}`: fringe fit", s.name))),
    }
}

/// CHSH verdict for a fitted visibility. Fits can overshoot 1 on noise, so
/// the estimate is clamped into the physical range first.
pub fn verdict_for(v: f64) -> crate::Verdict {
    chsh_from_visibility(v.clamp(0.0, 1.0)).expect("clamped visibility is valid")
}

fn sweep_row(value: f64, est: &VisibilityEstimate, status: FitStatus, predicted_v: f64) -> Result<SweepRow> {
    let verdict = verdict_for(est.v);
    Ok(SweepRow {
        value,
        v: est.v,
        sigma_v: est.sigma_v,
        s_value: verdict.s_value,
        violates: verdict.violates,
        predicted_v,
        fit_status: status,
    })
}

pub fn run_scenario(s: &Scenario) -> Result<RunReport> {
    let started = Instant::now();
    s.validate().map_err(|e| e.context(format!("scenario `{}`", s.name)))?;
    let base = &s.config;
    let points = simulate_points(s, base)?;
    let scan = scan_of(&points, s.scan.abscissa);
    let (visibility, fit_status) = fit(&scan, s)?;
    let extrema = visibility_from_extrema_with(&scan, s.scan.normalization).ok();
    let verdict = verdict_for(visibility.v);
    let mut diagnostics = Diagnostics::default();
    for p in &points {
        diagnostics.merge(&p.diagnostics);
    }

    let mut sweep = Vec::new();
    if let Some(sw) = &s.sweep {
        for &value in &sw.values {
            match sw.parameter {
                SweepParameter::WindowPs => {
                    let mut pts = points.clone();
                    for p in &mut pts {
                        let h = p.histogram.as_ref().expect("histogram kept");
                        p.counts = count_in_window(h, 0.0, value)?;
                    }
                    let (est, status) = fit(&scan_of(&pts, s.scan.abscissa), s)?;
                    let predicted = predict_window(base, value)?.visibility;
                    sweep.push(sweep_row(value, &est, status, predicted)?);
                }
                SweepParameter::MeanPairsPerWindow => {
                    let mut cfg = base.clone();
                    cfg.source.mean_pairs_per_window = value;
                    let pts = simulate_points(s, &cfg)?;
                    let (est, status) = fit(&scan_of(&pts, s.scan.abscissa), s)?;
                    let predicted = predict_window(&cfg, cfg.tia.window_ps)?.visibility;
                    sweep.push(sweep_row(value, &est, status, predicted)?);
                }
            }
        }
    }

    Ok(RunReport {
        scenario: s.name.clone(),
        config_hash: s.hash(),
        loss_reading: base.pre_fiber.as_ref().map(|p| p.reading),
        window_ps: base.tia.window_ps,
        abscissa: s.scan.abscissa,
        points,
        visibility,
        fit_status,
        extrema,
        s_value: verdict.s_value,
        violates: verdict.violates,
        predicted_visibility: predict_window(base, base.tia.window_ps)?.visibility,
        rates: predict_rates(base)?,
        diagnostics,
        sweep,
        wall_clock_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn write(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn sweep_csv(report: &RunReport) -> String {
    let mut out = format!("# config_hash={}\nvalue,v,sigma_v,s_value,violates,predicted_v\n", report.config_hash);
    for r in &report.sweep {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.value, r.v, r.sigma_v, r.s_value, r.violates, r.predicted_v
        ));
    }
    out
}

/// Write the report's files into `dir` (created if missing) and return
/// their paths. Output bytes depend only on the report.
pub fn emit_outputs(
    report: &RunReport,
    dir: &Path,
    targets: &crate::runner::OutputTargets,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = report.scenario.replace(['/', '\\', ' '], "_");
    let hash_line = format!("# config_hash={}\n", report.config_hash);
    let mut written = Vec::new();
    if targets.scan {
        match format {
            OutputFormat::Csv => {
                let body = format!("{hash_line}{}", report.scan().to_csv());
                write(dir.join(format!("{stem}.scan.csv")), &body, &mut written)?;
                if !report.sweep.is_empty() {
                    write(dir.join(format!("{stem}.sweep.csv")), &sweep_csv(report), &mut written)?;
                }
            }
            OutputFormat::Json => {
                let body = serde_json::json!({
                    "config_hash": report.config_hash,
                    "scan": report.scan(),
                    "sweep": report.sweep,
                });
                write(dir.join(format!("{stem}.scan.json")), &to_json(&body), &mut written)?;
            }
        }
    }
    if targets.report {
        write(dir.join(format!("{stem}.report.json")), &to_json(report), &mut written)?;
    }
    if targets.histograms {
        for (k, p) in report.points.iter().enumerate() {
            if let Some(h) = &p.histogram {
                let body = format!("{hash_line}# setting={}\n{}", p.setting, h.to_csv());
                write(dir.join(format!("{stem}.hist{k:02}.csv")), &body, &mut written)?;
            }
        }
    }
    Ok(written)
}

/// Analytic summary for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub config_hash: String,
    pub ledger: LinkLedger,
    pub signal_total_db: f64,
    pub idler_total_db: f64,
    pub rates: RatePrediction,
    pub window: WindowPrediction,
    pub predicted_visibility: f64,
    pub s_value: f64,
    pub violates: bool,
}

pub fn budget_report(cfg: &SimulationConfig) -> Result<BudgetReport> {
    let ledger = build_ledger(cfg);
    let rates = predict_rates(cfg)?;
    let window = predict_window(cfg, cfg.tia.window_ps)?;
    let verdict = verdict_for(window.visibility);
    Ok(BudgetReport {
        config_hash: config_hash(cfg),
        signal_total_db: ledger.signal.total_db(),
        idler_total_db: ledger.idler.total_db(),
        ledger,
        rates,
        predicted_visibility: window.visibility,
        window,
        s_value: verdict.s_value,
        violates: verdict.violates,
    })
}

impl BudgetReport {
    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn to_csv(&self) -> String {
        let r = &self.rates;
        let mut out = format!("# config_hash={}\nquantity,value\n", self.config_hash);
        let rows: [(&str, f64); 14] = [
            ("signal_total_db", self.signal_total_db),
            ("idler_total_db", self.idler_total_db),
            ("pair_rate_hz", r.pair_rate_hz),
            ("singles_signal_hz", r.singles_signal_hz),
            ("singles_idler_hz", r.singles_idler_hz),
            ("true_coincidence_hz", r.true_coincidence_hz),
            ("monitored_coincidence_hz", r.monitored_coincidence_hz),
            ("central_bin_hz", r.central_bin_hz),
            ("accidental_hz", r.accidental_hz),
            ("window_capture", self.window.capture),
            ("side_leak_fraction", self.window.side_leak),
            ("predicted_visibility", self.predicted_visibility),
            ("s_value", self.s_value),
            ("violates", if self.violates { 1.0 } else { 0.0 }),
        ];
        for (k, v) in rows {
            out.push_str(&format!("{k},{v}\n"));
        }
        out.push_str(&format!(
            "loss_reading,{}\n",
            match r.loss_reading {
                Some(LossReading::Split) => "split",
                Some(LossReading::PerArm) => "per_arm",
                None => "lumped",
            }
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::preset;

    fn quick() -> Scenario {
        let mut s = preset("ideal").unwrap();
        s.scan = crate::runner::ScanPlan::phases(8, 0.05);
        s
    }

    #[test]
    fn range_covers_side_peaks() {
        assert_eq!(histogram_range_ps(&SimulationConfig::default()), 300);
    }

    #[test]
    fn report_verdict_matches_visibility() {
        let r = run_scenario(&quick()).unwrap();
        assert_eq!(r.points.len(), 8);
        assert_eq!(r.violates, verdict_for(r.visibility.v).violates);
        assert!(r.visibility.v > 0.9, "{:?}", r.visibility);
    }

    #[test]
    fn outputs_are_deterministic() {
        let s = quick();
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        let da = tempfile::tempdir().unwrap();
        let db = tempfile::tempdir().unwrap();
        let targets = crate::runner::OutputTargets {
            histograms: true,
            ..Default::default()
        };
        let fa = emit_outputs(&a, da.path(), &targets, OutputFormat::Csv).unwrap();
        let fb = emit_outputs(&b, db.path(), &targets, OutputFormat::Csv).unwrap();
        assert_eq!(fa.len(), fb.len());
        for (x, y) in fa.iter().zip(&fb) {
            let (bx, by) = (fs::read(x).unwrap(), fs::read(y).unwrap());
            assert_eq!(bx, by);
            assert!(String::from_utf8(bx).unwrap().contains(&a.config_hash));
        }
        let scan = fs::read_to_string(&fa[0]).unwrap();
        let lines: Vec<&str> = scan.lines().collect();
        assert_eq!(lines[1], "setting,counts,acquisition_s,singles_a,singles_b");
        assert_eq!(lines.len(), 2 + 8);
    }

    #[test]
    fn unwritable_target_names_path() {
        let r = run_scenario(&quick()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = emit_outputs(&r, &blocker.join("sub"), &Default::default(), OutputFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
