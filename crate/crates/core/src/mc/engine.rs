//! End-to-end event simulation.
//!
//! Two routes share one physical model:
//!
//! * [`simulate_explicit`] follows every generated pair through loss, the
//!   joint analyzer outcome and detection. It is exact but its cost scales
//!   with the generated pair rate, so it only suits short spans.
//! * The fused route ([`run_simulation`], [`simulate_histogram`]) samples
//!   only photons that end up registered. Pairs form a Poisson process and
//!   each is classified independently, so the registered signal photons, their
//!   registered idler partners and the unpartnered idler photons are
//!   independent Poisson processes with rates fixed by the link budget.
//!   Signal photons are drawn first and each one draws its idler partner from
//!   the conditional joint distribution.
//!
//! Propagation delay common to both arms is omitted; times are referenced to
//! the pair's emission.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::{Arm, DriftSpec, SimulationConfig};
use crate::error::{Error, Result};
use crate::mc::clicks::ClickStream;
use crate::mc::detector::{detect, finish_clicks, raw_clicks, Origin};
use crate::mc::paths::{JointPathModel, PortOutcome};
use crate::mc::process::{binomial_count, generate_emissions, poisson_count, thin_by_loss, uniform_times};
use crate::mc::rng::{stage_rng, SimRng, Stage};
use crate::physics::{dispersion_broaden, fwhm_to_sigma};
use crate::tia::DelayHistogram;

/// Simulated time covered by one chunk of random streams.
pub const DEFAULT_CHUNK_S: f64 = 1.0;

/// Largest expected pair count [`simulate_explicit`] accepts.
pub const EXPLICIT_MAX_PAIRS: f64 = 5.0e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub chunk_s: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            chunk_s: DEFAULT_CHUNK_S,
        }
    }
}

/// Per-stage event counts of one run.
///
/// On the fused route, stages upstream of registration are never
/// materialized; their counts are drawn from the exact Poisson splits given
/// the realized registrations.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub generated_pairs: u64,
    pub signal_transmitted: u64,
    pub idler_transmitted: u64,
    /// Photons registered by the detector before dead-time filtering.
    pub signal_photons_registered: u64,
    pub idler_photons_registered: u64,
    /// Registered idler photons whose signal partner was also registered.
    pub partner_pairs: u64,
    pub signal_true_clicks: u64,
    pub signal_dark_clicks: u64,
    pub idler_true_clicks: u64,
    pub idler_dark_clicks: u64,
    pub chunks: u64,
}

impl Diagnostics {
    pub fn merge(&mut self, o: &Diagnostics) {
        self.generated_pairs += o.generated_pairs;
        self.signal_transmitted += o.signal_transmitted;
        self.idler_transmitted += o.idler_transmitted;
        self.signal_photons_registered += o.signal_photons_registered;
        self.idler_photons_registered += o.idler_photons_registered;
        self.partner_pairs += o.partner_pairs;
        self.signal_true_clicks += o.signal_true_clicks;
        self.signal_dark_clicks += o.signal_dark_clicks;
        self.idler_true_clicks += o.idler_true_clicks;
        self.idler_dark_clicks += o.idler_dark_clicks;
        self.chunks += o.chunks;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub signal: ClickStream,
    pub idler: ClickStream,
    pub diagnostics: Diagnostics,
}

/// One generated pair as followed by [`simulate_explicit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairEmission {
    pub emission_time: i64,
    pub signal_survived: bool,
    pub idler_survived: bool,
    pub ports: PortOutcome,
    /// Emission time plus analyzer path delay, before timing spread; `None`
    /// unless the photon survived loss and left through the monitored port.
    pub signal_arrival: Option<i64>,
    pub idler_arrival: Option<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitOutput {
    pub signal: ClickStream,
    pub idler: ClickStream,
    pub pairs: Vec<PairEmission>,
    pub diagnostics: Diagnostics,
}

/// Histogram and singles accumulated for one fringe point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCounts {
    pub histogram: DelayHistogram,
    pub signal_singles: u64,
    pub idler_singles: u64,
    pub diagnostics: Diagnostics,
}

/// How [`simulate_histogram`] produces the idler stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    /// Windowed when the configuration allows it, full otherwise.
    #[default]
    Auto,
    /// Every idler click over the whole span.
    Full,
    /// Unpartnered idler photons only near signal clicks (see
    /// [`simulate_histogram`]).
    Windowed,
}

struct ArmTiming {
    delay_ps: i64,
    spread_sigma_ps: f64,
    /// Transmission × efficiency up to the monitored port.
    survival: f64,
}

struct Plan {
    span_ps: i64,
    chunk_ps: i64,
    pair_rate: f64,
    model: JointPathModel,
    signal: ArmTiming,
    idler: ArmTiming,
    signal_rate: f64,
    background_rate: f64,
    config: SimulationConfig,
}

fn arm_timing(cfg: &SimulationConfig, arm: Arm) -> Result<ArmTiming> {
    let ch = cfg.channel(arm);
    let fwhm = dispersion_broaden(cfg.source.photon_fwhm_ps, ch.beta2_ps2_per_km, ch.fiber_length_km)
        .map_err(|e| e.context(format!("dispersion stage ({})", arm.label())))?;
    Ok(ArmTiming {
        delay_ps: cfg.analyzer(arm).delay_ps.round() as i64,
        spread_sigma_ps: fwhm_to_sigma(fwhm),
        survival: cfg.arm_transmission(arm) * cfg.detector(arm).quantum_efficiency,
    })
}

impl Plan {
    fn new(cfg: &SimulationConfig, opts: &EngineOptions) -> Result<Self> {
        cfg.validate().map_err(|e| e.context("configuration"))?;
        if !(opts.chunk_s > 0.0) || !opts.chunk_s.is_finite() {
            return Err(Error::InvalidInput(format!("chunk must be > 0 s, got {}", opts.chunk_s)));
        }
        let model = JointPathModel::new(
            cfg.analyzer_signal.effective_phase(),
            cfg.analyzer_idler.effective_phase(),
            cfg.source.pump_phase_offset_rad,
            cfg.contrast_total(),
        )
        .map_err(|e| e.context("analyzer stage"))?;
        let signal = arm_timing(cfg, Arm::Signal)?;
        let idler = arm_timing(cfg, Arm::Idler)?;
        let pair_rate = cfg.pair_rate_hz();
        // Registered signal photons: half of the transmitted ones leave
        // through the monitored port, independent of phase.
        let signal_rate = pair_rate * signal.survival * 0.5;
        let partnered = signal.survival * (model.bins.joint());
        let background_rate = pair_rate * idler.survival * (0.5 - partnered).max(0.0);
        let span_ps = cfg.acquisition_ps().max(1);
        Ok(Self {
            span_ps,
            chunk_ps: ((opts.chunk_s * 1e12).round() as i64).clamp(1, span_ps),
            pair_rate,
            model,
            signal,
            idler,
            signal_rate,
            background_rate,
            config: cfg.clone(),
        })
    }

    fn chunks(&self) -> impl Iterator<Item = (u64, i64, i64)> + '_ {
        let n = (self.span_ps + self.chunk_ps - 1) / self.chunk_ps;
        (0..n).map(move |k| {
            let t0 = k * self.chunk_ps;
            (k as u64, t0, self.chunk_ps.min(self.span_ps - t0))
        })
    }
}

fn spread<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> i64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng).round() as i64
    } else {
        0
    }
}

/// Random-walk timing offset of the idler channel. Queried chunk by chunk
/// in time order, so the walk continues across chunks.
struct DriftWalk {
    rng: SimRng,
    step: Option<Normal<f64>>,
    interval_ps: i64,
    next_step_ps: i64,
    offset: f64,
}

/// Walk offsets over one chunk: `offsets[k]` holds from `starts[k]` on.
struct DriftTable {
    starts: Vec<i64>,
    offsets: Vec<i64>,
}

impl DriftTable {
    fn at(&self, t: i64) -> i64 {
        let k = self.starts.partition_point(|&s| s <= t);
        if k == 0 {
            0
        } else {
            self.offsets[k - 1]
        }
    }
}

impl DriftWalk {
    fn new(spec: Option<&DriftSpec>, seed: u64) -> Self {
        let (step, interval_ps) = match spec {
            Some(d) if d.step_ps > 0.0 => (
                Some(Normal::new(0.0, d.step_ps).expect("finite step")),
                ((d.interval_s * 1e12).round() as i64).max(1),
            ),
            _ => (None, i64::MAX),
        };
        Self {
            rng: stage_rng(seed, Stage::Drift, 0),
            step,
            interval_ps,
            next_step_ps: interval_ps,
            offset: 0.0,
        }
    }

    /// Offsets valid over `[t0, t1)`, with `t1` the end of everything the
    /// chunk can query.
    fn table(&mut self, t0: i64, t1: i64) -> DriftTable {
        let mut table = DriftTable {
            starts: vec![i64::MIN],
            offsets: vec![0],
        };
        let Some(step) = self.step else {
            return table;
        };
        while self.next_step_ps <= t0 {
            self.offset += step.sample(&mut self.rng);
            self.next_step_ps += self.interval_ps;
        }
        table.offsets[0] = self.offset.round() as i64;
        while self.next_step_ps < t1 {
            self.offset += step.sample(&mut self.rng);
            table.starts.push(self.next_step_ps);
            table.offsets.push(self.offset.round() as i64);
            self.next_step_ps += self.interval_ps;
        }
        table
    }
}

/// Registered signal photons of one chunk and their registered idler
/// partners (arrival times before detector jitter).
struct ChunkPhotons {
    signal: Vec<i64>,
    partners: Vec<i64>,
}

fn signal_and_partners(plan: &Plan, seed: u64, chunk: u64, t0: i64, len: i64, drift: &DriftTable) -> ChunkPhotons {
    let mut rs = stage_rng(seed, Stage::SignalPhotons, chunk);
    let mut rp = stage_rng(seed, Stage::IdlerPartners, chunk);
    let n = poisson_count(plan.signal_rate * len as f64 * 1e-12, &mut rs);
    let emissions = uniform_times(n, len, &mut rs);
    let mut out = ChunkPhotons {
        signal: Vec::with_capacity(emissions.len()),
        partners: Vec::new(),
    };
    for e in emissions {
        let e = e + t0;
        let long: bool = rs.random();
        let ts = e + if long { plan.signal.delay_ps } else { 0 } + spread(plan.signal.spread_sigma_ps, &mut rs);
        out.signal.push(ts);
        if let Some(offset) = plan.model.sample_partner(long, plan.idler.survival, &mut rp) {
            let idler_long = match offset {
                0 => long,
                1 => true,
                _ => false,
            };
            let ti = e
                + if idler_long { plan.idler.delay_ps } else { 0 }
                + spread(plan.idler.spread_sigma_ps, &mut rp)
                + drift.at(e);
            out.partners.push(ti);
        }
    }
    out
}

fn background_photons(plan: &Plan, seed: u64, chunk: u64, t0: i64, len: i64, drift: &DriftTable) -> Vec<i64> {
    let mut rb = stage_rng(seed, Stage::IdlerPhotons, chunk);
    let n = poisson_count(plan.background_rate * len as f64 * 1e-12, &mut rb);
    uniform_times(n, len, &mut rb)
        .into_iter()
        .map(|e| {
            let e = e + t0;
            let long: bool = rb.random();
            e + if long { plan.idler.delay_ps } else { 0 } + spread(plan.idler.spread_sigma_ps, &mut rb) + drift.at(e)
        })
        .collect()
}

/// Upstream counts drawn given the realized registrations.
fn upstream(plan: &Plan, seed: u64, chunk: u64, len: i64, n_signal: u64, n_idler: u64) -> Diagnostics {
    let mut ru = stage_rng(seed, Stage::Upstream, chunk);
    let lam = plan.pair_rate * len as f64 * 1e-12;
    let cfg = &plan.config;
    let (ts, ti) = (cfg.arm_transmission(Arm::Signal), cfg.arm_transmission(Arm::Idler));
    let (es, ei) = (
        cfg.detector_signal.quantum_efficiency,
        cfg.detector_idler.quantum_efficiency,
    );
    let signal_transmitted = n_signal + poisson_count(lam * ts * (1.0 - 0.5 * es), &mut ru);
    let generated_pairs = signal_transmitted + poisson_count(lam * (1.0 - ts), &mut ru);
    let known = n_idler.min(generated_pairs);
    let q = ti * (1.0 - 0.5 * ei) / (1.0 - 0.5 * ti * ei);
    Diagnostics {
        generated_pairs,
        signal_transmitted,
        idler_transmitted: known + binomial_count(generated_pairs - known, q, &mut ru),
        signal_photons_registered: n_signal,
        idler_photons_registered: n_idler,
        chunks: 1,
        ..Diagnostics::default()
    }
}

fn count_origins(stream: &ClickStream, true_clicks: &mut u64, dark_clicks: &mut u64) {
    *true_clicks += stream.true_clicks;
    *dark_clicks += stream.dark_clicks;
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationOutput> {
    run_simulation_with(cfg, &EngineOptions::default())
}

/// Full click streams for both channels over the acquisition.
///
/// Deterministic in `cfg.master_seed`. Signal clicks use only signal-side
/// random streams, so changing idler parameters leaves them bit-identical.
pub fn run_simulation_with(cfg: &SimulationConfig, opts: &EngineOptions) -> Result<SimulationOutput> {
    let plan = Plan::new(cfg, opts)?;
    let seed = cfg.master_seed;
    let mut drift = DriftWalk::new(cfg.drift.as_ref(), seed);
    let mut sig_tagged: Vec<(i64, Origin)> = Vec::new();
    let mut idl_tagged: Vec<(i64, Origin)> = Vec::new();
    let mut diag = Diagnostics::default();
    for (chunk, t0, len) in plan.chunks() {
        let table = drift.table(t0, t0 + len);
        let photons = signal_and_partners(&plan, seed, chunk, t0, len, &table);
        let background = background_photons(&plan, seed, chunk, t0, len, &table);
        let (ns, np) = (photons.signal.len() as u64, photons.partners.len() as u64);
        let mut d = upstream(&plan, seed, chunk, len, ns, np + background.len() as u64);
        d.partner_pairs = np;
        diag.merge(&d);

        let mut rs = stage_rng(seed, Stage::SignalDetector, chunk);
        sig_tagged.extend(raw_clicks(photons.signal, &cfg.detector_signal, t0, len, &mut rs));
        let mut idler = photons.partners;
        idler.extend(background);
        let mut ri = stage_rng(seed, Stage::IdlerDetector, chunk);
        idl_tagged.extend(raw_clicks(idler, &cfg.detector_idler, t0, len, &mut ri));
    }
    let signal = finish_clicks(sig_tagged, cfg.detector_signal.dead_time_ps, plan.span_ps, Arm::Signal.label());
    let idler = finish_clicks(idl_tagged, cfg.detector_idler.dead_time_ps, plan.span_ps, Arm::Idler.label());
    count_origins(&signal, &mut diag.signal_true_clicks, &mut diag.signal_dark_clicks);
    count_origins(&idler, &mut diag.idler_true_clicks, &mut diag.idler_dark_clicks);
    debug_assert!(signal.is_strictly_sorted() && signal.within_span());
    debug_assert!(idler.is_strictly_sorted() && idler.within_span());
    Ok(SimulationOutput {
        signal,
        idler,
        diagnostics: diag,
    })
}

/// Merge overlapping `[s − half, s + half]` intervals around sorted times.
fn union_intervals(times: &[i64], half: i64) -> Vec<(i64, i64)> {
    let mut out: Vec<(i64, i64)> = Vec::new();
    for &t in times {
        let (a, b) = (t - half, t + half + 1);
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Start–stop histogram of one configuration with the signal channel as
/// start, accumulated chunk by chunk without keeping whole click streams.
///
/// In windowed mode the unpartnered idler photons, which form a stationary
/// Poisson process, are generated only within the histogram range of some
/// signal click; their jitter and drift are irrelevant there because a
/// shifted stationary Poisson process is again the same process. The idler
/// singles count then includes a Poisson draw for the unplaced photons.
/// Windowed mode needs zero idler dead time.
///
/// Start–stop pairs straddling a chunk boundary are not counted; with
/// one-second chunks this affects a fraction of order 1e-9 of all pairs.
pub fn simulate_histogram(
    cfg: &SimulationConfig,
    bin_ps: i64,
    range_ps: i64,
    mode: HistogramMode,
    opts: &EngineOptions,
) -> Result<PointCounts> {
    let plan = Plan::new(cfg, opts)?;
    let windowed = match mode {
        HistogramMode::Full => false,
        HistogramMode::Auto => cfg.detector_idler.dead_time_ps == 0.0,
        HistogramMode::Windowed => {
            if cfg.detector_idler.dead_time_ps != 0.0 {
                return Err(Error::validation(
                    "detector_idler.dead_time_ps",
                    "windowed histogramming requires zero idler dead time",
                ));
            }
            true
        }
    };
    let seed = cfg.master_seed;
    let mut drift = DriftWalk::new(cfg.drift.as_ref(), seed);
    let mut hist = DelayHistogram::symmetric(bin_ps, range_ps)?;
    let mut out_diag = Diagnostics::default();
    let (mut signal_singles, mut idler_singles) = (0u64, 0u64);
    for (chunk, t0, len) in plan.chunks() {
        let table = drift.table(t0, t0 + len);
        let photons = signal_and_partners(&plan, seed, chunk, t0, len, &table);
        let (ns, np) = (photons.signal.len() as u64, photons.partners.len() as u64);

        let mut rs = stage_rng(seed, Stage::SignalDetector, chunk);
        let sig_raw = raw_clicks(photons.signal, &cfg.detector_signal, t0, len, &mut rs);
        let signal = finish_clicks(sig_raw, cfg.detector_signal.dead_time_ps, plan.span_ps, "signal");

        let mut idler_photons = photons.partners;
        let n_background;
        if windowed {
            let mut rb = stage_rng(seed, Stage::IdlerPhotons, chunk);
            n_background = poisson_count(plan.background_rate * len as f64 * 1e-12, &mut rb);
            let mut placed = Vec::new();
            for (a, b) in union_intervals(&signal.timestamps, range_ps) {
                let k = poisson_count(plan.background_rate * (b - a) as f64 * 1e-12, &mut rb);
                placed.extend(uniform_times(k, b - a, &mut rb).into_iter().map(|t| t + a));
            }
            let mut ri = stage_rng(seed, Stage::IdlerDetector, chunk);
            let mut tagged = raw_clicks(idler_photons, &cfg.detector_idler, t0, len, &mut ri);
            // Already at their final, jittered positions.
            tagged.extend(placed.into_iter().map(|t| (t, Origin::Photon)));
            let idler = finish_clicks(tagged, 0.0, plan.span_ps, "idler");
            hist.accumulate(&signal.timestamps, &idler.timestamps);
            idler_singles += np + n_background + idler.dark_clicks;
            out_diag.idler_dark_clicks += idler.dark_clicks;
            out_diag.idler_true_clicks += np + n_background;
        } else {
            let background = background_photons(&plan, seed, chunk, t0, len, &table);
            n_background = background.len() as u64;
            idler_photons.extend(background);
            let mut ri = stage_rng(seed, Stage::IdlerDetector, chunk);
            let tagged = raw_clicks(idler_photons, &cfg.detector_idler, t0, len, &mut ri);
            let idler = finish_clicks(tagged, cfg.detector_idler.dead_time_ps, plan.span_ps, "idler");
            hist.accumulate(&signal.timestamps, &idler.timestamps);
            idler_singles += idler.len() as u64;
            count_origins(&idler, &mut out_diag.idler_true_clicks, &mut out_diag.idler_dark_clicks);
        }
        signal_singles += signal.len() as u64;
        count_origins(&signal, &mut out_diag.signal_true_clicks, &mut out_diag.signal_dark_clicks);

        let mut d = upstream(&plan, seed, chunk, len, ns, np + n_background);
        d.partner_pairs = np;
        out_diag.merge(&d);
    }
    Ok(PointCounts {
        histogram: hist,
        signal_singles,
        idler_singles,
        diagnostics: out_diag,
    })
}

/// Pair-by-pair reference simulation: emission, per-arm loss, joint
/// analyzer outcome, timing spread, then [`detect`] with the detectors'
/// quantum efficiency. Rejects configurations expecting more than
/// [`EXPLICIT_MAX_PAIRS`] generated pairs.
pub fn simulate_explicit(cfg: &SimulationConfig) -> Result<ExplicitOutput> {
    let plan = Plan::new(cfg, &EngineOptions::default())?;
    let span_s = plan.span_ps as f64 * 1e-12;
    let expected = plan.pair_rate * span_s;
    if expected > EXPLICIT_MAX_PAIRS {
        return Err(Error::InvalidInput(format!(
            "explicit simulation expects {expected:.3e} pairs, above the {EXPLICIT_MAX_PAIRS:.0e} limit"
        )));
    }
    let seed = cfg.master_seed;
    let emissions = generate_emissions(plan.pair_rate, span_s, &mut stage_rng(seed, Stage::Emissions, 0))
        .map_err(|e| e.context("emission stage"))?;
    let index: Vec<usize> = (0..emissions.len()).collect();
    let mut survived = [vec![false; emissions.len()], vec![false; emissions.len()]];
    for (k, (arm, stage)) in [(Arm::Signal, Stage::SignalLoss), (Arm::Idler, Stage::IdlerLoss)]
        .into_iter()
        .enumerate()
    {
        let kept = thin_by_loss(&index, cfg.arm_transmission(arm), &mut stage_rng(seed, stage, 0))
            .map_err(|e| e.context(format!("loss stage ({})", arm.label())))?;
        for i in kept {
            survived[k][i] = true;
        }
    }

    let mut rpath = stage_rng(seed, Stage::Paths, 0);
    let mut drift = DriftWalk::new(cfg.drift.as_ref(), seed);
    let table = drift.table(0, plan.span_ps);
    let mut pairs = Vec::with_capacity(emissions.len());
    for (i, &e) in emissions.iter().enumerate() {
        let ports = plan.model.sample(&mut rpath);
        let arrival = |ok: bool, path: crate::mc::paths::PortPath, delay: i64| {
            (ok && path.is_monitored()).then(|| e + if path.is_long() { delay } else { 0 })
        };
        pairs.push(PairEmission {
            emission_time: e,
            signal_survived: survived[0][i],
            idler_survived: survived[1][i],
            ports,
            signal_arrival: arrival(survived[0][i], ports.signal, plan.signal.delay_ps),
            idler_arrival: arrival(survived[1][i], ports.idler, plan.idler.delay_ps),
        });
    }

    let mut rs = stage_rng(seed, Stage::SignalPhotons, 0);
    let mut signal_arrivals: Vec<i64> = pairs
        .iter()
        .filter_map(|p| p.signal_arrival)
        .map(|t| t + spread(plan.signal.spread_sigma_ps, &mut rs))
        .collect();
    let mut ri = stage_rng(seed, Stage::IdlerPhotons, 0);
    let mut idler_arrivals: Vec<i64> = pairs
        .iter()
        .filter_map(|p| p.idler_arrival.map(|t| t + table.at(p.emission_time)))
        .map(|t| t + spread(plan.idler.spread_sigma_ps, &mut ri))
        .collect();
    signal_arrivals.sort_unstable();
    idler_arrivals.sort_unstable();

    let signal = detect(
        &signal_arrivals,
        &cfg.detector_signal,
        plan.span_ps,
        Arm::Signal.label(),
        &mut stage_rng(seed, Stage::SignalDetector, 0),
    )
    .map_err(|e| e.context("detector stage (signal)"))?;
    let idler = detect(
        &idler_arrivals,
        &cfg.detector_idler,
        plan.span_ps,
        Arm::Idler.label(),
        &mut stage_rng(seed, Stage::IdlerDetector, 0),
    )
    .map_err(|e| e.context("detector stage (idler)"))?;

    let diagnostics = Diagnostics {
        generated_pairs: emissions.len() as u64,
        signal_transmitted: survived[0].iter().filter(|&&s| s).count() as u64,
        idler_transmitted: survived[1].iter().filter(|&&s| s).count() as u64,
        signal_photons_registered: signal.true_clicks,
        idler_photons_registered: idler.true_clicks,
        partner_pairs: 0,
        signal_true_clicks: signal.true_clicks,
        signal_dark_clicks: signal.dark_clicks,
        idler_true_clicks: idler.true_clicks,
        idler_dark_clicks: idler.dark_clicks,
        chunks: 1,
    };
    Ok(ExplicitOutput {
        signal,
        idler,
        pairs,
        diagnostics,
    })
}
