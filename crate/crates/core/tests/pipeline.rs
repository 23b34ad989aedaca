use std::fs;

use franson_core::runner::{
    config_to_toml, emit_outputs, load_config, load_scenario, preset, run_scenario, scenario_to_toml,
    verdict_for, FitStatus, OutputFormat, OutputTargets, ScanPlan, Scenario, SweepParameter, PRESET_NAMES,
};
use franson_core::{Error, SimulationConfig};

fn quick(name: &str, point_s: f64) -> Scenario {
    let mut s = preset(name).unwrap();
    s.scan.acquisition_s = point_s;
    s
}

#[test]
fn long_link_preset_carries_experiment_parameters() {
    let s = preset("paper-100km").unwrap();
    let c = &s.config;
    assert_eq!(c.analyzer_signal.delay_ps, 100.0);
    assert_eq!(c.detector_signal.jitter_fwhm_ps, 65.0);
    assert_eq!(c.source.mean_pairs_per_window, 0.05);
    assert_eq!(c.channel_signal.fiber_length_km + c.channel_idler.fiber_length_km, 100.0);
    assert_eq!(c.tia.window_ps, 100.0);
    assert_eq!(s.scan.settings().len(), 16);
    for name in PRESET_NAMES {
        preset(name).unwrap().validate().unwrap();
    }
}

#[test]
fn empty_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.toml");
    fs::write(&p, "").unwrap();
    match load_config(&p).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 1),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn unknown_key_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    let text = format!("master_sed = 4\n{}", config_to_toml(&SimulationConfig::default()));
    fs::write(&p, &text).unwrap();
    let err = load_config(&p).unwrap_err();
    match &err {
        Error::Parse { line, message, .. } => {
            assert_eq!(*line, 1);
            assert!(message.contains("master_sed"), "{message}");
        }
        e => panic!("unexpected {e}"),
    }
    assert!(err.is_validation());
}

#[test]
fn franson_condition_violation_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.toml");
    let mut cfg = SimulationConfig::default();
    cfg.analyzer_idler.delay_ps = 3.0;
    fs::write(&p, config_to_toml(&cfg)).unwrap();
    let err = load_config(&p).unwrap_err();
    assert!(matches!(err.root(), Error::Validation { .. }), "{err}");
    assert!(err.to_string().contains("Franson"), "{err}");
}

#[test]
fn scenario_file_overrides_preset_tables() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.toml");
    fs::write(
        &p,
        "preset = \"ideal\"\nname = \"mine\"\n[scan]\nn_points = 6\nacquisition_s = 0.2\n",
    )
    .unwrap();
    let s = load_scenario(&p).unwrap();
    assert_eq!(s.name, "mine");
    assert_eq!(s.scan.settings().len(), 6);
    assert_eq!(s.config, preset("ideal").unwrap().config);

    // A full scenario round-trips.
    fs::write(&p, scenario_to_toml(&s)).unwrap();
    assert_eq!(load_scenario(&p).unwrap(), s);
}

#[test]
fn ideal_preset_reaches_unit_visibility() {
    let r = run_scenario(&quick("ideal", 1.0)).unwrap();
    assert_eq!(r.fit_status, FitStatus::Converged);
    assert!(1.0 - r.visibility.v <= 3.0 * r.visibility.sigma_v + 1e-9, "{:?}", r.visibility);
    assert!(r.violates);
}

#[test]
fn back_to_back_beats_100km_on_matched_seeds() {
    // Short runs; the ordering is checked on the mean over a few seeds.
    let (mut near, mut far) = (0.0, 0.0);
    for seed in 1..=4 {
        let mut b = quick("back-to-back", 6.0);
        b.config.master_seed = seed;
        let mut f = quick("paper-100km", 600.0);
        f.config.master_seed = seed;
        near += run_scenario(&b).unwrap().visibility.v;
        far += run_scenario(&f).unwrap().visibility.v;
    }
    assert!(near > far, "{near} vs {far}");
}

#[test]
fn verdict_follows_reported_visibility() {
    for seed in 0..4 {
        let mut s = quick("paper-100km", 30.0);
        s.config.master_seed = seed;
        let r = run_scenario(&s).unwrap();
        assert_eq!(r.violates, verdict_for(r.visibility.v).violates);
        assert_eq!(r.s_value, verdict_for(r.visibility.v).s_value);
    }
}

#[test]
fn flat_scan_reports_degenerate_fit() {
    let mut s = quick("ideal", 0.1);
    s.config.source.mean_pairs_per_window = 0.0;
    let r = run_scenario(&s).unwrap();
    assert_eq!(r.fit_status, FitStatus::Degenerate);
    assert_eq!(r.visibility.v, 0.0);
}

#[test]
fn window_sweep_reuses_histograms() {
    let mut s = quick("window-sweep", 200.0);
    s.scan = ScanPlan::phases(8, 200.0);
    let r = run_scenario(&s).unwrap();
    assert_eq!(r.sweep.len(), 9);
    let row100 = r.sweep.iter().find(|row| row.value == 100.0).unwrap();
    assert_eq!(row100.v, r.visibility.v);
    assert_eq!(s.sweep.unwrap().parameter, SweepParameter::WindowPs);
}

#[test]
fn outputs_are_byte_identical_and_complete() {
    let mut s = quick("ideal", 0.2);
    s.scan = ScanPlan::phases(6, 0.2);
    let targets = OutputTargets {
        histograms: true,
        ..OutputTargets::default()
    };
    let written = |fmt: OutputFormat| {
        let report = run_scenario(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_outputs(&report, dir.path(), &targets, fmt).unwrap();
        let bytes: Vec<(String, Vec<u8>)> = files
            .iter()
            .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), fs::read(f).unwrap()))
            .collect();
        (report, bytes)
    };
    for fmt in [OutputFormat::Csv, OutputFormat::Json] {
        let (r, a) = written(fmt);
        let (_, b) = written(fmt);
        assert_eq!(a, b);
        // scan, report and one histogram per point
        assert_eq!(a.len(), 2 + 6);
        for (name, body) in &a {
            assert!(String::from_utf8_lossy(body).contains(&r.config_hash), "{name}");
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let mut s = quick("ideal", 0.3);
    s.scan = ScanPlan::phases(8, 0.3);
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| run_scenario(&s).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.points, b.points);
    assert_eq!(a.visibility, b.visibility);
}
