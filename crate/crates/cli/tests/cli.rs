use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn franson(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_franson"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn budget_reports_split_reading_and_rates() {
    let dir = tempfile::tempdir().unwrap();
    let o = franson(&["budget", "--preset", "paper-100km"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("# config_hash="));
    assert!(out.contains("loss_reading,split"));
    assert!(out.contains("signal_total_db,25"));

    let o = franson(&["budget", "--preset", "paper-100km", "--format", "json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rate = v["rates"]["true_coincidence_hz"].as_f64().unwrap();
    assert!(rate > 2.0 / 3.0 && rate < 6.0);
}

#[test]
fn fringe_writes_outputs_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let o = franson(
            &["fringe", "--preset", "ideal", "--points", "8", "--acquisition-s", "0.2", "--seed", "9", "--out-dir", sub],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join(sub).join("ideal.scan.csv")).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 2 + 8);
    assert!(dir.path().join("a/ideal.report.json").exists());
}

#[test]
fn degenerate_fit_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("flat.toml");
    // A config table replaces the preset's wholesale: no pairs at all.
    let cfg = "acquisition_time_s = 1.0\nmaster_seed = 1\n\
               [config.source]\nmean_pairs_per_window = 0.0\n\
               [config.detector_signal]\ndark_rate_hz = 0.0\n\
               [config.detector_idler]\ndark_rate_hz = 0.0\n";
    fs::write(&s, format!("preset = \"ideal\"\n[scan]\nn_points = 8\nacquisition_s = 0.1\n[config]\n{cfg}")).unwrap();
    let o = franson(&["fringe", s.to_str().unwrap(), "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    assert_eq!(franson(&["budget", empty.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(franson(&["budget", "--preset", "nope"], dir.path()).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "acquisition_time_s = 1.0\nmaster_seed = 1\n[tia]\nwindow_ps = 100.0\nhistogram_bin_ps = 200.0\n").unwrap();
    assert_eq!(franson(&["budget", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn simulate_then_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let o = franson(
        &["simulate", "--preset", "ideal", "--acquisition-s", "0.5", "--out-dir", "clicks"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = franson(&["histogram", "clicks/signal.clicks", "clicks/idler.clicks"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.lines().nth(1).unwrap().starts_with("delay_ps,counts"));
    let total: u64 = out.lines().skip(2).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert!(total > 1000, "{total}");
}

#[test]
fn optimize_window_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = franson(&["optimize-window", "--preset", "paper-100km", "--grid-ps", "60,100"], dir.path());
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 4);
    let o = franson(&["optimize-window", "--preset", "paper-100km", "--grid-ps", "250"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
