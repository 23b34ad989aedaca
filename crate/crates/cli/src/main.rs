//! `franson`: command-line front end for franson-core.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use franson_core::budget::{optimize_window, WindowObjective};
use franson_core::mc::{read_clicks, run_simulation, write_clicks, ClickFormat, ClickHeader};
use franson_core::runner::{
    budget_report, config_hash, emit_outputs, load_config, load_scenario, preset, run_scenario, FitStatus,
    OutputFormat, Scenario, PRESET_NAMES,
};
use franson_core::tia::{build_histogram, count_in_window};
use franson_core::{Error, SimulationConfig};

#[derive(Parser)]
#[command(name = "franson", version, about = "Franson-interferometer link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed, overriding the one in the file or preset.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Number of evenly spaced fringe phases.
    #[arg(long)]
    points: Option<usize>,
    /// Acquisition time in seconds (per fringe point for `fringe`).
    #[arg(long)]
    acquisition_s: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Built-in preset used instead of (or as base for) an input file.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Objective {
    Chsh,
    Rate,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the two click streams for a configuration.
    Simulate {
        config: Option<PathBuf>,
        /// Write click files in the compact binary format.
        #[arg(long)]
        binary: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a fringe scan and report visibility and the CHSH verdict.
    Fringe {
        scenario: Option<PathBuf>,
        /// Also dump one delay histogram per fringe point.
        #[arg(long)]
        histograms: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Print the loss ledger, predicted rates and visibility.
    Budget {
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Build a start/stop delay histogram from two click files.
    Histogram {
        clicks_a: PathBuf,
        clicks_b: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        bin_ps: f64,
        #[arg(long, default_value_t = 300.0)]
        range_ps: f64,
        /// Coincidence window reported around zero delay.
        #[arg(long, default_value_t = 100.0)]
        window_ps: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Choose the coincidence window from the analytic model.
    OptimizeWindow {
        config: Option<PathBuf>,
        /// Comma-separated candidate windows in ps.
        #[arg(long, value_delimiter = ',', default_value = "60,70,80,90,100,110,120,130,140")]
        grid_ps: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Objective::Chsh)]
        objective: Objective,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Core(Error),
    Degenerate,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Degenerate) => ExitCode::from(3),
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            if e.is_degenerate_fit() {
                ExitCode::from(3)
            } else if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn config_from(path: Option<&Path>, common: &Common) -> Result<SimulationConfig, Error> {
    let mut cfg = match (path, &common.preset) {
        (Some(p), _) => load_config(p)?,
        (None, Some(name)) => preset(name)?.config,
        (None, None) => {
            return Err(Error::InvalidInput(format!(
                "give a config file or --preset (one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(t) = common.acquisition_s {
        cfg.acquisition_time_s = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenario_from(path: Option<&Path>, common: &Common) -> Result<Scenario, Error> {
    let mut s = match (path, &common.preset) {
        (Some(p), _) => load_scenario(p)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(Error::InvalidInput(format!(
                "give a scenario file or --preset (one of {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    if let Some(seed) = common.seed {
        s.config.master_seed = seed;
    }
    if let Some(n) = common.points {
        s.scan.points.clear();
        s.scan.n_points = Some(n);
    }
    if let Some(t) = common.acquisition_s {
        s.scan.acquisition_s = t;
    }
    s.validate()?;
    Ok(s)
}

fn out_dir(common: &Common) -> Result<PathBuf, Error> {
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_file(path: PathBuf, body: &str) -> Result<(), Error> {
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate { config, binary, common } => {
            let cfg = config_from(config.as_deref(), &common)?;
            let out = run_simulation(&cfg)?;
            let dir = out_dir(&common)?;
            let header = ClickHeader {
                seed: cfg.master_seed,
                config_hash: config_hash(&cfg),
            };
            let format = if binary { ClickFormat::Binary } else { ClickFormat::Text };
            for stream in [&out.signal, &out.idler] {
                let path = dir.join(format!("{}.clicks", stream.channel));
                write_clicks(&path, stream, &header, format)?;
                println!("wrote {} ({} clicks)", path.display(), stream.len());
            }
            let diag = serde_json::json!({
                "config_hash": header.config_hash,
                "seed": header.seed,
                "diagnostics": out.diagnostics,
            });
            write_file(dir.join("diagnostics.json"), &format!("{:#}\n", diag))?;
            Ok(())
        }
        Command::Fringe {
            scenario,
            histograms,
            common,
        } => {
            let mut s = scenario_from(scenario.as_deref(), &common)?;
            s.outputs.histograms |= histograms;
            let report = run_scenario(&s)?;
            let dir = out_dir(&common)?;
            for path in emit_outputs(&report, &dir, &s.outputs, common.format.into())? {
                println!("wrote {}", path.display());
            }
            let v = &report.visibility;
            println!(
                "{}: V = {:.4} ± {:.4}, S = {:.4}, violates = {}, predicted V = {:.4}, {} events in {:.1} s",
                report.scenario,
                v.v,
                v.sigma_v,
                report.s_value,
                report.violates,
                report.predicted_visibility,
                report.events(),
                report.wall_clock_s
            );
            if report.fit_status == FitStatus::Degenerate {
                eprintln!("error: fringe fit degenerate (flat or empty scan)");
                return Err(Failure::Degenerate);
            }
            Ok(())
        }
        Command::Budget { config, common } => {
            let cfg = config_from(config.as_deref(), &common)?;
            let report = budget_report(&cfg)?;
            let body = match common.format {
                Format::Csv => report.to_csv(),
                Format::Json => report.to_json(),
            };
            match &common.out_dir {
                Some(_) => {
                    let ext = if common.format == Format::Csv { "csv" } else { "json" };
                    write_file(out_dir(&common)?.join(format!("budget.{ext}")), &body)?;
                }
                None => print!("{body}"),
            }
            Ok(())
        }
        Command::Histogram {
            clicks_a,
            clicks_b,
            bin_ps,
            range_ps,
            window_ps,
            common,
        } => {
            let (a, ha) = read_clicks(&clicks_a)?;
            let (b, _) = read_clicks(&clicks_b)?;
            let hist = build_histogram(&a, &b, bin_ps, range_ps)?;
            let counts = count_in_window(&hist, 0.0, window_ps)?;
            let body = match common.format {
                Format::Csv => format!("# config_hash={}\n{}", ha.config_hash, hist.to_csv()),
                Format::Json => format!(
                    "{:#}\n",
                    serde_json::json!({
                        "config_hash": ha.config_hash,
                        "window_ps": window_ps,
                        "window_counts": counts,
                        "histogram": hist,
                    })
                ),
            };
            match &common.out_dir {
                Some(_) => {
                    let ext = if common.format == Format::Csv { "csv" } else { "json" };
                    write_file(out_dir(&common)?.join(format!("histogram.{ext}")), &body)?;
                }
                None => print!("{body}"),
            }
            eprintln!("{counts} coincidences within ±{} ps of zero delay", window_ps / 2.0);
            Ok(())
        }
        Command::OptimizeWindow {
            config,
            grid_ps,
            objective,
            common,
        } => {
            let cfg = config_from(config.as_deref(), &common)?;
            let objective = match objective {
                Objective::Chsh => WindowObjective::ChshS,
                Objective::Rate => WindowObjective::RateWeighted,
            };
            let opt = optimize_window(&cfg, &grid_ps, objective)?;
            let body = match common.format {
                Format::Csv => format!("# config_hash={}\n{}", config_hash(&cfg), opt.to_csv()),
                Format::Json => format!("{:#}\n", serde_json::to_value(&opt).expect("serializable")),
            };
            match &common.out_dir {
                Some(_) => {
                    let ext = if common.format == Format::Csv { "csv" } else { "json" };
                    write_file(out_dir(&common)?.join(format!("window.{ext}")), &body)?;
                }
                None => print!("{body}"),
            }
            eprintln!("best window: {} ps", opt.best_window_ps);
            Ok(())
        }
    }
}
