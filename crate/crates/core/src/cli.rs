//! `sphereflock` command-line interface.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 configuration or IO error,
//! 3 antipodal abort.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::admissibility::{check_initial, thresholds};
use crate::config::{Config, PRESETS};
use crate::diagnostics::{fit_decay_rate, DiagnosticsFrame};
use crate::error::{Error, Result};
use crate::integrator::simulate;
use crate::output::{
    default_fit_window, fit_frames, read_frames_csv, write_frames_csv, write_full_state_csv,
    FitSummary, RunSummary, RuntimeStats,
};
use crate::verify::{run_suite, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ANTIPODAL: i32 = 3;

pub const THREADS_ENV: &str = "SPHEREFLOCK_THREADS";

/// `println!` that tolerates a closed stdout, e.g. when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Debug, Parser)]
#[command(
    name = "sphereflock",
    version,
    about = "Cucker-Smale flocking on the unit sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write the frames CSV and a JSON summary.
    Simulate(SimulateArgs),
    /// Evaluate the admissibility condition on the initial data.
    Check(SourceArgs),
    /// Fit the exponential decay rate of a column of a frames CSV.
    FitRate(FitRateArgs),
    /// Run the invariant suite.
    Verify(VerifyArgs),
    /// Write the configuration of a named preset.
    Preset(PresetArgs),
}

#[derive(Debug, Args)]
struct SourceArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration (paper-sigma1, paper-sigma5).
    #[arg(long)]
    preset: Option<String>,
    /// Override σ.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    frame_stride: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the projection back onto the constraint set after each step.
    #[arg(long)]
    no_projection: bool,
    /// Frames CSV path.
    #[arg(long, default_value = "frames.csv")]
    out: PathBuf,
    /// Summary JSON path; defaults to the CSV path with extension `summary.json`.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Also write per-agent positions and velocities at every frame.
    #[arg(long)]
    full_state: Option<PathBuf>,
    /// Fit window `T0 T1`; defaults to `[t_end/8, t_end]`.
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    fit_window: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct FitRateArgs {
    /// Frames CSV written by `simulate`.
    csv: PathBuf,
    #[arg(long, default_value = "D_x")]
    column: String,
    /// Fit window `T0 T1`; defaults to `[t_last/8, t_last]`.
    #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
    window: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Fewer samples and a shorter reference run.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct PresetArgs {
    name: String,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Check(a) => cmd_check(a),
        Command::FitRate(a) => cmd_fit_rate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Preset(a) => cmd_preset(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_antipodal() {
        EXIT_ANTIPODAL
    } else {
        EXIT_CONFIG
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n >= 1).ok_or_else(|| {
        Error::Config(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    #[cfg(feature = "parallel")]
    {
        // A second call in the same process finds the pool already built.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn thread_count() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn load_config(s: &SourceArgs) -> Result<Config> {
    let mut cfg = match (&s.config, &s.preset) {
        (Some(path), _) => Config::load(path)?,
        (None, Some(name)) => Config::preset(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown preset {name:?}; known: {}",
                PRESETS.join(", ")
            ))
        })?,
        (None, None) => return Err(Error::Config("give --config or --preset".into())),
    };
    if let Some(sigma) = s.sigma {
        cfg.params.sigma = sigma;
    }
    Ok(cfg)
}

fn window_arg(w: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    w.as_ref().map(|v| (v[0], v[1]))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_simulate(a: SimulateArgs) -> Result<i32> {
    let mut cfg = load_config(&a.source)?;
    if let Some(t) = a.t_end {
        cfg.sim.t_end = t;
    }
    if let Some(dt) = a.dt {
        cfg.sim.dt = dt;
    }
    if let Some(k) = a.frame_stride {
        cfg.sim.frame_stride = k;
    }
    if let Some(seed) = a.seed {
        cfg.sim.seed = seed;
    }
    if a.no_projection {
        cfg.sim.projection = false;
    }
    let scenario = cfg.build()?;
    let th = thresholds(&scenario.params.kernel, scenario.params.sigma).ok();
    let admissibility = check_initial(&scenario.ensemble, &scenario.params).ok();

    let started = Instant::now();
    let (traj, aborted_at) = match simulate(&scenario.ensemble, &scenario.params, &scenario.sim) {
        Ok(t) => (t, None),
        Err(Error::AntipodalAbort { time, partial }) => (*partial, Some(time)),
        Err(e) => return Err(e),
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    let frames: Vec<DiagnosticsFrame> = traj.frames.iter().map(|f| f.diagnostics).collect();
    write_frames_csv(create(&a.out)?, &frames)?;
    if let Some(path) = &a.full_state {
        write_full_state_csv(create(path)?, &traj)?;
    }

    let window =
        window_arg(&a.fit_window).unwrap_or_else(|| default_fit_window(scenario.sim.t_end));
    let summary = RunSummary {
        label: scenario.label.clone(),
        n_agents: scenario.ensemble.n(),
        sigma: scenario.params.sigma,
        kernel: scenario.params.kernel.name().to_string(),
        thresholds: th,
        admissibility,
        delta: th.map(|t| t.delta),
        final_frame: *frames.last().expect("trajectory has a first frame"),
        fit: FitSummary::from_result(window, fit_frames(&frames, window)),
        aborted_at,
        runtime: RuntimeStats {
            steps: traj.steps_taken,
            wall_seconds,
            dt: scenario.sim.dt,
            t_end: scenario.sim.t_end,
            frame_stride: scenario.sim.frame_stride,
            projection: scenario.sim.projection,
            threads: thread_count(),
            max_step_drift: traj.max_step_drift,
            initial_adjustment: scenario.adjustment,
        },
    };
    let json = summary.to_json()?;
    let summary_path = a
        .summary
        .unwrap_or_else(|| a.out.with_extension("summary.json"));
    let mut w = create(&summary_path)?;
    writeln!(w, "{json}")?;
    w.flush()?;
    say!("{json}");

    Ok(match aborted_at {
        Some(t) => {
            eprintln!("antipodal configuration reached at t = {t}; partial output written");
            EXIT_ANTIPODAL
        }
        None => EXIT_OK,
    })
}

fn cmd_check(a: SourceArgs) -> Result<i32> {
    let scenario = load_config(&a)?.build()?;
    let report = check_initial(&scenario.ensemble, &scenario.params)?;
    #[derive(Serialize)]
    struct CheckOutput<'a> {
        label: &'a str,
        sigma: f64,
        #[serde(flatten)]
        report: crate::admissibility::AdmissibilityReport,
    }
    let out = CheckOutput {
        label: &scenario.label,
        sigma: scenario.params.sigma,
        report,
    };
    say!("{}", to_json(&out)?);
    Ok(EXIT_OK)
}

fn cmd_fit_rate(a: FitRateArgs) -> Result<i32> {
    let table = read_frames_csv(BufReader::new(File::open(&a.csv)?))?;
    let series = table.series(&a.column)?;
    let t_last = series.last().map(|s| s.0).unwrap_or(0.0);
    let window = window_arg(&a.window).unwrap_or_else(|| default_fit_window(t_last));
    let fit = fit_decay_rate(&series, window)?;
    #[derive(Serialize)]
    struct FitOutput<'a> {
        column: &'a str,
        window: (f64, f64),
        #[serde(flatten)]
        fit: crate::diagnostics::DecayFit,
    }
    say!(
        "{}",
        to_json(&FitOutput {
            column: &a.column,
            window,
            fit
        })?
    );
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    let mut opts = if a.quick {
        VerifyOptions::quick()
    } else {
        VerifyOptions::default()
    };
    if let Some(seed) = a.seed {
        opts.seed = seed;
    }
    let report = run_suite(&opts);
    for s in &report.suites {
        let status = if s.passed() { "PASS" } else { "FAIL" };
        say!(
            "{status} {:<28} {}/{} checks passed",
            s.name,
            s.checks - s.failures,
            s.checks
        );
        for note in &s.notes {
            say!("     {note}");
        }
    }
    say!("{} checks, {} failures", report.checks(), report.failures());
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    })
}

fn cmd_preset(a: PresetArgs) -> Result<i32> {
    let cfg = Config::preset(&a.name).ok_or_else(|| {
        Error::Config(format!(
            "unknown preset {:?}; known: {}",
            a.name,
            PRESETS.join(", ")
        ))
    })?;
    let text = cfg.emit()?;
    match a.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let _ = write!(std::io::stdout().lock(), "{text}");
        }
    }
    Ok(EXIT_OK)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Config(e.to_string()))
}
