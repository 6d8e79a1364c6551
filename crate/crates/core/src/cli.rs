//! `hazardlab simulate | intensity | verify`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::compensator::{formula, window_compensator, Engine, LocalJumpWindow};
use crate::config::{OutputFormat, RunConfig};
use crate::error::{HazardError, Result};
use crate::markov::{build_windows, simulate_price_path, DefaultCause, Observation};
use crate::verification::{map_paths, report_csv, run_verification, with_threads, VerifyOutcome, FORMAT_VERSION};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_STAT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const THREADS_ENV: &str = "HAZARDLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "hazardlab", version, about = "Default intensities, compensators and their Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate paths and write per-path summaries.
    Simulate(CommonArgs),
    /// Evaluate the intensity curve over a window.
    Intensity(CommonArgs),
    /// Run the martingale and orthogonality tests.
    Verify(CommonArgs),
}

#[derive(Debug, clap::Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Options shared by the subcommands once flags and config are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>, format: OutputFormat) -> Self {
        Self { seed: None, out: out.into(), format, threads: None }
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| HazardError::Io(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSummary {
    pub index: u64,
    /// `None` when the path survives the horizon.
    pub tau: Option<f64>,
    pub cause: Option<DefaultCause>,
    pub windows: Vec<LocalJumpWindow>,
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateSummary {
    pub format_version: u32,
    pub seed: u64,
    pub n_paths: usize,
    pub horizon: f64,
    pub defaults: usize,
    pub default_fraction: f64,
    pub se: f64,
    pub paths: Vec<PathSummary>,
}

/// Simulates the configured paths and writes their summaries.
pub fn cmd_simulate(cfg: &RunConfig, opts: &RunOptions) -> Result<SimulateSummary> {
    let model = cfg.model_spec()?;
    let schedule = cfg.schedule()?;
    let sim = cfg.simulate.as_ref();
    let n = sim.map_or(1000, |s| s.n_paths);
    let seed = opts.seed.or(sim.and_then(|s| s.seed)).unwrap_or(0);
    let paths = with_threads(opts.threads, || {
        map_paths(n, seed, |i, rng| {
            let path = simulate_price_path(&model, &schedule, &cfg.simulation, rng)?;
            Ok(PathSummary {
                index: i,
                tau: path.tau.is_finite().then_some(path.tau),
                cause: path.cause,
                windows: build_windows(&path, &schedule, &model),
                observations: path.observations,
            })
        })
    })??;
    let defaults = paths.iter().filter(|p| p.tau.is_some()).count();
    let p = defaults as f64 / n as f64;
    let summary = SimulateSummary {
        format_version: FORMAT_VERSION,
        seed,
        n_paths: n,
        horizon: schedule.horizon(),
        defaults,
        default_fraction: p,
        se: (p * (1.0 - p) / n as f64).sqrt(),
        paths,
    };
    match opts.format {
        OutputFormat::Json => write_file(&opts.out, "simulate.json", &to_json(&summary)?)?,
        OutputFormat::Csv => write_file(&opts.out, "simulate.csv", &simulate_csv(&summary))?,
    };
    Ok(summary)
}

fn simulate_csv(s: &SimulateSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# format_version={},seed={},n_paths={},horizon={},default_fraction={},se={}",
        s.format_version, s.seed, s.n_paths, s.horizon, s.default_fraction, s.se
    );
    out.push_str("path,tau,cause,n_windows,n_observations\n");
    for p in &s.paths {
        let cause = match p.cause {
            Some(DefaultCause::Diffusion) => "diffusion",
            Some(DefaultCause::Jump) => "jump",
            Some(DefaultCause::Initial) => "initial",
            None => "",
        };
        let tau = p.tau.map_or("inf".to_string(), |t| t.to_string());
        let _ = writeln!(out, "{},{tau},{cause},{},{}", p.index, p.windows.len(), p.observations.len());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityCurve {
    pub format_version: u32,
    pub engine: Engine,
    pub formula: String,
    pub window: LocalJumpWindow,
    /// `(t, λ(t))`.
    pub points: Vec<(f64, f64)>,
    /// `(t, mass)`.
    pub atoms: Vec<(f64, f64)>,
}

/// The intensity over the configured window, without writing anything.
pub fn intensity_curve(cfg: &RunConfig) -> Result<IntensityCurve> {
    let model = cfg.model_spec()?;
    let Some(icfg) = &cfg.intensity else {
        return Err(HazardError::Config("the configuration has no intensity section".into()));
    };
    let window = cfg.window(icfg, &model)?;
    let path = window_compensator(&model, &window, icfg.engine, icfg.knots)?;
    Ok(IntensityCurve {
        format_version: FORMAT_VERSION,
        engine: icfg.engine,
        formula: formula(&model, icfg.engine).to_string(),
        window,
        points: path.knots.iter().copied().zip(path.density.iter().copied()).collect(),
        atoms: path.atoms.clone(),
    })
}

/// Evaluates the intensity over the configured window.
pub fn cmd_intensity(cfg: &RunConfig, opts: &RunOptions) -> Result<IntensityCurve> {
    let curve = intensity_curve(cfg)?;
    match opts.format {
        OutputFormat::Json => {
            write_file(&opts.out, "intensity.json", &to_json(&curve)?)?;
        }
        OutputFormat::Csv => {
            let head = format!(
                "# format_version={},engine={}\n# formula: {}\n",
                curve.format_version,
                curve.engine.label(),
                curve.formula
            );
            let mut body = head.clone();
            body.push_str("t,lambda\n");
            for (t, l) in &curve.points {
                let _ = writeln!(body, "{t},{l}");
            }
            write_file(&opts.out, "intensity.csv", &body)?;
            let mut atoms = head;
            atoms.push_str("t,mass\n");
            for (t, m) in &curve.atoms {
                let _ = writeln!(atoms, "{t},{m}");
            }
            write_file(&opts.out, "atoms.csv", &atoms)?;
        }
    }
    Ok(curve)
}

/// Runs the configured verification without writing anything. `seed`
/// overrides `verify.seed`; one of them is required.
pub fn verify_outcome(cfg: &RunConfig, seed: Option<u64>, threads: Option<usize>) -> Result<VerifyOutcome> {
    let model = cfg.model_spec()?;
    let schedule = cfg.schedule()?;
    let Some(v) = &cfg.verify else {
        return Err(HazardError::Config("the configuration has no verify section".into()));
    };
    let Some(seed) = seed.or(v.seed) else {
        return Err(HazardError::Config("verification runs need a seed (verify.seed or --seed)".into()));
    };
    let settings = cfg.settings_for(v, seed);
    with_threads(threads, || run_verification(&model, &schedule, &cfg.simulation, &settings))?
}

/// Runs the configured verification and writes its reports.
pub fn cmd_verify(cfg: &RunConfig, opts: &RunOptions) -> Result<VerifyOutcome> {
    let outcome = verify_outcome(cfg, opts.seed, opts.threads)?;
    match opts.format {
        OutputFormat::Json => {
            write_file(&opts.out, "verify.json", &to_json(&outcome)?)?;
        }
        OutputFormat::Csv => {
            write_file(&opts.out, "verify_residual.csv", &report_csv(&outcome.residual))?;
            if let Some(o) = &outcome.orthogonality {
                write_file(&opts.out, "verify_orthogonality.csv", &report_csv(o))?;
            }
        }
    }
    Ok(outcome)
}

/// Exit code for a library error.
pub fn exit_code(e: &HazardError) -> i32 {
    match e {
        HazardError::Config(_) | HazardError::Validation(_) | HazardError::Io(_) => EXIT_USAGE,
        HazardError::Domain(_)
        | HazardError::Contract(_)
        | HazardError::Quadrature { .. }
        | HazardError::SingularKernel { .. } => EXIT_NUMERICAL,
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(HazardError::Config(format!("{THREADS_ENV} must be a positive integer, got {s:?}"))),
        },
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("hazardlab: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    let (Command::Simulate(a) | Command::Intensity(a) | Command::Verify(a)) = &cli.command;
    let cfg = RunConfig::load(&a.config)?;
    let opts = RunOptions {
        seed: a.seed,
        out: a.out.clone().or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(".")),
        format: match a.format {
            Some(FormatArg::Csv) => OutputFormat::Csv,
            Some(FormatArg::Json) => OutputFormat::Json,
            None => cfg.output.format,
        },
        threads: threads_from_env()?,
    };
    match &cli.command {
        Command::Simulate(_) => {
            let s = cmd_simulate(&cfg, &opts)?;
            println!(
                "simulated {} paths (seed {}): default fraction {} ± {}",
                s.n_paths, s.seed, s.default_fraction, s.se
            );
            Ok(EXIT_PASS)
        }
        Command::Intensity(_) => {
            let c = cmd_intensity(&cfg, &opts)?;
            println!("engine: {}", c.engine.label());
            println!("formula: {}", c.formula);
            if let Some(&(t, l)) = c.points.last() {
                println!("lambda({t}) = {l}");
            }
            Ok(EXIT_PASS)
        }
        Command::Verify(_) => {
            let o = cmd_verify(&cfg, &opts)?;
            for r in &o.residual.rows {
                println!(
                    "t={} mean={:.6} se={:.6} z={:.3} {}",
                    r.t,
                    r.mean,
                    r.se,
                    r.z,
                    if r.pass { "pass" } else { "FAIL" }
                );
            }
            if let Some(orth) = &o.orthogonality {
                let failed = orth.rows.iter().filter(|r| !r.pass).count();
                println!("orthogonality: {} buckets, {failed} failed", orth.rows.len());
                for n in &orth.notices {
                    println!("notice: {n}");
                }
            }
            println!("{}", if o.pass() { "PASS" } else { "FAIL" });
            Ok(if o.pass() { EXIT_PASS } else { EXIT_STAT_FAIL })
        }
    }
}
