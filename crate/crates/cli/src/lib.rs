//! `rydberg`: scenario configs in, CSV/JSON data and a manifest out.
//!
//! Subcommands:
//! - `evolve` time series of one scenario (optionally scanned over a parameter)
//! - `sweep` eigenvalues of a spectral family on a 1D or 2D grid
//! - `ep` exceptional point or PT-breaking threshold along one axis
//! - `fit` exponential-loss or cosine fit of a CSV track

pub mod commands;
pub mod config;
pub mod error;
pub mod evolve;
pub mod output;
pub mod scenario;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{EpReport, FitModel};
pub use config::ScenarioConfig;
pub use error::{CliError, CliResult};
pub use evolve::{evolve, simulate, EvolveOutput};

use output::{json_bytes, sha256_hex, OutputDir};

#[derive(Debug, Parser)]
#[command(name = "rydberg", version, about = "Dissipative Rydberg spin simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario config (TOML)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for sweeps, scans and trajectories
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Overrides the config seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write timeseries.csv
    Evolve(RunArgs),
    /// Eigenvalues over a parameter grid, written to sweep.csv
    Sweep(RunArgs),
    /// Locate an exceptional point or PT-breaking threshold, written to ep.json
    Ep(RunArgs),
    /// Fit a decay or oscillation to a CSV track, written to fit.json
    Fit {
        /// CSV whose first column is t_us
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        model: FitModel,
        /// Column to fit; defaults to the first after t_us
        #[arg(long)]
        track: Option<String>,
        /// Column of one-sigma errors
        #[arg(long)]
        sigma_track: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> CliResult<ScenarioConfig> {
    let (mut cfg, _) = ScenarioConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn config_json(cfg: &ScenarioConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn with_pool<T>(jobs: Option<usize>, f: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T>
where
    T: Send,
{
    match jobs {
        None => f(),
        Some(0) => Err(CliError::config("--jobs", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::config("--jobs", e.to_string()))?
            .install(f),
    }
}

pub fn run_evolve(cfg: &ScenarioConfig, out: &Path, jobs: Option<usize>) -> CliResult<EvolveOutput> {
    let result = with_pool(jobs, || evolve(cfg))?;
    let mut dir = OutputDir::create(out)?;
    result.write(&mut dir)?;
    dir.finish("evolve", config_json(cfg), Some(cfg.to_toml()), Some(cfg.seed), "ok")?;
    Ok(result)
}

pub fn run_sweep(cfg: &ScenarioConfig, out: &Path, jobs: Option<usize>) -> CliResult<()> {
    let (grid, dim) = with_pool(jobs, || commands::sweep(cfg))?;
    let mut dir = OutputDir::create(out)?;
    dir.write("sweep.csv", &commands::sweep_csv(&grid, dim)?)?;
    let failed = grid.failures();
    let status = if failed == 0 { "ok".to_string() } else { format!("{failed} points failed") };
    dir.finish("sweep", config_json(cfg), Some(cfg.to_toml()), None, &status)?;
    if failed > 0 {
        return Err(CliError::SweepFailures { failed, total: grid.points.len() });
    }
    Ok(())
}

pub fn run_ep(cfg: &ScenarioConfig, out: &Path, jobs: Option<usize>) -> CliResult<EpReport> {
    let report = with_pool(jobs, || commands::ep(cfg))?;
    let mut dir = OutputDir::create(out)?;
    dir.write("ep.json", &json_bytes(&report))?;
    dir.finish("ep", config_json(cfg), Some(cfg.to_toml()), None, "ok")?;
    Ok(report)
}

pub fn run_fit(
    input: &Path,
    model: FitModel,
    track: Option<&str>,
    sigma_track: Option<&str>,
    out: &Path,
) -> CliResult<commands::FitReport> {
    let table = commands::read_table(input)?;
    let (name, result) = commands::fit(&table, model, track, sigma_track)?;
    let report = commands::FitReport {
        input: input.display().to_string(),
        track: name,
        sigma_track: sigma_track.map(String::from),
        n_points: table.columns[0].len(),
        result,
    };
    let mut dir = OutputDir::create(out)?;
    dir.write("fit.json", &json_bytes(&report))?;
    let bytes = std::fs::read(input)?;
    let echo = serde_json::json!({
        "input": report.input,
        "input_sha256": sha256_hex(&bytes),
        "model": model,
        "track": report.track,
        "sigma_track": report.sigma_track,
    });
    let status = if report.result.converged { "ok" } else { "not converged" };
    dir.finish("fit", echo, None, None, status)?;
    if !report.result.converged {
        return Err(CliError::FitNotConverged { iterations: report.result.iterations });
    }
    Ok(report)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Evolve(a) => run_evolve(&load(&a)?, &a.out, a.jobs).map(|_| ()),
        Command::Sweep(a) => run_sweep(&load(&a)?, &a.out, a.jobs),
        Command::Ep(a) => run_ep(&load(&a)?, &a.out, a.jobs).map(|_| ()),
        Command::Fit { input, model, track, sigma_track, out } => {
            run_fit(&input, model, track.as_deref(), sigma_track.as_deref(), &out).map(|_| ())
        }
    }
}
