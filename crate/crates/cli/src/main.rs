//! `sfiegarch-cli`: simulate, fit, forecast and evaluate seasonal FIEGARCH models.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sfiegarch-cli", version, about = "Seasonal FIEGARCH modelling toolkit")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON file with defaults for any subcommand option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for grid evaluations; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path: sim.csv (t, x, sigma2, z) and, with a mean equation, returns.csv.
    Sim(SimArgs),
    /// Quasi-maximum-likelihood fit: fit.json, model.json, residuals.csv.
    Fit(FitArgs),
    /// h-step forecasts from a model and a return history: forecast.csv, forecast.json.
    Forecast(ForecastArgs),
    /// Theoretical autocovariances: acov.csv (lag, value), acov.json.
    Acov(AcovArgs),
    /// Spectral density on a frequency grid: spectrum.csv (freq, value).
    Spectrum(SpectrumArgs),
    /// Residual diagnostics: diag.json, diag_portmanteau.csv, periodogram.csv.
    Diag(DiagArgs),
    /// Forecast evaluation: evaluate.json and summary CSV tables.
    Evaluate(EvaluateArgs),
    /// Prices to scaled log-returns with optional aggregation: returns.csv, day_counts.csv, stats.json.
    Ingest(IngestArgs),
}

#[derive(Debug, Args)]
pub struct ModelArg {
    /// Model JSON file; defaults to the `model` entry of the config.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Number of lambda coefficients kept in the MA(infinity) sum.
    #[arg(long)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV of returns.
    #[arg(long)]
    pub input: PathBuf,
    /// Column name; defaults to the last column.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Hold d fixed (0 gives EGARCH).
    #[arg(long)]
    pub fixed_d: Option<f64>,
    /// GED shape recorded in the fitted model; also sets E|Z| in g.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Autoregressive lags of the mean equation, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ar_lags: Option<Vec<usize>>,
    /// Moving-average lags of the mean equation, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ma_lags: Option<Vec<usize>>,
    #[arg(long)]
    pub include_mean: Option<bool>,
    /// Backward elimination level for the mean equation; 0 disables it.
    #[arg(long)]
    pub elimination_level: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Sample,
    Analytic,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// CSV of returns up to the forecast origin.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum SeriesArg {
    LnX2,
    LnSigma2,
}

#[derive(Debug, Args)]
pub struct AcovArgs {
    #[command(flatten)]
    pub model: ModelArg,
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long, value_enum, default_value = "ln-x2")]
    pub series: SeriesArg,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArg,
    /// Grid size on [0, pi].
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum, default_value = "ln-x2")]
    pub series: SeriesArg,
}

#[derive(Debug, Args)]
pub struct DiagArgs {
    /// CSV holding the residual series.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub column: Option<String>,
    /// Column of fitted conditional variances; enables the density-transform tests.
    #[arg(long)]
    pub sigma2_column: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    #[arg(long)]
    pub fitted_params: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub nu_grid: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// CSV of realized values.
    #[arg(long)]
    pub actual: PathBuf,
    #[arg(long)]
    pub actual_column: Option<String>,
    /// CSV of forecasts aligned with `--actual`.
    #[arg(long)]
    pub forecast: PathBuf,
    #[arg(long)]
    pub forecast_column: Option<String>,
    /// Competing forecasts for the Diebold-Mariano test.
    #[arg(long)]
    pub benchmark: Option<PathBuf>,
    #[arg(long)]
    pub benchmark_column: Option<String>,
    /// CSV with `mu` and `sigma2` columns for density evaluation.
    #[arg(long)]
    pub density: Option<PathBuf>,
    /// GED shape of the density forecasts; omitted means Gaussian.
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub hac_lags: Option<usize>,
    /// Estimation sample size for the parameter-uncertainty correction.
    #[arg(long)]
    pub n_fit: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lags: Option<Vec<usize>>,
    #[arg(long)]
    pub fitted_params: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PartialArg {
    Drop,
    Keep,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// CSV with header `timestamp,price`.
    #[arg(long)]
    pub input: PathBuf,
    /// File of RFC 3339 trading-day start times, one per line.
    #[arg(long)]
    pub day_starts: Option<PathBuf>,
    /// Number of consecutive returns summed per output return.
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long, value_enum)]
    pub partial: Option<PartialArg>,
    /// Multiplier of the log-returns.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub frequency: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = Config::load(cli.config.as_deref())?;
    if let Some(t) = cli.threads.or(cfg.threads) {
        if t == 0 {
            return Err(CliError::Usage("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(1);
    let mut out = output::OutDir::create(&cli.out)?;
    match &cli.command {
        Command::Sim(a) => commands::sim(a, &cfg, seed, &mut out)?,
        Command::Fit(a) => commands::fit(a, &cfg, &mut out)?,
        Command::Forecast(a) => commands::forecast(a, &cfg, &mut out)?,
        Command::Acov(a) => commands::acov(a, &cfg, &mut out)?,
        Command::Spectrum(a) => commands::spectrum(a, &cfg, &mut out)?,
        Command::Diag(a) => commands::diag(a, &cfg, &mut out)?,
        Command::Evaluate(a) => commands::evaluate(a, &cfg, &mut out)?,
        Command::Ingest(a) => commands::ingest(a, &cfg, &mut out)?,
    }
    for p in out.written() {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
