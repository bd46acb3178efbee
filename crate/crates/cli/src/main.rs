//! `heliocast`: hourly global solar radiation forecasting pipeline.

mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "heliocast",
    version,
    about = "Hourly global solar radiation forecasting: synthesize data, fit ARMA/MLP/hybrid models, forecast, evaluate, rank and sweep"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic station dataset from a scenario file.
    Synth {
        /// Scenario TOML.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (hours.csv, station.toml, truth.json).
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit Solis, ARMA, MLP and hybrid models on the training block.
    Fit {
        /// Pipeline TOML.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for model artifacts.
        #[arg(long)]
        out: PathBuf,
        /// Override the training seeds (comma separated).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Warn when the repaired fraction exceeds this ceiling.
        #[arg(long)]
        max_missing_frac: Option<f64>,
    },
    /// One-step forecasts over the test block for every fitted model.
    Forecast {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding the fit artifacts.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Warn when the repaired fraction exceeds this ceiling.
        #[arg(long)]
        max_missing_frac: Option<f64>,
    },
    /// Score forecast files: annual and seasonal nRMSE, reliability.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Directory holding forecast_*.csv files.
        #[arg(long)]
        forecasts: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seasonal point ranking over a multi-station nRMSE table.
    Rank {
        /// CSV with columns model,station,winter,spring,summer,autumn.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hidden-neuron sweep: mean validation nRMSE and CI95 across seeds.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the sweep seeds (comma separated).
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { config, out, seed } => pipeline::run_synth(&config, &out, seed),
        Command::Fit { config, out, seeds } => pipeline::run_fit(&config, &out, seeds),
        Command::Forecast { config, models, out } => pipeline::run_forecast(&config, &models, &out),
        Command::Evaluate { config, forecasts, out } => {
            pipeline::run_evaluate(&config, &forecasts, &out)
        }
        Command::Rank { input, out } => pipeline::run_rank(&input, &out),
        Command::Sweep { config, out, seeds } => pipeline::run_sweep(&config, &out, seeds),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Single-line, machine-parseable failure reason.
            let reason: String = format!("{e:#}").replace('\n', "; ");
            eprintln!("error: {reason}");
            ExitCode::FAILURE
        }
    }
}
