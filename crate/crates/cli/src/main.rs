use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use wiretap_core::alternating::{solve, AlternatingSettings};
use wiretap_core::baselines::random_search_oracle;
use wiretap_core::experiment::{
    db_to_linear, render_results, run_experiment, ExperimentConfig, OutputFormat, RateUnits,
    FULL_SCALE_REALIZATIONS,
};
use wiretap_core::model::{sample_channel, ChannelPair, Dims};

#[derive(Parser)]
#[command(name = "wiretap", version, about = "Secrecy-rate precoder design for MIMO wire-tap channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Units {
    Nats,
    Bits,
}

impl From<Units> for RateUnits {
    fn from(u: Units) -> Self {
        match u {
            Units::Nats => RateUnits::Nats,
            Units::Bits => RateUnits::Bits,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Design the transmit covariance for one channel (JSON file) and print the solver report.
    Solve {
        /// Channel JSON as written by `wiretap sample`.
        channel: PathBuf,
        /// Seed for the random starting points.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of independent starts.
        #[arg(long)]
        starts: Option<usize>,
        /// Solver settings JSON (fields of the alternating solver; unset fields use defaults).
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo sweep from a config JSON file.
    Experiment {
        config: PathBuf,
        /// Overrides the config's master_seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's rate_units.
        #[arg(long, value_enum)]
        units: Option<Units>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Average over 500 realizations.
        #[arg(long)]
        paper_scale: bool,
    },
    /// Best secrecy rate found by random search over feasible covariances.
    Oracle {
        channel: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "nats")]
        units: Units,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a Rayleigh channel pair and write it as JSON.
    Sample {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n_main: usize,
        #[arg(long)]
        n_eave: usize,
        /// SNR in dB, used for both links.
        #[arg(long, default_value_t = 10.0)]
        snr_db: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_channel(path: &Path) -> Result<ChannelPair> {
    ChannelPair::from_json(&read(path)?).with_context(|| format!("parsing channel {}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve { channel, seed, starts, settings, out } => {
            let ch = load_channel(&channel)?;
            let mut s: AlternatingSettings = match settings {
                Some(path) => serde_json::from_str(&read(&path)?)
                    .with_context(|| format!("parsing settings {}", path.display()))?,
                None => AlternatingSettings::default(),
            };
            s.seed = seed;
            if let Some(n) = starts {
                s.starts = n;
            }
            let report = solve(&ch, &s)?;
            write_output(out.as_deref(), &pretty(&report)?)
        }
        Command::Experiment { config, seed, units, format, out, paper_scale } => {
            let mut cfg: ExperimentConfig = serde_json::from_str(&read(&config)?)
                .with_context(|| format!("parsing config {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if let Some(units) = units {
                cfg.rate_units = units.into();
            }
            if paper_scale {
                cfg.realizations = FULL_SCALE_REALIZATIONS;
            }
            let result = run_experiment(&cfg)?;
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            write_output(out.as_deref(), &render_results(&result, format)?)
        }
        Command::Oracle { channel, samples, seed, units, out } => {
            let ch = load_channel(&channel)?;
            let res = random_search_oracle(&ch, samples, seed)?;
            let units = RateUnits::from(units);
            let doc = json!({
                "rate": res.rate.max(0.0) * units.scale(),
                "units": units,
                "samples": samples,
                "seed": seed,
                "p": res.p,
            });
            write_output(out.as_deref(), &pretty(&doc)?)
        }
        Command::Sample { m, n_main, n_eave, snr_db, seed, out } => {
            if !snr_db.is_finite() {
                bail!("snr_db must be finite");
            }
            let rho = db_to_linear(snr_db);
            let ch = sample_channel(Dims::new(m, n_main, n_eave), rho, rho, seed)?;
            let mut text = ch.to_json()?;
            text.push('\n');
            write_output(out.as_deref(), &text)
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
