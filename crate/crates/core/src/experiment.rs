//! Seeded Monte Carlo sweeps over SNR grids and their CSV/JSON output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::alternating::{solve, AlternatingSettings};
use crate::baselines::{
    misome_capacity, precode_gsvd, precode_isotropic, precode_slnr, precode_water_filling,
    precode_zero_forcing, random_search_oracle, PrecoderKind,
};
use crate::error::{Error, Result};
use crate::model::{derive_seed, sample_channel, secrecy_rate, ChannelPair, Dims};

/// Realizations used when full-scale averaging is requested.
pub const FULL_SCALE_REALIZATIONS: usize = 500;

pub const CSV_HEADER: [&str; 6] = ["snr_db", "method", "mean_rate", "stderr", "units", "realizations"];

const SOLVER_STREAM: u64 = 0x736f_6c76;
const ORACLE_STREAM: u64 = 0x6f72_636c;

/// A quantity evaluated per channel draw: a precoder's achieved rate, or the
/// closed-form capacity when the legitimate receiver has one antenna.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Potdc,
    Gsvd,
    ZeroForcing,
    Slnr,
    WaterFilling,
    Isotropic,
    RandomSearchOracle,
    #[serde(alias = "misome-capacity")]
    MisomeCapacity,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::MisomeCapacity => "misome_capacity",
            other => other.precoder().expect("precoder method").name(),
        }
    }

    pub fn precoder(self) -> Option<PrecoderKind> {
        Some(match self {
            Method::Potdc => PrecoderKind::Potdc,
            Method::Gsvd => PrecoderKind::Gsvd,
            Method::ZeroForcing => PrecoderKind::ZeroForcing,
            Method::Slnr => PrecoderKind::Slnr,
            Method::WaterFilling => PrecoderKind::WaterFilling,
            Method::Isotropic => PrecoderKind::Isotropic,
            Method::RandomSearchOracle => PrecoderKind::RandomSearchOracle,
            Method::MisomeCapacity => return None,
        })
    }
}

impl From<PrecoderKind> for Method {
    fn from(kind: PrecoderKind) -> Self {
        match kind {
            PrecoderKind::Potdc => Method::Potdc,
            PrecoderKind::Gsvd => Method::Gsvd,
            PrecoderKind::ZeroForcing => Method::ZeroForcing,
            PrecoderKind::Slnr => Method::Slnr,
            PrecoderKind::WaterFilling => Method::WaterFilling,
            PrecoderKind::Isotropic => Method::Isotropic,
            PrecoderKind::RandomSearchOracle => Method::RandomSearchOracle,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateUnits {
    #[default]
    Nats,
    Bits,
}

impl RateUnits {
    /// Factor converting nats into these units.
    pub fn scale(self) -> f64 {
        match self {
            RateUnits::Nats => 1.0,
            RateUnits::Bits => std::f64::consts::LOG2_E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateUnits::Nats => "nats",
            RateUnits::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n_main: usize,
    pub n_eave: usize,
    pub snr_db_grid: Vec<f64>,
    pub realizations: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    pub rate_units: RateUnits,
    pub solver: AlternatingSettings,
    /// Samples per channel draw for the random-search oracle.
    pub oracle_samples: usize,
    /// Keep every per-realization rate in the result.
    pub dump_realizations: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            m: 2,
            n_main: 1,
            n_eave: 2,
            snr_db_grid: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            realizations: 100,
            methods: vec![Method::Potdc, Method::Gsvd, Method::MisomeCapacity],
            master_seed: 0,
            rate_units: RateUnits::Nats,
            solver: AlternatingSettings::default(),
            oracle_samples: 10_000,
            dump_realizations: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.m, self.n_main, self.n_eave)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n_main == 0 || self.n_eave == 0 {
            return Err(Error::InvalidConfig("antenna counts must be positive".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("realizations must be at least 1".into()));
        }
        if self.snr_db_grid.is_empty() {
            return Err(Error::InvalidConfig("snr_db_grid must not be empty".into()));
        }
        if self.snr_db_grid.iter().any(|s| s.is_nan() || *s == f64::INFINITY) {
            return Err(Error::InvalidConfig("SNR grid entries must be finite dB values".into()));
        }
        if self.methods.contains(&Method::MisomeCapacity) && self.n_main != 1 {
            return Err(Error::InvalidConfig(format!(
                "misome_capacity needs n_main = 1, got {}",
                self.n_main
            )));
        }
        if self.methods.contains(&Method::RandomSearchOracle) && self.oracle_samples == 0 {
            return Err(Error::InvalidConfig("oracle_samples must be at least 1".into()));
        }
        if let Some(p) = &self.solver.init_covariance {
            if p.dim() != self.m {
                return Err(Error::InvalidConfig("solver init_covariance does not match m".into()));
            }
        }
        self.solver.validate()
    }
}

/// Linear SNR for a value in dB.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Seed of the channel drawn for `realization` at grid index `snr_index`.
pub fn point_seed(master_seed: u64, realization: usize, snr_index: usize) -> u64 {
    derive_seed(derive_seed(master_seed, realization as u64), snr_index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub snr_db: f64,
    pub method: Method,
    pub mean_rate: f64,
    pub stderr: f64,
    pub units: RateUnits,
    pub realizations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_realization: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetadata {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_time_secs: f64,
    pub channel_draws: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// Ordered by SNR grid position, then by the configured method order.
    pub points: Vec<SeriesPoint>,
    pub metadata: ExperimentMetadata,
}

impl ExperimentResult {
    pub fn point(&self, snr_db: f64, method: Method) -> Option<&SeriesPoint> {
        self.points.iter().find(|p| p.snr_db == snr_db && p.method == method)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for p in &self.points {
            w.write_record([
                p.snr_db.to_string(),
                p.method.name().to_string(),
                p.mean_rate.to_string(),
                p.stderr.to_string(),
                p.units.name().to_string(),
                p.realizations.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// Clamped rate, in nats, of one method on one channel draw.
pub fn evaluate_method(
    ch: &ChannelPair,
    method: Method,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<f64> {
    let rate = match method {
        Method::Potdc => {
            let settings = AlternatingSettings {
                seed: derive_seed(seed, SOLVER_STREAM),
                ..config.solver.clone()
            };
            solve(ch, &settings)?.secrecy_rate
        }
        Method::Gsvd => secrecy_rate(ch, &precode_gsvd(ch)?)?,
        Method::ZeroForcing => secrecy_rate(ch, &precode_zero_forcing(ch)?)?,
        Method::Slnr => secrecy_rate(ch, &precode_slnr(ch)?)?,
        Method::WaterFilling => secrecy_rate(ch, &precode_water_filling(ch)?)?,
        Method::Isotropic => secrecy_rate(ch, &precode_isotropic(ch))?,
        Method::RandomSearchOracle => {
            random_search_oracle(ch, config.oracle_samples, derive_seed(seed, ORACLE_STREAM))?.rate
        }
        Method::MisomeCapacity => misome_capacity(ch)?,
    };
    Ok(rate.max(0.0))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every configured method on the same channel draws.
///
/// A fresh channel is drawn for each (realization, SNR) pair with
/// `ρ_m = ρ_e = 10^{dB/10}`; all methods at that pair share it.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let started = Instant::now();
    let scale = config.rate_units.scale();
    let mut points = Vec::with_capacity(config.snr_db_grid.len() * config.methods.len());

    for (k, &snr_db) in config.snr_db_grid.iter().enumerate() {
        let rho = db_to_linear(snr_db);
        let mut rates = vec![Vec::with_capacity(config.realizations); config.methods.len()];
        for r in 0..config.realizations {
            let seed = point_seed(config.master_seed, r, k);
            let ch = sample_channel(config.dims(), rho, rho, seed)?;
            for (slot, &method) in rates.iter_mut().zip(&config.methods) {
                slot.push(evaluate_method(&ch, method, config, seed)? * scale);
            }
        }
        for (values, &method) in rates.into_iter().zip(&config.methods) {
            let (mean_rate, stderr) = mean_and_stderr(&values);
            points.push(SeriesPoint {
                snr_db,
                method,
                mean_rate,
                stderr,
                units: config.rate_units,
                realizations: config.realizations,
                per_realization: config.dump_realizations.then_some(values),
            });
        }
    }

    Ok(ExperimentResult {
        points,
        metadata: ExperimentMetadata {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: started.elapsed().as_secs_f64(),
            channel_draws: "redrawn for every (realization, snr) pair".to_string(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Renders `result` in `format`.
pub fn render_results(result: &ExperimentResult, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => result.to_csv(),
        OutputFormat::Json => result.to_json(),
    }
}

/// Writes `result` to `path` in `format`.
pub fn emit_results(result: &ExperimentResult, format: OutputFormat, path: &Path) -> Result<()> {
    let text = render_results(result, format)?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}
