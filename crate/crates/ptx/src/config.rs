//! TOML run configuration shared by `simulate` and `sweep`.
//!
//! ```toml
//! [data]
//! prices = "prices.csv"
//! intensity = "intensity.csv"      # pre-traced intensity for one area, or:
//! # generation = "generation.csv"  # ...the raw grid tables to trace
//! # flows = "flows.csv"
//! # consumption = "consumption.csv"
//! # emission_factors = "factors.toml"
//! # area = "DK1"                   # area whose traced intensity drives bidding
//!
//! [plant]
//! technology = "electrolyzer"
//! [plant.overrides]
//! "electrolyzer.ramp_up" = 0.3
//!
//! [simulation]
//! start = "2019-01-06"             # first delivery day
//! days = 365
//! forecast = "model"               # or "ideal"
//! alpha = 0.5                      # simulate only
//! horizon = "yearly"               # simulate only
//! flh = 6000.0                     # simulate only, per active horizon
//!
//! [sweep]
//! alphas = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
//! horizons = ["daily", "monthly", "yearly"]
//! parallelism = 4
//! [sweep.flh]
//! daily = 16.43
//! monthly = 500.0
//! yearly = 6000.0
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::carbon::intensity_series;
use crate::controller::{Horizon, MarketBundle};
use crate::market::{
    load_emission_factors, parse_consumption_csv, parse_flow_csv, parse_generation_csv,
    parse_intensity_csv, parse_price_csv, GridSnapshot,
};
use crate::tech::{build_technology, TechnologyKind, TechnologyNetwork};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config {path}: {source}")]
    Parse { path: String, source: toml::de::Error },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub prices: Option<PathBuf>,
    pub intensity: Option<PathBuf>,
    pub generation: Option<PathBuf>,
    pub flows: Option<PathBuf>,
    pub consumption: Option<PathBuf>,
    pub emission_factors: Option<PathBuf>,
    pub area: Option<String>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub technology: Option<String>,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    /// First delivery day, `YYYY-MM-DD` (TOML date or quoted string).
    pub start: Option<toml::value::Datetime>,
    pub days: Option<usize>,
    pub forecast: Option<String>,
    pub alpha: Option<f64>,
    pub horizon: Option<String>,
    pub flh: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alphas: Option<Vec<f64>>,
    pub horizons: Option<Vec<String>>,
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub flh: BTreeMap<String, f64>,
}

impl SimulationSection {
    pub fn start_date(&self) -> Result<Option<NaiveDate>, ConfigError> {
        match &self.start {
            None => Ok(None),
            Some(dt) => {
                let date = dt
                    .date
                    .ok_or_else(|| ConfigError::Invalid(format!("[simulation].start {dt} has no date part")))?;
                NaiveDate::from_ymd_opt(date.year as i32, date.month as u32, date.day as u32)
                    .map(Some)
                    .ok_or_else(|| ConfigError::Invalid(format!("bad [simulation].start {dt}")))
            }
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|source| ConfigError::Parse { path: path.display().to_string(), source })?;
        // paths are relative to the config file
        if let Some(dir) = path.parent() {
            for p in [
                &mut cfg.data.prices,
                &mut cfg.data.intensity,
                &mut cfg.data.generation,
                &mut cfg.data.flows,
                &mut cfg.data.consumption,
                &mut cfg.data.emission_factors,
            ]
            .into_iter()
            .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn technology(&self) -> Result<TechnologyNetwork, ConfigError> {
        let kind = match &self.plant.technology {
            Some(t) => TechnologyKind::parse(t)
                .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            None => TechnologyKind::Electrolyzer,
        };
        build_technology(kind, &self.plant.overrides)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn forecast_mode(&self) -> Result<ForecastMode, ConfigError> {
        match self.simulation.forecast.as_deref() {
            None | Some("model") => Ok(ForecastMode::Model),
            Some("ideal") => Ok(ForecastMode::Ideal),
            Some(other) => Err(ConfigError::Invalid(format!(
                "forecast mode {other:?} (expected \"model\" or \"ideal\")"
            ))),
        }
    }

    pub fn horizons_with_targets(&self) -> Result<Vec<(Horizon, f64)>, ConfigError> {
        let names = self
            .sweep
            .horizons
            .clone()
            .unwrap_or_else(|| vec!["daily".into(), "monthly".into(), "yearly".into()]);
        let mut out = Vec::new();
        for name in names {
            let horizon = Horizon::parse(&name)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown horizon {name:?}")))?;
            let flh = self.sweep.flh.get(&name).copied().ok_or_else(|| {
                ConfigError::Invalid(format!("no [sweep.flh] entry for horizon {name:?}"))
            })?;
            out.push((horizon, flh));
        }
        Ok(out)
    }

    pub fn alphas(&self) -> Result<Vec<f64>, ConfigError> {
        let alphas = self
            .sweep
            .alphas
            .clone()
            .unwrap_or_else(|| (0..=10).map(|i| i as f64 / 10.0).collect());
        for &a in &alphas {
            if !(0.0..=1.0).contains(&a) {
                return Err(ConfigError::Invalid(format!("alpha {a} outside [0, 1]")));
            }
        }
        Ok(alphas)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastMode {
    Model,
    Ideal,
}

#[derive(Debug, Error)]
pub enum DataLoadError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Market(#[from] crate::market::MarketError),
    #[error(transparent)]
    Trace(#[from] crate::carbon::TraceError),
}

/// Load the price/intensity bundle named by the config: either a pre-traced
/// intensity file or the raw grid tables run through the flow tracer.
pub fn load_bundle(cfg: &RunConfig) -> Result<MarketBundle, DataLoadError> {
    let prices_path = cfg
        .data
        .prices
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("[data].prices is required".into()))?;
    let price = parse_price_csv(prices_path)?;

    let intensity = match (&cfg.data.intensity, &cfg.data.generation) {
        (Some(path), _) => parse_intensity_csv(path)?,
        (None, Some(gen_path)) => {
            let (flows_path, cons_path, factors_path) = match (
                &cfg.data.flows,
                &cfg.data.consumption,
                &cfg.data.emission_factors,
            ) {
                (Some(f), Some(c), Some(e)) => (f, c, e),
                _ => {
                    return Err(ConfigError::Invalid(
                        "tracing needs [data].generation, flows, consumption and emission_factors"
                            .into(),
                    )
                    .into())
                }
            };
            let generation = parse_generation_csv(gen_path)?;
            let flows = parse_flow_csv(flows_path)?;
            let consumption = parse_consumption_csv(cons_path)?;
            let snapshot = GridSnapshot::assemble(&generation, &flows, &consumption)?;
            let factors = load_emission_factors(factors_path)?;
            let area = cfg.data.area.clone().or_else(|| {
                (snapshot.areas().len() == 1).then(|| snapshot.areas()[0].clone())
            });
            let area = area.ok_or_else(|| {
                ConfigError::Invalid("[data].area is required with multi-area grid data".into())
            })?;
            intensity_series(&snapshot, &factors, &area)?
        }
        (None, None) => {
            return Err(ConfigError::Invalid(
                "[data] needs either intensity or the grid tables for tracing".into(),
            )
            .into())
        }
    };
    Ok(MarketBundle { price, intensity })
}
