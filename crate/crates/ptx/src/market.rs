//! Market data ingestion: hourly CSV files and plant/emission configuration.
//!
//! All ingestion is file based. Timestamps must be ISO-8601 UTC
//! (`YYYY-MM-DDTHH:00Z`); rows must be sorted, duplicate-free and gap-free.
//! Schemas (comma separated, header required):
//!
//! | kind        | header                                    |
//! |-------------|-------------------------------------------|
//! | prices      | `timestamp_utc,price_eur_mwh`             |
//! | generation  | `timestamp_utc,area,technology,generation_mwh` |
//! | flows       | `timestamp_utc,from_area,to_area,flow_mwh`|
//! | consumption | `timestamp_utc,area,consumption_mwh`      |

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::series::{
    format_epoch_hour, parse_timestamp_utc, HourlySeries, SeriesError, Unit,
};

/// Relative tolerance for the per-area energy balance check.
pub const BALANCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow { path: String, line: u64, reason: String },
    #[error("{path}: missing hour {hour} ({timestamp})", timestamp = format_epoch_hour(*.hour))]
    GapDetected { path: String, hour: i64 },
    #[error("{path}:{line}: duplicate timestamp {timestamp}")]
    DuplicateTimestamp { path: String, line: u64, timestamp: String },
    #[error("{path}: file contains no data rows")]
    EmptyFile { path: String },
    #[error("{path}: header mismatch: expected {expected:?}, found {found:?}")]
    HeaderMismatch { path: String, expected: Vec<String>, found: Vec<String> },
    #[error("unit mismatch: {0}")]
    UnitMismatch(SeriesError),
    #[error("negative energy {value} for {what} at {timestamp}")]
    NegativeEnergy { what: String, timestamp: String, value: f64 },
    #[error("self-flow {area}->{area} at {timestamp} must be zero")]
    SelfFlow { area: String, timestamp: String },
    #[error("energy balance violated in area {area} at {timestamp}: generation {generation} + imports {imports} - exports {exports} = {lhs}, consumption {consumption} (relative error {rel:.3e})")]
    Unbalanced {
        area: String,
        timestamp: String,
        generation: f64,
        imports: f64,
        exports: f64,
        lhs: f64,
        consumption: f64,
        rel: f64,
    },
    #[error("tables cover different hour ranges: {0}")]
    Misaligned(String),
    #[error("emission factor for technology {tech:?} is negative: {value}")]
    NegativeFactor { tech: String, value: f64 },
    #[error("no emission factor for technology {tech:?} (appears in area {area})")]
    MissingFactor { tech: String, area: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Which CSV schema a file follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvKind {
    Price,
    Generation,
    Flow,
    Consumption,
}

/// Parsed content of one market CSV file.
#[derive(Debug, Clone)]
pub enum MarketTable {
    Price(HourlySeries),
    Generation(GenerationTable),
    Flow(FlowTable),
    Consumption(ConsumptionTable),
}

/// Per (hour, area, technology) generation, MWh.
#[derive(Debug, Clone, Default)]
pub struct GenerationTable {
    pub rows: Vec<(i64, String, String, f64)>,
}

/// Per (hour, from, to) flows, MWh.
#[derive(Debug, Clone, Default)]
pub struct FlowTable {
    pub rows: Vec<(i64, String, String, f64)>,
}

/// Per (hour, area) consumption, MWh.
#[derive(Debug, Clone, Default)]
pub struct ConsumptionTable {
    pub rows: Vec<(i64, String, f64)>,
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, MarketError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => MarketError::Io { path: path.display().to_string(), source },
            other => MarketError::MalformedRow {
                path: path.display().to_string(),
                line: 0,
                reason: format!("{other:?}"),
            },
        })
}

fn check_header(path: &Path, rdr: &mut csv::Reader<std::fs::File>, expected: &[&str]) -> Result<(), MarketError> {
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| MarketError::MalformedRow {
            path: path.display().to_string(),
            line: 1,
            reason: e.to_string(),
        })?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if found != expected {
        return Err(MarketError::HeaderMismatch {
            path: path.display().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        });
    }
    Ok(())
}

fn row_err(path: &Path, line: u64, reason: impl ToString) -> MarketError {
    MarketError::MalformedRow {
        path: path.display().to_string(),
        line,
        reason: reason.to_string(),
    }
}

/// Parse one market CSV file according to `kind`.
pub fn parse_market_csv(path: impl AsRef<Path>, kind: CsvKind) -> Result<MarketTable, MarketError> {
    let path = path.as_ref();
    match kind {
        CsvKind::Price => parse_price_csv(path).map(MarketTable::Price),
        CsvKind::Generation => parse_generation_csv(path).map(MarketTable::Generation),
        CsvKind::Flow => parse_flow_csv(path).map(MarketTable::Flow),
        CsvKind::Consumption => parse_consumption_csv(path).map(MarketTable::Consumption),
    }
}

/// Parse a price file into a gap-free series (€/MWh). Prices may be negative.
pub fn parse_price_csv(path: impl AsRef<Path>) -> Result<HourlySeries, MarketError> {
    parse_value_csv(path.as_ref(), &["timestamp_utc", "price_eur_mwh"], Unit::EurPerMwh, true)
}

/// Parse an intensity file (`timestamp_utc,intensity_gco2_kwh`), e.g. one
/// produced by the `trace` command for a single area.
pub fn parse_intensity_csv(path: impl AsRef<Path>) -> Result<HourlySeries, MarketError> {
    parse_value_csv(
        path.as_ref(),
        &["timestamp_utc", "intensity_gco2_kwh"],
        Unit::GramsPerKwh,
        false,
    )
}

fn parse_value_csv(
    path: &Path,
    header: &[&str],
    unit: Unit,
    allow_negative: bool,
) -> Result<HourlySeries, MarketError> {
    let mut rdr = open_reader(path)?;
    check_header(path, &mut rdr, header)?;
    let mut series: Option<HourlySeries> = None;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| row_err(path, line, e))?;
        if record.len() != 2 {
            return Err(row_err(path, line, format!("expected 2 fields, found {}", record.len())));
        }
        let hour = parse_timestamp_utc(&record[0]).map_err(|e| row_err(path, line, e))?;
        let value: f64 = record[1].parse().map_err(|e| row_err(path, line, format!("bad value: {e}")))?;
        if !value.is_finite() {
            return Err(row_err(path, line, "value is not finite"));
        }
        if !allow_negative && value < 0.0 {
            return Err(row_err(path, line, format!("negative value {value} not allowed here")));
        }
        match series.as_mut() {
            None => series = Some(HourlySeries::new(hour, vec![value], unit)?),
            Some(s) => {
                let expected = s.end_epoch_hour();
                if hour == expected {
                    s.push(value);
                } else if hour < expected {
                    return Err(MarketError::DuplicateTimestamp {
                        path: path.display().to_string(),
                        line,
                        timestamp: record[0].to_string(),
                    });
                } else {
                    return Err(MarketError::GapDetected {
                        path: path.display().to_string(),
                        hour: expected,
                    });
                }
            }
        }
    }
    series.ok_or_else(|| MarketError::EmptyFile { path: path.display().to_string() })
}

macro_rules! sorted_insert_check {
    ($path:expr, $line:expr, $record:expr, $last:expr, $key:expr) => {
        match $last.as_ref() {
            Some(prev) if *prev == $key => {
                return Err(MarketError::DuplicateTimestamp {
                    path: $path.display().to_string(),
                    line: $line,
                    timestamp: $record[0].to_string(),
                })
            }
            Some(prev) if *prev > $key => {
                return Err(row_err($path, $line, "rows are not sorted by timestamp"))
            }
            _ => $last = Some($key),
        }
    };
}

pub fn parse_generation_csv(path: &Path) -> Result<GenerationTable, MarketError> {
    let mut rdr = open_reader(path)?;
    check_header(path, &mut rdr, &["timestamp_utc", "area", "technology", "generation_mwh"])?;
    let mut table = GenerationTable::default();
    let mut last: Option<(i64, String, String)> = None;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| row_err(path, line, e))?;
        if record.len() != 4 {
            return Err(row_err(path, line, format!("expected 4 fields, found {}", record.len())));
        }
        let hour = parse_timestamp_utc(&record[0]).map_err(|e| row_err(path, line, e))?;
        let area = record[1].to_string();
        let tech = record[2].to_string();
        let mwh: f64 = record[3].parse().map_err(|e| row_err(path, line, format!("bad value: {e}")))?;
        if !mwh.is_finite() || mwh < 0.0 {
            return Err(MarketError::NegativeEnergy {
                what: format!("generation {area}/{tech}"),
                timestamp: record[0].to_string(),
                value: mwh,
            });
        }
        sorted_insert_check!(path, line, record, last, (hour, area.clone(), tech.clone()));
        table.rows.push((hour, area, tech, mwh));
    }
    if table.rows.is_empty() {
        return Err(MarketError::EmptyFile { path: path.display().to_string() });
    }
    Ok(table)
}

pub fn parse_flow_csv(path: &Path) -> Result<FlowTable, MarketError> {
    let mut rdr = open_reader(path)?;
    check_header(path, &mut rdr, &["timestamp_utc", "from_area", "to_area", "flow_mwh"])?;
    let mut table = FlowTable::default();
    let mut last: Option<(i64, String, String)> = None;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| row_err(path, line, e))?;
        if record.len() != 4 {
            return Err(row_err(path, line, format!("expected 4 fields, found {}", record.len())));
        }
        let hour = parse_timestamp_utc(&record[0]).map_err(|e| row_err(path, line, e))?;
        let from = record[1].to_string();
        let to = record[2].to_string();
        let mwh: f64 = record[3].parse().map_err(|e| row_err(path, line, format!("bad value: {e}")))?;
        if !mwh.is_finite() || mwh < 0.0 {
            return Err(MarketError::NegativeEnergy {
                what: format!("flow {from}->{to}"),
                timestamp: record[0].to_string(),
                value: mwh,
            });
        }
        if from == to && mwh != 0.0 {
            return Err(MarketError::SelfFlow { area: from, timestamp: record[0].to_string() });
        }
        sorted_insert_check!(path, line, record, last, (hour, from.clone(), to.clone()));
        table.rows.push((hour, from, to, mwh));
    }
    if table.rows.is_empty() {
        return Err(MarketError::EmptyFile { path: path.display().to_string() });
    }
    Ok(table)
}

pub fn parse_consumption_csv(path: &Path) -> Result<ConsumptionTable, MarketError> {
    let mut rdr = open_reader(path)?;
    check_header(path, &mut rdr, &["timestamp_utc", "area", "consumption_mwh"])?;
    let mut table = ConsumptionTable::default();
    let mut last: Option<(i64, String)> = None;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx as u64 + 2;
        let record = record.map_err(|e| row_err(path, line, e))?;
        if record.len() != 3 {
            return Err(row_err(path, line, format!("expected 3 fields, found {}", record.len())));
        }
        let hour = parse_timestamp_utc(&record[0]).map_err(|e| row_err(path, line, e))?;
        let area = record[1].to_string();
        let mwh: f64 = record[2].parse().map_err(|e| row_err(path, line, format!("bad value: {e}")))?;
        if !mwh.is_finite() || mwh < 0.0 {
            return Err(MarketError::NegativeEnergy {
                what: format!("consumption {area}"),
                timestamp: record[0].to_string(),
                value: mwh,
            });
        }
        sorted_insert_check!(path, line, record, last, (hour, area.clone()));
        table.rows.push((hour, area, mwh));
    }
    if table.rows.is_empty() {
        return Err(MarketError::EmptyFile { path: path.display().to_string() });
    }
    Ok(table)
}

/// Per-area, per-hour generation mix and inter-area flows over a contiguous
/// hour range. Read-only after construction.
#[derive(Debug, Clone)]
pub struct GridSnapshot {
    start_epoch_hour: i64,
    hours: usize,
    areas: Vec<String>,
    technologies: Vec<String>,
    /// `[hour][area][tech]`, MWh
    generation: Vec<f64>,
    /// `[hour][from][to]`, MWh
    flows: Vec<f64>,
    /// `[hour][area]`, MWh
    consumption: Vec<f64>,
}

/// One violated per-(area, hour) energy balance.
#[derive(Debug, Clone)]
pub struct BalanceViolation {
    pub area: String,
    pub hour: i64,
    pub lhs: f64,
    pub consumption: f64,
    pub rel: f64,
}

impl GridSnapshot {
    /// Assemble a snapshot from the three ingested tables, enforcing the
    /// per-area energy balance `generation + imports - exports = consumption`
    /// at [`BALANCE_TOLERANCE`].
    pub fn assemble(
        generation: &GenerationTable,
        flows: &FlowTable,
        consumption: &ConsumptionTable,
    ) -> Result<Self, MarketError> {
        let snap = Self::assemble_unchecked(generation, flows, consumption)?;
        if let Some(v) = snap.balance_violations(BALANCE_TOLERANCE).into_iter().next() {
            let (gen, imports, exports) = snap.area_flows(
                snap.hour_index(v.hour).unwrap(),
                snap.area_index(&v.area).unwrap(),
            );
            return Err(MarketError::Unbalanced {
                area: v.area,
                timestamp: format_epoch_hour(v.hour),
                generation: gen,
                imports,
                exports,
                lhs: v.lhs,
                consumption: v.consumption,
                rel: v.rel,
            });
        }
        Ok(snap)
    }

    /// Assemble without the balance check; use [`Self::balance_violations`]
    /// to flag instead of reject.
    pub fn assemble_unchecked(
        generation: &GenerationTable,
        flows: &FlowTable,
        consumption: &ConsumptionTable,
    ) -> Result<Self, MarketError> {
        let mut areas: Vec<String> = consumption.rows.iter().map(|r| r.1.clone()).collect();
        areas.extend(generation.rows.iter().map(|r| r.1.clone()));
        areas.extend(flows.rows.iter().flat_map(|r| [r.1.clone(), r.2.clone()]));
        areas.sort();
        areas.dedup();
        let mut technologies: Vec<String> = generation.rows.iter().map(|r| r.2.clone()).collect();
        technologies.sort();
        technologies.dedup();

        let hour_range = |hours: &mut Vec<i64>, h: i64| hours.push(h);
        let mut hours_seen = Vec::new();
        for r in &consumption.rows {
            hour_range(&mut hours_seen, r.0);
        }
        for r in &generation.rows {
            hour_range(&mut hours_seen, r.0);
        }
        for r in &flows.rows {
            hour_range(&mut hours_seen, r.0);
        }
        let start = *hours_seen.iter().min().expect("tables are non-empty");
        let end = *hours_seen.iter().max().unwrap() + 1;
        let hours = (end - start) as usize;

        // Every area must report consumption for every hour; that is the
        // signal that the hour is actually covered rather than missing.
        for h in start..end {
            for area in &areas {
                if !consumption.rows.iter().any(|r| r.0 == h && &r.1 == area) {
                    return Err(MarketError::Misaligned(format!(
                        "no consumption row for area {area} at {}",
                        format_epoch_hour(h)
                    )));
                }
            }
        }

        let na = areas.len();
        let nt = technologies.len();
        let mut snap = GridSnapshot {
            start_epoch_hour: start,
            hours,
            areas,
            technologies,
            generation: vec![0.0; hours * na * nt],
            flows: vec![0.0; hours * na * na],
            consumption: vec![0.0; hours * na],
        };
        for (h, area, tech, mwh) in &generation.rows {
            let hi = (h - start) as usize;
            let ai = snap.area_index(area).unwrap();
            let ti = snap.technologies.iter().position(|t| t == tech).unwrap();
            snap.generation[(hi * na + ai) * nt + ti] += mwh;
        }
        for (h, from, to, mwh) in &flows.rows {
            let hi = (h - start) as usize;
            let fi = snap.area_index(from).unwrap();
            let ti = snap.area_index(to).unwrap();
            snap.flows[(hi * na + fi) * na + ti] += mwh;
        }
        for (h, area, mwh) in &consumption.rows {
            let hi = (h - start) as usize;
            let ai = snap.area_index(area).unwrap();
            snap.consumption[hi * na + ai] += mwh;
        }
        Ok(snap)
    }

    pub fn start_epoch_hour(&self) -> i64 {
        self.start_epoch_hour
    }

    pub fn hours(&self) -> usize {
        self.hours
    }

    pub fn end_epoch_hour(&self) -> i64 {
        self.start_epoch_hour + self.hours as i64
    }

    pub fn areas(&self) -> &[String] {
        &self.areas
    }

    pub fn technologies(&self) -> &[String] {
        &self.technologies
    }

    pub fn area_index(&self, area: &str) -> Option<usize> {
        self.areas.iter().position(|a| a == area)
    }

    pub fn hour_index(&self, epoch_hour: i64) -> Option<usize> {
        if epoch_hour < self.start_epoch_hour || epoch_hour >= self.end_epoch_hour() {
            None
        } else {
            Some((epoch_hour - self.start_epoch_hour) as usize)
        }
    }

    pub fn generation_mwh(&self, hour_idx: usize, area_idx: usize, tech_idx: usize) -> f64 {
        self.generation[(hour_idx * self.areas.len() + area_idx) * self.technologies.len() + tech_idx]
    }

    pub fn flow_mwh(&self, hour_idx: usize, from_idx: usize, to_idx: usize) -> f64 {
        self.flows[(hour_idx * self.areas.len() + from_idx) * self.areas.len() + to_idx]
    }

    pub fn consumption_mwh(&self, hour_idx: usize, area_idx: usize) -> f64 {
        self.consumption[hour_idx * self.areas.len() + area_idx]
    }

    /// (total generation, total imports, total exports) for one area-hour.
    pub fn area_flows(&self, hour_idx: usize, area_idx: usize) -> (f64, f64, f64) {
        let gen: f64 = (0..self.technologies.len())
            .map(|t| self.generation_mwh(hour_idx, area_idx, t))
            .sum();
        let mut imports = 0.0;
        let mut exports = 0.0;
        for other in 0..self.areas.len() {
            if other == area_idx {
                continue;
            }
            imports += self.flow_mwh(hour_idx, other, area_idx);
            exports += self.flow_mwh(hour_idx, area_idx, other);
        }
        (gen, imports, exports)
    }

    /// All per-(area, hour) balance violations beyond `tol` (relative to the
    /// larger side of the balance).
    pub fn balance_violations(&self, tol: f64) -> Vec<BalanceViolation> {
        let mut out = Vec::new();
        for h in 0..self.hours {
            for a in 0..self.areas.len() {
                let (gen, imports, exports) = self.area_flows(h, a);
                let lhs = gen + imports - exports;
                let cons = self.consumption_mwh(h, a);
                let scale = lhs.abs().max(cons.abs()).max(1.0);
                let rel = (lhs - cons).abs() / scale;
                if rel > tol {
                    out.push(BalanceViolation {
                        area: self.areas[a].clone(),
                        hour: self.start_epoch_hour + h as i64,
                        lhs,
                        consumption: cons,
                        rel,
                    });
                }
            }
        }
        out
    }

    /// Test/fixture constructor from dense arrays. `generation[h][a][t]`,
    /// `flows[h][from][to]`, `consumption[h][a]`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_dense(
        start_epoch_hour: i64,
        areas: Vec<String>,
        technologies: Vec<String>,
        generation: Vec<f64>,
        flows: Vec<f64>,
        consumption: Vec<f64>,
    ) -> Result<Self, MarketError> {
        let na = areas.len();
        let nt = technologies.len();
        if na == 0 || consumption.len() % na != 0 {
            return Err(MarketError::Misaligned("bad consumption shape".into()));
        }
        let hours = consumption.len() / na;
        if generation.len() != hours * na * nt || flows.len() != hours * na * na {
            return Err(MarketError::Misaligned("array shapes disagree".into()));
        }
        Ok(GridSnapshot {
            start_epoch_hour,
            hours,
            areas,
            technologies,
            generation,
            flows,
            consumption,
        })
    }
}

/// Specific CO2 intensity per generation technology, gCO2/kWh.
#[derive(Debug, Clone, Default)]
pub struct EmissionFactorTable {
    factors: BTreeMap<String, f64>,
}

impl EmissionFactorTable {
    pub fn new(factors: BTreeMap<String, f64>) -> Result<Self, MarketError> {
        for (tech, &value) in &factors {
            if !(value >= 0.0) {
                return Err(MarketError::NegativeFactor { tech: tech.clone(), value });
            }
        }
        Ok(EmissionFactorTable { factors })
    }

    pub fn factor(&self, tech: &str) -> Option<f64> {
        self.factors.get(tech).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.factors.iter().map(|(k, &v)| (k.as_str(), v))
    }

    /// Every technology in the snapshot must have a factor.
    pub fn check_covers(&self, snapshot: &GridSnapshot) -> Result<(), MarketError> {
        for (t, tech) in snapshot.technologies().iter().enumerate() {
            if self.factor(tech).is_none() {
                // find an area actually using it, for a useful message
                let area = (0..snapshot.areas().len())
                    .find(|&a| {
                        (0..snapshot.hours()).any(|h| snapshot.generation_mwh(h, a, t) > 0.0)
                    })
                    .map(|a| snapshot.areas()[a].clone())
                    .unwrap_or_else(|| "<unused>".to_string());
                return Err(MarketError::MissingFactor { tech: tech.clone(), area });
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct EmissionFactorFile {
    emission_factors: BTreeMap<String, f64>,
}

/// Load emission factors from a TOML document:
///
/// ```toml
/// [emission_factors]
/// wind = 12.0
/// coal = 1000.0
/// ```
pub fn load_emission_factors(path: impl AsRef<Path>) -> Result<EmissionFactorTable, MarketError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| MarketError::Io { path: path.display().to_string(), source })?;
    let parsed: EmissionFactorFile = toml::from_str(&text).map_err(|e| MarketError::MalformedRow {
        path: path.display().to_string(),
        line: 0,
        reason: e.to_string(),
    })?;
    EmissionFactorTable::new(parsed.emission_factors)
}

/// Write a series as `timestamp_utc,<column>` CSV text.
pub fn series_to_csv(series: &HourlySeries, column: &str) -> String {
    let mut out = format!("timestamp_utc,{column}\n");
    for (h, v) in series.iter() {
        out.push_str(&format_epoch_hour(h));
        out.push(',');
        // Ryu-style shortest round-trip formatting keeps re-parsing bit-exact.
        out.push_str(&format!("{v}"));
        out.push('\n');
    }
    out
}
