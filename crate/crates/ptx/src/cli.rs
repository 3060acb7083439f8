//! Command-line front end: `trace`, `forecast`, `schedule-day`, `simulate`
//! and `sweep`, all file based.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 infeasible
//! scheduling request, 1 anything else. `PTX_LOG` controls log verbosity
//! (`error`, `warn`, `info`, `debug`, `trace`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::carbon::intensity_table;
use crate::config::{load_bundle, ConfigError, DataLoadError, ForecastMode, RunConfig};
use crate::controller::{run_simulation, ControlError, Horizon, HorizonPlan, MarketBundle};
use crate::forecast::{ForecastError, FORECAST_HORIZON};
use crate::market::{
    load_emission_factors, parse_consumption_csv, parse_flow_csv, parse_generation_csv,
    parse_intensity_csv, parse_price_csv, GridSnapshot, MarketError,
};
use crate::scheduler::{schedule_day, DayProblem, NetworkState, ScheduleError, DAY_HOURS};
use crate::series::{format_epoch_hour, parse_timestamp_utc, SeriesError};
use crate::sweep::{run_sweep, sweep_to_csv, sweep_to_svg, SweepSpec};
use crate::tech::{build_technology, Normalization, TechError, TechnologyKind};

#[derive(Parser)]
#[command(
    name = "ptx",
    about = "Day-ahead market scheduling for flexible power-to-X plants",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute hourly consumption-based CO2 intensity per area by flow tracing
    Trace(TraceArgs),
    /// Issue a 38-hour-ahead price/intensity forecast
    Forecast(ForecastArgs),
    /// Solve a single day-ahead dispatch problem and export the bid sheet
    ScheduleDay(ScheduleDayArgs),
    /// Run one rolling-horizon simulation and export the ledger
    Simulate(SimulateArgs),
    /// Run the full alpha-grid sweep and render the trade-off figure
    Sweep(SweepArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    /// Generation CSV (timestamp_utc,area,technology,generation_mwh)
    #[arg(long)]
    generation: PathBuf,
    /// Flows CSV (timestamp_utc,from_area,to_area,flow_mwh)
    #[arg(long)]
    flows: PathBuf,
    /// Consumption CSV (timestamp_utc,area,consumption_mwh)
    #[arg(long)]
    consumption: PathBuf,
    /// Emission factors TOML ([emission_factors] tech = gCO2/kWh)
    #[arg(long)]
    factors: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ForecastArgs {
    /// Historic prices CSV
    #[arg(long)]
    prices: PathBuf,
    /// Historic intensity CSV
    #[arg(long)]
    intensity: PathBuf,
    /// Issue timestamp, e.g. 2019-03-01T10:00Z
    #[arg(long)]
    issue: String,
    /// model (decomposition + AR) or ideal (perfect foresight)
    #[arg(long, default_value = "model")]
    forecast: String,
    /// Forecast horizon in hours
    #[arg(long, default_value_t = FORECAST_HORIZON)]
    horizon_hours: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct PlantArgs {
    /// electrolyzer, methanation or heatpump
    #[arg(long, default_value = "electrolyzer")]
    tech: String,
    /// Parameter overrides, e.g. --set electrolyzer.ramp_up=0.5
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ScheduleDayArgs {
    /// Forecast CSV (timestamp_utc,price_forecast,intensity_forecast);
    /// the last 24 rows are the market day
    #[arg(long)]
    forecast_file: PathBuf,
    #[command(flatten)]
    plant: PlantArgs,
    /// CO2 weight in [0, 1]
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Full-load hours to buy for the day
    #[arg(long)]
    flh: f64,
    /// Grid dispatch in the final hour of the previous day, MW
    #[arg(long, default_value_t = 0.0)]
    g_prev: f64,
    /// Price normalization reference (€/MWh)
    #[arg(long, default_value_t = 1.0)]
    norm_price: f64,
    /// Intensity normalization reference (gCO2/kWh)
    #[arg(long, default_value_t = 1.0)]
    norm_intensity: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SimulateArgs {
    /// Run configuration TOML
    #[arg(long)]
    config: PathBuf,
    /// Override [plant].technology
    #[arg(long)]
    tech: Option<String>,
    /// Override [simulation].alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Override [simulation].horizon
    #[arg(long)]
    horizon: Option<String>,
    /// Override [simulation].flh
    #[arg(long)]
    flh: Option<f64>,
    /// Override [simulation].forecast (model|ideal)
    #[arg(long)]
    forecast: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SweepArgs {
    /// Run configuration TOML
    #[arg(long)]
    config: PathBuf,
    /// Override [plant].technology
    #[arg(long)]
    tech: Option<String>,
    /// Override [simulation].forecast (model|ideal)
    #[arg(long)]
    forecast: Option<String>,
    #[command(flatten)]
    out: OutArg,
}

/// Errors annotated with their process exit code.
#[derive(Debug)]
pub struct CliError {
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    fn config(message: impl ToString) -> Self {
        CliError { exit_code: 2, message: message.to_string() }
    }
    fn data(message: impl ToString) -> Self {
        CliError { exit_code: 3, message: message.to_string() }
    }
    fn infeasible(message: impl ToString) -> Self {
        CliError { exit_code: 4, message: message.to_string() }
    }
    fn other(message: impl ToString) -> Self {
        CliError { exit_code: 1, message: message.to_string() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::config(e)
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        CliError::data(e)
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::data(e)
    }
}

impl From<ForecastError> for CliError {
    fn from(e: ForecastError) -> Self {
        CliError::data(e)
    }
}

impl From<TechError> for CliError {
    fn from(e: TechError) -> Self {
        CliError::config(e)
    }
}

impl From<crate::carbon::TraceError> for CliError {
    fn from(e: crate::carbon::TraceError) -> Self {
        CliError::data(e)
    }
}

impl From<DataLoadError> for CliError {
    fn from(e: DataLoadError) -> Self {
        match e {
            DataLoadError::Config(c) => c.into(),
            DataLoadError::Market(m) => m.into(),
            DataLoadError::Trace(t) => t.into(),
        }
    }
}

impl From<ScheduleError> for CliError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::Infeasible { .. } | ScheduleError::PlantInfeasible(_) => {
                CliError::infeasible(e)
            }
            ScheduleError::InvalidProblem(_) => CliError::config(e),
            ScheduleError::Coverage(_) => CliError::data(e),
            other => CliError::other(other),
        }
    }
}

impl From<ControlError> for CliError {
    fn from(e: ControlError) -> Self {
        match e {
            ControlError::Schedule { source, day } => {
                let mut inner: CliError = source.into();
                inner.message = format!("{day}: {}", inner.message);
                inner
            }
            ControlError::Forecast { .. }
            | ControlError::InsufficientHistory { .. }
            | ControlError::InsufficientCoverage { .. } => CliError::data(e),
            other => CliError::other(other),
        }
    }
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::other(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::other(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// Entry point used by the `ptx` binary; parses `args` and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        // clap already formats usage errors; --help/--version exit cleanly
        if e.use_stderr() {
            CliError::config(e.to_string())
        } else {
            print!("{e}");
            CliError { exit_code: 0, message: String::new() }
        }
    })?;
    match cli.command {
        Command::Trace(args) => cmd_trace(args),
        Command::Forecast(args) => cmd_forecast(args),
        Command::ScheduleDay(args) => cmd_schedule_day(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_trace(args: TraceArgs) -> Result<(), CliError> {
    let generation = parse_generation_csv(&args.generation)?;
    let flows = parse_flow_csv(&args.flows)?;
    let consumption = parse_consumption_csv(&args.consumption)?;
    let snapshot = GridSnapshot::assemble(&generation, &flows, &consumption)?;
    let factors = load_emission_factors(&args.factors)?;
    let rows = intensity_table(&snapshot, &factors)?;
    let mut csv = String::from("timestamp_utc,area,intensity_gco2_kwh\n");
    for (hour, area, value) in rows {
        csv.push_str(&format!("{},{},{}\n", format_epoch_hour(hour), area, value));
    }
    let path = write_file(&args.out.out, "intensity.csv", &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_forecast(args: ForecastArgs) -> Result<(), CliError> {
    let price = parse_price_csv(&args.prices)?;
    let intensity = parse_intensity_csv(&args.intensity)?;
    let issue = parse_timestamp_utc(&args.issue)?;
    let pair = match args.forecast.as_str() {
        "model" => crate::forecast::forecast(&price, &intensity, issue, args.horizon_hours)?,
        "ideal" => crate::forecast::ideal_forecast(&price, &intensity, issue, args.horizon_hours)?,
        other => return Err(CliError::config(format!("unknown forecast mode {other:?}"))),
    };
    let mut csv = String::from("timestamp_utc,price_forecast,intensity_forecast\n");
    for i in 0..pair.horizon() {
        csv.push_str(&format!(
            "{},{},{}\n",
            format_epoch_hour(pair.issued_at + i as i64),
            pair.price.values()[i],
            pair.intensity.values()[i]
        ));
    }
    let path = write_file(&args.out.out, "forecast.csv", &csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn parse_overrides(set: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut overrides = BTreeMap::new();
    for item in set {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("--set expects NAME=VALUE, got {item:?}")))?;
        let value: f64 = value
            .parse()
            .map_err(|e| CliError::config(format!("--set {key}: bad value: {e}")))?;
        overrides.insert(key.to_string(), value);
    }
    Ok(overrides)
}

fn read_forecast_file(path: &Path) -> Result<(i64, Vec<f64>, Vec<f64>), CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<(i64, f64, f64)> = Vec::new();
    for (idx, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if record.len() != 3 {
            return Err(CliError::data(format!(
                "{}:{}: expected 3 fields",
                path.display(),
                idx + 2
            )));
        }
        let hour = parse_timestamp_utc(&record[0])?;
        let p: f64 = record[1]
            .parse()
            .map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), idx + 2)))?;
        let c: f64 = record[2]
            .parse()
            .map_err(|e| CliError::data(format!("{}:{}: {e}", path.display(), idx + 2)))?;
        rows.push((hour, p, c));
    }
    if rows.len() < DAY_HOURS {
        return Err(CliError::data(format!(
            "{}: needs at least {DAY_HOURS} rows, found {}",
            path.display(),
            rows.len()
        )));
    }
    let day = &rows[rows.len() - DAY_HOURS..];
    for w in day.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            return Err(CliError::data(format!(
                "{}: market-day rows are not contiguous at {}",
                path.display(),
                format_epoch_hour(w[1].0)
            )));
        }
    }
    Ok((
        day[0].0,
        day.iter().map(|r| r.1).collect(),
        day.iter().map(|r| r.2).collect(),
    ))
}

fn cmd_schedule_day(args: ScheduleDayArgs) -> Result<(), CliError> {
    let kind = TechnologyKind::parse(&args.plant.tech)?;
    let overrides = parse_overrides(&args.plant.set)?;
    let network = build_technology(kind, &overrides)?;
    let (start_hour, price, intensity) = read_forecast_file(&args.forecast_file)?;

    let mut prev = NetworkState::fresh(&network);
    prev.dispatch.insert(network.grid_converter_name().to_string(), args.g_prev);
    let problem = DayProblem {
        start_hour,
        g_e: args.flh * network.p_nom(),
        alpha: args.alpha,
        norm: Normalization { price_ref: args.norm_price, intensity_ref: args.norm_intensity },
        prev,
        network,
        price,
        intensity,
    };
    let schedule = schedule_day(&problem)?;

    let mut csv = String::from("timestamp_utc,quantity_mwh,composite_marginal_cost\n");
    for i in 0..DAY_HOURS {
        csv.push_str(&format!(
            "{},{:.6},{:.9}\n",
            format_epoch_hour(start_hour + i as i64),
            schedule.g[i + 1],
            schedule.composite_cost[i]
        ));
    }
    let path = write_file(&args.out.out, "bid.csv", &csv)?;
    println!(
        "wrote {} (energy {:.3} MWh, forecast cost {:.2} EUR, forecast CO2 {:.0} g)",
        path.display(),
        schedule.total_energy(),
        schedule.forecast_cost,
        schedule.forecast_co2
    );
    Ok(())
}

struct SimScope {
    bundle: MarketBundle,
    start: chrono::NaiveDate,
    days: usize,
}

fn sim_scope(cfg: &RunConfig) -> Result<SimScope, CliError> {
    let bundle = load_bundle(cfg)?;
    let start = cfg
        .simulation
        .start_date()?
        .ok_or_else(|| CliError::config("[simulation].start is required"))?;
    let days = cfg
        .simulation
        .days
        .ok_or_else(|| CliError::config("[simulation].days is required"))?;
    if days == 0 {
        return Err(CliError::config("[simulation].days must be positive"));
    }
    Ok(SimScope { bundle, start, days })
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(t) = args.tech {
        cfg.plant.technology = Some(t);
    }
    if let Some(a) = args.alpha {
        cfg.simulation.alpha = Some(a);
    }
    if let Some(h) = args.horizon {
        cfg.simulation.horizon = Some(h);
    }
    if let Some(f) = args.flh {
        cfg.simulation.flh = Some(f);
    }
    if let Some(m) = args.forecast {
        cfg.simulation.forecast = Some(m);
    }

    let network = cfg.technology()?;
    let scope = sim_scope(&cfg)?;
    let alpha = cfg.simulation.alpha.unwrap_or(0.5);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(CliError::config(format!("alpha {alpha} outside [0, 1]")));
    }
    let horizon = match cfg.simulation.horizon.as_deref() {
        None => Horizon::Daily,
        Some(h) => Horizon::parse(h)
            .ok_or_else(|| CliError::config(format!("unknown horizon {h:?}")))?,
    };
    let flh = cfg
        .simulation
        .flh
        .ok_or_else(|| CliError::config("[simulation].flh is required"))?;
    let plan = HorizonPlan { horizon, flh_target: flh };

    let forecaster = crate::sweep::precompute_forecasts(
        &scope.bundle,
        cfg.forecast_mode()?,
        scope.start,
        scope.days,
    )?;
    let ledger = run_simulation(
        &scope.bundle,
        &network,
        &plan,
        alpha,
        &forecaster,
        scope.start,
        scope.days,
    )?;

    let path = write_file(&args.out.out, "ledger.csv", &ledger.to_csv())?;
    let p_nom = network.p_nom();
    println!(
        "wrote {} ({} days, {:.2} FLH total, mean price {:.3} EUR/MWh, mean intensity {:.3} gCO2/kWh)",
        path.display(),
        ledger.entries.len(),
        ledger.total_flh(),
        ledger.mean_price(p_nom),
        ledger.mean_intensity(p_nom)
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(t) = args.tech {
        cfg.plant.technology = Some(t);
    }
    if let Some(m) = args.forecast {
        cfg.simulation.forecast = Some(m);
    }
    let network = cfg.technology()?;
    let scope = sim_scope(&cfg)?;
    let spec = SweepSpec {
        alphas: cfg.alphas()?,
        horizons: cfg.horizons_with_targets()?,
        forecast_mode: cfg.forecast_mode()?,
        start_date: scope.start,
        days: scope.days,
        parallelism: cfg.sweep.parallelism.unwrap_or_else(num_threads_default),
    };
    let rows = run_sweep(&scope.bundle, &network, &spec)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();

    let csv_path = write_file(&args.out.out, "sweep.csv", &sweep_to_csv(&rows))?;
    let title = format!(
        "cost / CO2 trade-off — {} ({} forecast)",
        network.kind.label(),
        match cfg.forecast_mode()? {
            ForecastMode::Model => "model",
            ForecastMode::Ideal => "ideal",
        }
    );
    let svg_path = write_file(&args.out.out, "tradeoff.svg", &sweep_to_svg(&rows, &title))?;
    println!(
        "wrote {} and {} ({} cells, {failed} failed)",
        csv_path.display(),
        svg_path.display(),
        rows.len()
    );
    if failed > 0 {
        log::warn!("{failed} sweep cells failed; see the status column");
    }
    Ok(())
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
