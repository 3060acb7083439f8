//! Day-ahead electricity-market scheduling for flexible power-to-X plants.
//!
//! The crate co-optimizes electricity cost and consumption-based CO2
//! intensity when bidding a flexible plant (electrolyzer, methanation plant,
//! or heat pump system) into the day-ahead market, and simulates the daily
//! forecast → schedule → settle loop over monthly or yearly full-load-hour
//! targets.
//!
//! Pipeline, end to end:
//!
//! 1. [`market`] ingests hourly CSV data (prices, generation, flows,
//!    consumption) and emission-factor config.
//! 2. [`carbon`] traces flows through the interconnected grid to get each
//!    area's hourly consumption-based CO2 intensity.
//! 3. [`forecast`] issues 38-hour-ahead price/intensity forecasts at 10:00
//!    each day by moving-average decomposition with per-component models.
//! 4. [`scheduler`] solves the day-ahead dispatch MILP: buy the required
//!    energy in the hours minimizing `α·intensity + (1-α)·price` under
//!    ramp, start-up, minimum-up-time and storage constraints.
//! 5. [`controller`] spreads a monthly or yearly full-load-hour target over
//!    the days, pacing itself with the `f`-ratio correction.
//! 6. [`sweep`] runs the α grid per horizon and renders the cost/CO2
//!    trade-off curves.
//!
//! See the `examples/` directory for one runnable program per stage, and the
//! `ptx` binary for the file-based command-line front end.

pub mod carbon;
pub mod cli;
pub mod config;
pub mod controller;
pub mod forecast;
pub mod lp;
pub mod market;
pub mod milp;
pub mod scheduler;
pub mod series;
pub mod svg;
pub mod sweep;
pub mod synth;
pub mod tech;

pub use carbon::{intensity_series, trace_intensity, IntensityResult};
pub use controller::{
    apply_f, balance_f, estimate_daily_flh, horizon_averages, run_simulation, Forecaster, Horizon,
    HorizonPlan, IdealForecaster, LedgerEntry, MarketBundle, ModelForecaster, SimulationLedger,
};
pub use forecast::{decompose, fit_ar, forecast, ideal_forecast, Decomposition, ForecastPair};
pub use market::{
    load_emission_factors, parse_market_csv, parse_price_csv, CsvKind, EmissionFactorTable,
    GridSnapshot,
};
pub use scheduler::{
    feasible_energy_bounds, realize_day, schedule_day, DayProblem, DaySchedule, NetworkState,
};
pub use series::{GappySeries, HourlySeries, Unit};
pub use tech::{
    boiler_cost, build_technology, weighted_marginal_cost, ConverterParams, FuelParams,
    Normalization, StoreParams, TechnologyKind, TechnologyNetwork,
};
