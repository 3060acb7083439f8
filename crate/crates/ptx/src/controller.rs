//! Full-load-hour allocation across monthly and yearly horizons.
//!
//! Every day at 10:00 the controller stretches the daily co-optimization
//! over a long window (trailing history plus the fresh 38 h forecast),
//! reads off the energy the stretched optimum assigns to the next day, and
//! corrects that raw estimate with the pacing ratio
//!
//! ```text
//! f = (sum of scheduled hours so far + pro-rata remaining target) / target
//! ```
//!
//! dividing the next request by `f` so that slow progress raises future
//! requests and vice versa. The corrected request is clamped to the day's
//! feasible energy range before the daily scheduler runs.
//!
//! The stretched problem drops commitment and ramp coupling: with only the
//! energy budget and per-hour capacity left, its exact optimum is a greedy
//! marginal-cost fill (ties split uniformly), which keeps 365 daily solves
//! of an 8800-hour window cheap. The daily MILP still enforces the real
//! constraints.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecast::{
    forecast, ideal_forecast, ForecastError, ForecastPair, HISTORY_HOURS, ISSUE_HOUR_OF_DAY,
};
use crate::scheduler::{
    feasible_energy_bounds, realize_day, schedule_day_with_bounds, DayProblem, NetworkState,
    ScheduleError, DAY_HOURS,
};
use crate::series::{date_of_epoch_hour, epoch_hour_of_date, HourlySeries};
use crate::tech::{weighted_marginal_cost, Normalization, TechnologyNetwork};

/// Days of uniform requests while the ledger warms up.
pub const WARMUP_DAYS: usize = 29;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("insufficient history: need data from {needed_from} (epoch hour) but series starts at {have_from}")]
    InsufficientHistory { needed_from: i64, have_from: i64 },
    #[error("data does not cover the simulation: need up to {needed_to}, have {have_to}")]
    InsufficientCoverage { needed_to: i64, have_to: i64 },
    #[error("pacing ratio must be positive, got {0}")]
    NonpositiveF(f64),
    #[error("ledger incomplete for {0}")]
    IncompleteLedger(String),
    #[error("forecast failed on {day}: {source}")]
    Forecast { day: NaiveDate, source: ForecastError },
    #[error("scheduling failed on {day}: {source}")]
    Schedule { day: NaiveDate, source: ScheduleError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Horizon {
    Daily,
    Monthly,
    Yearly,
}

impl Horizon {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "daily" => Some(Horizon::Daily),
            "monthly" => Some(Horizon::Monthly),
            "yearly" => Some(Horizon::Yearly),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Horizon::Daily => "daily",
            Horizon::Monthly => "monthly",
            Horizon::Yearly => "yearly",
        }
    }
}

/// Target full-load hours over one horizon block: per day, per calendar
/// month, or per 365-day year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonPlan {
    pub horizon: Horizon,
    pub flh_target: f64,
}

/// Realized and traced historic series feeding a simulation.
#[derive(Debug, Clone)]
pub struct MarketBundle {
    pub price: HourlySeries,
    pub intensity: HourlySeries,
}

/// How the daily forecast pair is produced.
pub trait Forecaster: Sync {
    fn issue(&self, data: &MarketBundle, issue_hour: i64) -> Result<ForecastPair, ForecastError>;
    fn label(&self) -> &'static str;
}

/// Decomposition + AR component models fed by trailing history.
pub struct ModelForecaster;

impl Forecaster for ModelForecaster {
    fn issue(&self, data: &MarketBundle, issue_hour: i64) -> Result<ForecastPair, ForecastError> {
        // hand the model only the past, never the full truth series
        let start = issue_hour - HISTORY_HOURS as i64;
        let price = data
            .price
            .window(start, HISTORY_HOURS)
            .map_err(|_| ForecastError::SeriesTooShort { len: 0, min: HISTORY_HOURS })?;
        let intensity = data
            .intensity
            .window(start, HISTORY_HOURS)
            .map_err(|_| ForecastError::SeriesTooShort { len: 0, min: HISTORY_HOURS })?;
        forecast(&price, &intensity, issue_hour, crate::forecast::FORECAST_HORIZON)
    }

    fn label(&self) -> &'static str {
        "model"
    }
}

/// Perfect foresight.
pub struct IdealForecaster;

impl Forecaster for IdealForecaster {
    fn issue(&self, data: &MarketBundle, issue_hour: i64) -> Result<ForecastPair, ForecastError> {
        ideal_forecast(&data.price, &data.intensity, issue_hour, crate::forecast::FORECAST_HORIZON)
    }

    fn label(&self) -> &'static str {
        "ideal"
    }
}

/// Pre-computed forecasts shared across sweep cells (read-only).
pub struct CachedForecaster {
    pub inner: BTreeMap<i64, ForecastPair>,
    pub mode: &'static str,
}

impl Forecaster for CachedForecaster {
    fn issue(&self, _data: &MarketBundle, issue_hour: i64) -> Result<ForecastPair, ForecastError> {
        self.inner
            .get(&issue_hour)
            .cloned()
            .ok_or(ForecastError::HistoryMisaligned { expected: issue_hour, found: -1 })
    }

    fn label(&self) -> &'static str {
        self.mode
    }
}

/// One simulated delivery day.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub day: NaiveDate,
    /// Controller request after the f-correction, before feasibility clamping, h.
    pub flh_requested: f64,
    /// What the daily scheduler actually committed, h.
    pub flh_scheduled: f64,
    /// Pacing ratio used for this day.
    pub f_value: f64,
    pub realized_cost_eur: f64,
    pub realized_co2_g: f64,
    /// €/MWh over the day's purchases (0 when idle).
    pub mean_price_paid: f64,
    /// gCO2/kWh over the day's purchases (0 when idle).
    pub mean_intensity: f64,
    pub price_ref: f64,
    pub intensity_ref: f64,
    /// False on warm-up and daily-mode days.
    pub controller_active: bool,
}

/// Day-by-day record of one simulation.
#[derive(Debug, Clone)]
pub struct SimulationLedger {
    pub horizon: Horizon,
    pub flh_target: f64,
    pub alpha: f64,
    pub entries: Vec<LedgerEntry>,
}

impl SimulationLedger {
    pub fn total_flh(&self) -> f64 {
        self.entries.iter().map(|e| e.flh_scheduled).sum()
    }

    pub fn total_energy_mwh(&self, p_nom: f64) -> f64 {
        self.total_flh() * p_nom
    }

    pub fn total_cost_eur(&self) -> f64 {
        self.entries.iter().map(|e| e.realized_cost_eur).sum()
    }

    pub fn total_co2_g(&self) -> f64 {
        self.entries.iter().map(|e| e.realized_co2_g).sum()
    }

    /// Energy-weighted mean price paid, €/MWh.
    pub fn mean_price(&self, p_nom: f64) -> f64 {
        let energy = self.total_energy_mwh(p_nom);
        if energy > 0.0 {
            self.total_cost_eur() / energy
        } else {
            0.0
        }
    }

    /// Energy-weighted mean intensity, gCO2/kWh.
    pub fn mean_intensity(&self, p_nom: f64) -> f64 {
        let energy = self.total_energy_mwh(p_nom);
        if energy > 0.0 {
            self.total_co2_g() / (energy * 1000.0)
        } else {
            0.0
        }
    }

    /// CSV export in the documented ledger schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "date,flh_requested,flh_scheduled,f,realized_cost_eur,realized_co2_g,mean_price_paid,mean_intensity\n",
        );
        for e in &self.entries {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.9},{:.6},{:.3},{:.6},{:.6}\n",
                e.day,
                e.flh_requested,
                e.flh_scheduled,
                e.f_value,
                e.realized_cost_eur,
                e.realized_co2_g,
                e.mean_price_paid,
                e.mean_intensity
            ));
        }
        out
    }
}

/// Eq-(7)-style pacing ratio: scheduled-so-far plus the pro-rata remainder,
/// against the horizon target. A zero target defines `f = 1`.
pub fn balance_f(sum_scheduled_flh: f64, days_elapsed: u32, days_in_horizon: u32, flh_target: f64) -> f64 {
    if flh_target <= 0.0 {
        return 1.0;
    }
    let n = days_elapsed as f64;
    let n_total = days_in_horizon.max(1) as f64;
    (sum_scheduled_flh + ((n_total - n) / n_total) * flh_target) / flh_target
}

/// Scale the next day's raw estimate by `1/f`.
pub fn apply_f(raw_estimate_flh: f64, f: f64) -> Result<f64, ControlError> {
    if !(f > 0.0) {
        return Err(ControlError::NonpositiveF(f));
    }
    Ok(raw_estimate_flh / f)
}

/// Raw next-day estimate from the stretched long-window optimization.
///
/// `history` must cover the trailing window ending at `issue_hour - 1`
/// (28 d 10 h for monthly, 365 d 10 h for yearly); the forecast supplies the
/// remaining 38 hours. The window budget is the horizon target scaled by
/// `window_days / horizon_days`.
pub fn estimate_daily_flh(
    history_price: &HourlySeries,
    history_intensity: &HourlySeries,
    forecast: &ForecastPair,
    plan: &HorizonPlan,
    days_in_horizon: u32,
    alpha: f64,
    norm: &Normalization,
    network: &TechnologyNetwork,
) -> Result<f64, ControlError> {
    let issue_hour = forecast.issued_at;
    let history_hours = match plan.horizon {
        Horizon::Monthly | Horizon::Daily => HISTORY_HOURS,
        Horizon::Yearly => 365 * 24 + ISSUE_HOUR_OF_DAY as usize,
    };
    let window_start = issue_hour - history_hours as i64;
    if history_price.start_epoch_hour() > window_start
        || history_intensity.start_epoch_hour() > window_start
    {
        return Err(ControlError::InsufficientHistory {
            needed_from: window_start,
            have_from: history_price.start_epoch_hour().max(history_intensity.start_epoch_hour()),
        });
    }
    let hist_p = history_price
        .window(window_start, history_hours)
        .map_err(|_| ControlError::InsufficientHistory {
            needed_from: window_start,
            have_from: history_price.start_epoch_hour(),
        })?;
    let hist_c = history_intensity
        .window(window_start, history_hours)
        .map_err(|_| ControlError::InsufficientHistory {
            needed_from: window_start,
            have_from: history_intensity.start_epoch_hour(),
        })?;

    let p_nom = network.p_nom();
    let horizon_hours = history_hours + forecast.horizon();
    let window_days = horizon_hours as f64 / 24.0;
    let budget = plan.flh_target * p_nom * window_days / days_in_horizon.max(1) as f64;

    let mut costs: Vec<f64> = Vec::with_capacity(horizon_hours);
    for i in 0..history_hours {
        costs.push(weighted_marginal_cost(alpha, hist_p.values()[i], hist_c.values()[i], norm));
    }
    for i in 0..forecast.horizon() {
        costs.push(weighted_marginal_cost(
            alpha,
            forecast.price.values()[i],
            forecast.intensity.values()[i],
            norm,
        ));
    }

    let allocation = greedy_fill(&costs, budget, p_nom);
    // energy assigned to the final day (the 24 market hours of D+1)
    let final_day: f64 = allocation[horizon_hours - DAY_HOURS..].iter().sum();
    Ok((final_day / p_nom).clamp(0.0, DAY_HOURS as f64))
}

/// Exact optimum of `min Σ c_i x_i` s.t. `Σ x_i = budget`, `0 <= x_i <= cap`:
/// fill hours in cost order, splitting ties uniformly so symmetric inputs
/// produce symmetric allocations.
pub fn greedy_fill(costs: &[f64], budget: f64, cap: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..costs.len()).collect();
    order.sort_by(|&a, &b| costs[a].partial_cmp(&costs[b]).unwrap().then(a.cmp(&b)));
    let mut allocation = vec![0.0; costs.len()];
    let mut remaining = budget.min(cap * costs.len() as f64).max(0.0);
    let mut i = 0;
    while i < order.len() && remaining > 0.0 {
        // tie group of equal costs
        let mut j = i;
        while j + 1 < order.len() && costs[order[j + 1]] == costs[order[i]] {
            j += 1;
        }
        let group = &order[i..=j];
        let group_cap = cap * group.len() as f64;
        if remaining >= group_cap {
            for &k in group {
                allocation[k] = cap;
            }
            remaining -= group_cap;
        } else {
            let each = remaining / group.len() as f64;
            for &k in group {
                allocation[k] = each;
            }
            remaining = 0.0;
        }
        i = j + 1;
    }
    allocation
}

fn days_in_month(date: NaiveDate) -> u32 {
    let (y, m) = (date.year(), date.month());
    let first = NaiveDate::from_ymd_opt(y, m, 1).unwrap();
    let next = if m == 12 {
        NaiveDate::from_ymd_opt(y + 1, 1, 1).unwrap()
    } else {
        NaiveDate::from_ymd_opt(y, m + 1, 1).unwrap()
    };
    next.signed_duration_since(first).num_days() as u32
}

/// Rolling-horizon simulation: every day issue a forecast at 10:00, let the
/// controller pick the day's full-load hours (monthly/yearly) or use the
/// fixed per-day target (daily), schedule D+1, realize it against the actual
/// series, and append to the ledger.
pub fn run_simulation(
    data: &MarketBundle,
    network: &TechnologyNetwork,
    plan: &HorizonPlan,
    alpha: f64,
    forecaster: &dyn Forecaster,
    start_date: NaiveDate,
    days: usize,
) -> Result<SimulationLedger, ControlError> {
    let p_nom = network.p_nom();
    let start_hour = epoch_hour_of_date(start_date);
    let history_hours = match plan.horizon {
        Horizon::Yearly => 365 * 24 + ISSUE_HOUR_OF_DAY as usize,
        _ => HISTORY_HOURS,
    };
    // first issue happens the day before the first delivery day
    let first_issue = start_hour - 24 + ISSUE_HOUR_OF_DAY;
    let needed_from = first_issue - history_hours as i64;
    for series in [&data.price, &data.intensity] {
        if series.start_epoch_hour() > needed_from {
            return Err(ControlError::InsufficientHistory {
                needed_from,
                have_from: series.start_epoch_hour(),
            });
        }
        let needed_to = start_hour + days as i64 * 24;
        if series.end_epoch_hour() < needed_to {
            return Err(ControlError::InsufficientCoverage {
                needed_to,
                have_to: series.end_epoch_hour(),
            });
        }
    }

    let mut entries: Vec<LedgerEntry> = Vec::with_capacity(days);
    let mut state = NetworkState::fresh(network);
    // (block key, days in block, flh scheduled so far, days elapsed)
    let mut block: Option<(String, u32, f64, u32)> = None;

    for d in 0..days {
        let day_start = start_hour + d as i64 * 24;
        let date = date_of_epoch_hour(day_start);
        let issue_hour = day_start - 24 + ISSUE_HOUR_OF_DAY;

        // horizon block bookkeeping
        let (block_key, n_days) = match plan.horizon {
            Horizon::Daily => ("daily".to_string(), 1),
            Horizon::Monthly => (format!("{}-{:02}", date.year(), date.month()), days_in_month(date)),
            Horizon::Yearly => (format!("year-{}", d / 365), 365),
        };
        match &mut block {
            Some((key, _, _, _)) if *key == block_key => {}
            _ => block = Some((block_key.clone(), n_days, 0.0, 0)),
        }
        let (_, n_total, sum_flh, elapsed) = block.clone().unwrap();

        let pair = forecaster
            .issue(data, issue_hour)
            .map_err(|source| ControlError::Forecast { day: date, source })?;

        // normalization from the trailing 28 d 10 h of actuals
        let norm_window_start = issue_hour - HISTORY_HOURS as i64;
        let norm = Normalization::from_history(
            &data.price.window(norm_window_start, HISTORY_HOURS).expect("history checked"),
            &data.intensity.window(norm_window_start, HISTORY_HOURS).expect("history checked"),
        );

        let controller_active = plan.horizon != Horizon::Daily && d >= WARMUP_DAYS;
        let uniform = match plan.horizon {
            Horizon::Daily => plan.flh_target,
            _ => plan.flh_target / n_total as f64,
        };
        let raw = if controller_active {
            estimate_daily_flh(&data.price, &data.intensity, &pair, plan, n_total, alpha, &norm, network)?
        } else {
            uniform
        };

        let f = if plan.horizon == Horizon::Daily {
            1.0
        } else {
            balance_f(sum_flh, elapsed, n_total, plan.flh_target)
        };
        let requested = if plan.horizon == Horizon::Daily { raw } else { apply_f(raw, f)? };

        let (min_e, max_e) = feasible_energy_bounds(network, &state)
            .map_err(|source| ControlError::Schedule { day: date, source })?;
        let g_e = (requested * p_nom).clamp(min_e, max_e);
        if (g_e - requested * p_nom).abs() > 1e-9 {
            log::warn!(
                "{date}: request {:.3} MWh clamped to feasible range [{min_e:.3}, {max_e:.3}]",
                requested * p_nom
            );
        }

        let problem = DayProblem::from_forecast(
            network.clone(),
            &pair,
            g_e,
            alpha,
            norm,
            state.clone(),
        );
        let schedule = schedule_day_with_bounds(&problem, (min_e, max_e))
            .map_err(|source| ControlError::Schedule { day: date, source })?;
        let (cost, co2) = realize_day(&schedule, &data.price, &data.intensity)
            .map_err(|source| ControlError::Schedule { day: date, source })?;

        let scheduled_flh = schedule.total_energy() / p_nom;
        let energy = schedule.total_energy();
        entries.push(LedgerEntry {
            day: date,
            flh_requested: requested,
            flh_scheduled: scheduled_flh,
            f_value: f,
            realized_cost_eur: cost,
            realized_co2_g: co2,
            mean_price_paid: if energy > 0.0 { cost / energy } else { 0.0 },
            mean_intensity: if energy > 0.0 { co2 / (energy * 1000.0) } else { 0.0 },
            price_ref: norm.price_ref,
            intensity_ref: norm.intensity_ref,
            controller_active,
        });

        state = schedule.end_state.clone();
        if let Some((_, _, sum, n)) = &mut block {
            *sum += scheduled_flh;
            *n += 1;
        }
    }

    Ok(SimulationLedger { horizon: plan.horizon, flh_target: plan.flh_target, alpha, entries })
}

/// Mean scheduled hours per calendar month and, when the ledger spans at
/// least 365 days, per year.
pub fn horizon_averages(
    ledger: &SimulationLedger,
) -> Result<(BTreeMap<(i32, u32), f64>, Option<f64>), ControlError> {
    let mut by_month: BTreeMap<(i32, u32), Vec<f64>> = BTreeMap::new();
    for e in &ledger.entries {
        by_month.entry((e.day.year(), e.day.month())).or_default().push(e.flh_scheduled);
    }
    let mut monthly = BTreeMap::new();
    for ((y, m), values) in by_month {
        let month_days =
            days_in_month(NaiveDate::from_ymd_opt(y, m, 1).unwrap()) as usize;
        if values.len() != month_days {
            return Err(ControlError::IncompleteLedger(format!(
                "{y}-{m:02}: {} of {month_days} days",
                values.len()
            )));
        }
        monthly.insert((y, m), values.iter().sum::<f64>() / values.len() as f64);
    }
    let yearly = if ledger.entries.len() >= 365 {
        Some(ledger.entries[..365].iter().map(|e| e.flh_scheduled).sum::<f64>() / 365.0)
    } else {
        None
    };
    Ok((monthly, yearly))
}

/// Mean scheduled hours over exactly the first 365 ledger days.
pub fn yearly_average(ledger: &SimulationLedger) -> Result<f64, ControlError> {
    if ledger.entries.len() < 365 {
        return Err(ControlError::IncompleteLedger(format!(
            "{} of 365 days",
            ledger.entries.len()
        )));
    }
    Ok(ledger.entries[..365].iter().map(|e| e.flh_scheduled).sum::<f64>() / 365.0)
}
