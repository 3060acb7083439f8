//! α-grid trade-off sweeps across scheduling horizons.
//!
//! One cell = one full simulation at a given `(α, horizon)`. Cells run
//! concurrently up to the configured parallelism; daily forecasts are
//! computed once per forecast mode and shared read-only, since they depend
//! on neither α nor the horizon. Result assembly is deterministic: rows are
//! ordered by α then horizon regardless of completion order.

use chrono::NaiveDate;

use crate::config::ForecastMode;
use crate::controller::{
    run_simulation, CachedForecaster, Forecaster, Horizon, HorizonPlan, IdealForecaster,
    MarketBundle, ModelForecaster,
};
use crate::forecast::{ForecastError, ForecastPair, ISSUE_HOUR_OF_DAY};
use crate::series::epoch_hour_of_date;
use crate::svg::{line_plot, Curve};
use crate::tech::TechnologyNetwork;

/// One `(α, horizon)` cell of the sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub alpha: f64,
    pub horizon: Horizon,
    pub flh_target: f64,
    /// Energy-weighted €/MWh over the run.
    pub mean_price: f64,
    /// Energy-weighted gCO2/kWh over the run.
    pub mean_intensity: f64,
    pub total_flh: f64,
    /// Populated when the cell failed; the sweep continues past it.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub alphas: Vec<f64>,
    /// `(horizon, flh target per horizon block)`
    pub horizons: Vec<(Horizon, f64)>,
    pub forecast_mode: ForecastMode,
    pub start_date: NaiveDate,
    pub days: usize,
    pub parallelism: usize,
}

/// Issue one forecast per simulated day up front so every cell shares them.
pub fn precompute_forecasts(
    data: &MarketBundle,
    mode: ForecastMode,
    start_date: NaiveDate,
    days: usize,
) -> Result<CachedForecaster, ForecastError> {
    let start_hour = epoch_hour_of_date(start_date);
    let mut inner = std::collections::BTreeMap::new();
    for d in 0..days {
        let issue_hour = start_hour + (d as i64 - 1) * 24 + ISSUE_HOUR_OF_DAY;
        let pair: ForecastPair = match mode {
            ForecastMode::Model => ModelForecaster.issue(data, issue_hour)?,
            ForecastMode::Ideal => IdealForecaster.issue(data, issue_hour)?,
        };
        inner.insert(issue_hour, pair);
    }
    Ok(CachedForecaster {
        inner,
        mode: match mode {
            ForecastMode::Model => "model",
            ForecastMode::Ideal => "ideal",
        },
    })
}

/// Run every `(α, horizon)` cell and return rows ordered by α then horizon.
pub fn run_sweep(
    data: &MarketBundle,
    network: &TechnologyNetwork,
    spec: &SweepSpec,
) -> Result<Vec<SweepRow>, ForecastError> {
    let forecaster = precompute_forecasts(data, spec.forecast_mode, spec.start_date, spec.days)?;
    let p_nom = network.p_nom();

    let mut cells: Vec<(f64, Horizon, f64)> = Vec::new();
    for &alpha in &spec.alphas {
        for &(horizon, flh) in &spec.horizons {
            cells.push((alpha, horizon, flh));
        }
    }
    cells.sort_by(|a, b| {
        a.0.partial_cmp(&b.0).unwrap().then(horizon_rank(a.1).cmp(&horizon_rank(b.1)))
    });

    let run_cell = |&(alpha, horizon, flh): &(f64, Horizon, f64)| -> SweepRow {
        let plan = HorizonPlan { horizon, flh_target: flh };
        match run_simulation(data, network, &plan, alpha, &forecaster, spec.start_date, spec.days)
        {
            Ok(ledger) => SweepRow {
                alpha,
                horizon,
                flh_target: flh,
                mean_price: ledger.mean_price(p_nom),
                mean_intensity: ledger.mean_intensity(p_nom),
                total_flh: ledger.total_flh(),
                error: None,
            },
            Err(e) => SweepRow {
                alpha,
                horizon,
                flh_target: flh,
                mean_price: f64::NAN,
                mean_intensity: f64::NAN,
                total_flh: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    };

    let rows: Vec<SweepRow> = if spec.parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.parallelism)
            .build()
            .expect("thread pool");
        pool.install(|| {
            use rayon::prelude::*;
            cells.par_iter().map(run_cell).collect()
        })
    } else {
        cells.iter().map(run_cell).collect()
    };
    Ok(rows)
}

fn horizon_rank(h: Horizon) -> u8 {
    match h {
        Horizon::Daily => 0,
        Horizon::Monthly => 1,
        Horizon::Yearly => 2,
    }
}

/// `sweep.csv` with one row per cell.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("alpha,horizon,mean_price_eur_mwh,mean_intensity_gco2_kwh,total_flh,status\n");
    for r in rows {
        let status = match &r.error {
            None => "ok".to_string(),
            Some(e) => format!("error: {}", e.replace([',', '\n'], ";")),
        };
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{}\n",
            r.alpha,
            r.horizon.label(),
            r.mean_price,
            r.mean_intensity,
            r.total_flh,
            status
        ));
    }
    out
}

/// Trade-off figure: mean intensity against mean price, one curve per
/// horizon (solid yearly, dashed monthly, dotted daily), α annotated at
/// every point.
pub fn sweep_to_svg(rows: &[SweepRow], title: &str) -> String {
    let mut curves = Vec::new();
    for horizon in [Horizon::Yearly, Horizon::Monthly, Horizon::Daily] {
        let mut points: Vec<(f64, f64, String)> = rows
            .iter()
            .filter(|r| r.horizon == horizon && r.error.is_none())
            .map(|r| (r.mean_price, r.mean_intensity, format!("α={}", r.alpha)))
            .collect();
        if points.is_empty() {
            continue;
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        curves.push(Curve {
            name: horizon.label().to_string(),
            dash: match horizon {
                Horizon::Yearly => "",
                Horizon::Monthly => "9 5",
                Horizon::Daily => "2 4",
            }
            .to_string(),
            points,
        });
    }
    line_plot(title, "mean electricity price [EUR/MWh]", "mean CO2 intensity [gCO2/kWh]", &curves)
}
