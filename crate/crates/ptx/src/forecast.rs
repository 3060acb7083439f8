//! Price and CO2-intensity forecasting by moving-average decomposition.
//!
//! A history is split into trend (centered moving average), seasonal
//! (per-phase mean of the detrended values, mean-removed) and random
//! (whatever is left). Each component is extrapolated separately — trend by
//! an integrated autoregression on its first differences, seasonal by
//! periodic repetition, random by a plain autoregression — and the three
//! extrapolations are summed. The component models are pluggable via
//! [`ComponentForecaster`] so a richer model can be swapped in without
//! touching the pipeline.
//!
//! Forecasts are issued at 10:00 and span [`FORECAST_HORIZON`] hours, so the
//! last 24 entries cover exactly 00:00-24:00 of the following market day.

use thiserror::Error;

use crate::series::{HourlySeries, SeriesError};

/// Operational forecast horizon, hours.
pub const FORECAST_HORIZON: usize = 38;

/// Hour of day (UTC) at which forecasts are issued and scheduling decisions
/// are taken.
pub const ISSUE_HOUR_OF_DAY: i64 = 10;

/// Hour of day (UTC) of the day-ahead bid gate.
pub const BID_GATE_HOUR_OF_DAY: i64 = 12;

/// Minimum history required by [`forecast`]: trailing 28 days plus the 10
/// hours of the issue day.
pub const HISTORY_HOURS: usize = 28 * 24 + ISSUE_HOUR_OF_DAY as usize;

/// Default AR order for the (differenced) trend component.
pub const TREND_AR_ORDER: usize = 3;

/// Default AR order for the random component.
pub const RANDOM_AR_ORDER: usize = 2;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("series too short: {len} values, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },
    #[error("insufficient data to fit AR({order}): {len} values, need at least {min}")]
    InsufficientData { order: usize, len: usize, min: usize },
    #[error("history must end at the issue hour - 1 ({expected}), ends at {found}")]
    HistoryMisaligned { expected: i64, found: i64 },
    #[error("truth series does not cover the forecast window")]
    Coverage(#[from] SeriesError),
}

/// Additive decomposition of an hourly series.
///
/// `trend + seasonal + random` reproduces the input exactly at every index;
/// the trend is only *defined* by the moving average on the interior
/// (`trend_defined` range) and is nearest-filled outside it.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub trend: HourlySeries,
    pub seasonal: HourlySeries,
    pub random: HourlySeries,
    pub period: usize,
    /// Index range (half-open) where the centered moving average is defined.
    pub trend_defined: (usize, usize),
    /// One period of the seasonal pattern; entry `p` applies to absolute
    /// epoch hours with `hour.rem_euclid(period) == p`.
    pub pattern: Vec<f64>,
}

/// Classical decomposition with a centered moving average of window `period`
/// (two-step convention for even windows: the two straddling windows are
/// averaged, i.e. a 2x`period` MA).
pub fn decompose(series: &HourlySeries, period: usize) -> Result<Decomposition, ForecastError> {
    let n = series.len();
    if period < 2 || n < 2 * period {
        return Err(ForecastError::SeriesTooShort { len: n, min: 2 * period.max(2) });
    }
    let x = series.values();
    let half = period / 2;
    let even = period % 2 == 0;

    // Centered MA; for even windows: (0.5*x[i-half] + sum(x[i-half+1..i+half]) + 0.5*x[i+half]) / period
    let lo = half;
    let hi = n - half; // exclusive
    let mut trend = vec![f64::NAN; n];
    for i in lo..hi {
        let t = if even {
            let mut acc = 0.5 * x[i - half] + 0.5 * x[i + half];
            for k in (i - half + 1)..(i + half) {
                acc += x[k];
            }
            acc / period as f64
        } else {
            let mut acc = 0.0;
            for k in (i - half)..=(i + half) {
                acc += x[k];
            }
            acc / period as f64
        };
        trend[i] = t;
    }
    // nearest-fill the undefined edges (flagged via trend_defined)
    for i in 0..lo {
        trend[i] = trend[lo];
    }
    for i in hi..n {
        trend[i] = trend[hi - 1];
    }

    // Per-phase means of detrended interior values, then remove the grand
    // mean so the seasonal pattern sums to zero over one period.
    let mut sums = vec![0.0; period];
    let mut counts = vec![0usize; period];
    for i in lo..hi {
        let phase = (series.start_epoch_hour() + i as i64).rem_euclid(period as i64) as usize;
        sums[phase] += x[i] - trend[i];
        counts[phase] += 1;
    }
    let mut pattern: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    let grand_mean = pattern.iter().sum::<f64>() / period as f64;
    for p in pattern.iter_mut() {
        *p -= grand_mean;
    }

    let seasonal: Vec<f64> = (0..n)
        .map(|i| {
            let phase = (series.start_epoch_hour() + i as i64).rem_euclid(period as i64) as usize;
            pattern[phase]
        })
        .collect();
    let random: Vec<f64> = (0..n).map(|i| x[i] - trend[i] - seasonal[i]).collect();

    let unit = series.unit();
    let start = series.start_epoch_hour();
    Ok(Decomposition {
        trend: HourlySeries::new(start, trend, unit).unwrap(),
        seasonal: HourlySeries::new(start, seasonal, unit).unwrap(),
        random: HourlySeries::new(start, random, unit).unwrap(),
        period,
        trend_defined: (lo, hi),
        pattern,
    })
}

/// Autoregressive model `x_t = intercept + sum_k coeffs[k] * x_{t-1-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArModel {
    pub coeffs: Vec<f64>,
    pub intercept: f64,
}

impl ArModel {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Iterated one-step prediction for `steps` values past the end of
    /// `history`.
    pub fn iterate(&self, history: &[f64], steps: usize) -> Vec<f64> {
        let p = self.coeffs.len();
        let mut tail: Vec<f64> = history.iter().rev().take(p).copied().collect(); // newest first
        let mut out = Vec::with_capacity(steps);
        for _ in 0..steps {
            let mut v = self.intercept;
            for (k, &c) in self.coeffs.iter().enumerate() {
                v += c * tail.get(k).copied().unwrap_or(0.0);
            }
            out.push(v);
            tail.insert(0, v);
            tail.truncate(p.max(1));
        }
        out
    }
}

/// Least-squares AR(p) fit of `x_t` against `(x_{t-1}, ..., x_{t-p}, 1)`.
///
/// Degenerate designs (e.g. a constant series) fall back to an
/// intercept-only model predicting the series mean.
pub fn fit_ar(values: &[f64], order: usize) -> Result<ArModel, ForecastError> {
    let n = values.len();
    let min = (10 * order).max(order + 2);
    if order == 0 || n < min {
        if order == 0 && n >= 1 {
            return Ok(ArModel { coeffs: vec![], intercept: mean(values) });
        }
        return Err(ForecastError::InsufficientData { order, len: n, min });
    }
    let rows = n - order;
    let cols = order + 1;
    // Normal equations on the (lags | 1) design; ridge-free, with a
    // singularity fallback to intercept-only.
    let mut design = nalgebra::DMatrix::<f64>::zeros(rows, cols);
    let mut target = nalgebra::DVector::<f64>::zeros(rows);
    for r in 0..rows {
        let t = r + order;
        for k in 0..order {
            design[(r, k)] = values[t - 1 - k];
        }
        design[(r, order)] = 1.0;
        target[r] = values[t];
    }
    let gram = design.transpose() * &design;
    let rhs = design.transpose() * target;
    let solution = gram.clone().lu().solve(&rhs).filter(|beta| {
        let residual = (&gram * beta - &rhs).amax();
        residual.is_finite() && residual <= 1e-6 * rhs.amax().max(1.0)
    });
    match solution {
        Some(beta) => Ok(ArModel {
            coeffs: beta.iter().take(order).copied().collect(),
            intercept: beta[order],
        }),
        None => Ok(ArModel { coeffs: vec![], intercept: mean(values) }),
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Extrapolates one decomposition component past the end of the history.
pub trait ComponentForecaster {
    fn extrapolate(&self, component: &[f64], steps: usize) -> Result<Vec<f64>, ForecastError>;
}

/// AR on first differences, re-integrated from the last level: the "I" of an
/// integrated autoregression. Captures drifts such as a price ramp exactly.
#[derive(Debug, Clone)]
pub struct IntegratedArForecaster {
    pub order: usize,
}

impl ComponentForecaster for IntegratedArForecaster {
    fn extrapolate(&self, component: &[f64], steps: usize) -> Result<Vec<f64>, ForecastError> {
        if component.len() < 2 {
            return Err(ForecastError::InsufficientData {
                order: self.order,
                len: component.len(),
                min: 2,
            });
        }
        let diffs: Vec<f64> = component.windows(2).map(|w| w[1] - w[0]).collect();
        let model = fit_ar(&diffs, self.order.min(diffs.len().saturating_sub(2) / 10))?;
        let future_diffs = model.iterate(&diffs, steps);
        let mut level = *component.last().unwrap();
        Ok(future_diffs
            .into_iter()
            .map(|d| {
                level += d;
                level
            })
            .collect())
    }
}

/// Plain AR extrapolation for the stationary random component.
#[derive(Debug, Clone)]
pub struct ArForecaster {
    pub order: usize,
}

impl ComponentForecaster for ArForecaster {
    fn extrapolate(&self, component: &[f64], steps: usize) -> Result<Vec<f64>, ForecastError> {
        let order = self.order.min(component.len().saturating_sub(2) / 10);
        let model = fit_ar(component, order)?;
        Ok(model.iterate(component, steps))
    }
}

/// A pair of aligned price/intensity forecasts issued at a 10:00 gate.
#[derive(Debug, Clone)]
pub struct ForecastPair {
    pub price: HourlySeries,
    pub intensity: HourlySeries,
    pub issued_at: i64,
}

impl ForecastPair {
    pub fn horizon(&self) -> usize {
        self.price.len()
    }

    /// The tradable window: the last 24 hours of the forecast, covering
    /// 00:00-24:00 of day D+1 when issued at 10:00 on day D.
    pub fn market_day(&self) -> (HourlySeries, HourlySeries) {
        let len = self.price.len();
        let start = self.price.start_epoch_hour() + (len - 24) as i64;
        (
            self.price.window(start, 24).expect("horizon >= 24"),
            self.intensity.window(start, 24).expect("horizon >= 24"),
        )
    }
}

fn check_history(history: &HourlySeries, issue_hour: i64) -> Result<(), ForecastError> {
    if history.end_epoch_hour() != issue_hour {
        return Err(ForecastError::HistoryMisaligned {
            expected: issue_hour - 1,
            found: history.end_epoch_hour() - 1,
        });
    }
    if history.len() < HISTORY_HOURS {
        return Err(ForecastError::SeriesTooShort { len: history.len(), min: HISTORY_HOURS });
    }
    Ok(())
}

fn forecast_one(
    history: &HourlySeries,
    issue_hour: i64,
    horizon: usize,
    clamp_non_negative: bool,
) -> Result<HourlySeries, ForecastError> {
    check_history(history, issue_hour)?;
    // Fit on the trailing fixed-size window so long simulations stay O(1)
    // per day and early/late days are treated alike.
    let window = history.window(issue_hour - HISTORY_HOURS as i64, HISTORY_HOURS).unwrap();
    let decomp = decompose(&window, 24)?;
    let (lo, hi) = decomp.trend_defined;

    // Trend and random are extrapolated from the last *defined* interior
    // point, bridging the half-window edge before the horizon starts.
    let bridge = window.len() - hi;
    let trend_fc = IntegratedArForecaster { order: TREND_AR_ORDER }
        .extrapolate(&decomp.trend.values()[lo..hi], bridge + horizon)?;
    let random_fc = ArForecaster { order: RANDOM_AR_ORDER }
        .extrapolate(&decomp.random.values()[lo..hi], bridge + horizon)?;

    let sanity = 50.0 * window.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut values = Vec::with_capacity(horizon);
    for step in 0..horizon {
        let hour = issue_hour + step as i64;
        let seasonal = decomp.pattern[hour.rem_euclid(24) as usize];
        let mut v = trend_fc[bridge + step] + seasonal + random_fc[bridge + step];
        // guard against an explosive AR fit on pathological inputs
        v = v.clamp(-sanity, sanity);
        if clamp_non_negative && v < 0.0 {
            v = 0.0;
        }
        values.push(v);
    }
    Ok(HourlySeries::new(issue_hour, values, history.unit()).unwrap())
}

/// Issue a 38-hour-ahead forecast pair from histories ending at
/// `issue_hour - 1`. Intensity forecasts are clamped at zero; prices may go
/// negative.
pub fn forecast(
    history_price: &HourlySeries,
    history_intensity: &HourlySeries,
    issue_hour: i64,
    horizon: usize,
) -> Result<ForecastPair, ForecastError> {
    Ok(ForecastPair {
        price: forecast_one(history_price, issue_hour, horizon, false)?,
        intensity: forecast_one(history_intensity, issue_hour, horizon, true)?,
        issued_at: issue_hour,
    })
}

/// Perfect-foresight forecast: the realized values verbatim.
pub fn ideal_forecast(
    truth_price: &HourlySeries,
    truth_intensity: &HourlySeries,
    issue_hour: i64,
    horizon: usize,
) -> Result<ForecastPair, ForecastError> {
    Ok(ForecastPair {
        price: truth_price.window(issue_hour, horizon)?,
        intensity: truth_intensity.window(issue_hour, horizon)?,
        issued_at: issue_hour,
    })
}
