//! Forecasting demo: decompose a synthetic price history and issue the
//! 38-hour-ahead forecast that a bidding day starts with.

use chrono::NaiveDate;
use ptx::forecast::{decompose, forecast, FORECAST_HORIZON, ISSUE_HOUR_OF_DAY};
use ptx::series::epoch_hour_of_date;
use ptx::synth::{synthetic_bundle, SynthConfig};

fn main() {
    let cfg = SynthConfig::default();
    let start = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let data = synthetic_bundle(&cfg, start, 40 * 24);

    // issue at 10:00 on day 35
    let issue = epoch_hour_of_date(start) + 35 * 24 + ISSUE_HOUR_OF_DAY;
    let history = data.price.window(issue - 30 * 24, 30 * 24).unwrap();

    let parts = decompose(&history, 24).unwrap();
    println!(
        "decomposition of the trailing month: trend span {:?}, seasonal amplitude {:.2} EUR/MWh",
        parts.trend_defined,
        parts.pattern.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    );

    let hist_p = data.price.window(issue - 29 * 24, 29 * 24).unwrap();
    let hist_c = data.intensity.window(issue - 29 * 24, 29 * 24).unwrap();
    let pair = forecast(&hist_p, &hist_c, issue, FORECAST_HORIZON).unwrap();

    let (price24, intensity24) = pair.market_day();
    println!("\nmarket day D+1 (the tradable window):");
    println!("{:>4}  {:>10}  {:>10}  {:>10}", "hour", "forecast", "actual", "error");
    let mut mae = 0.0;
    for (i, (h, v)) in price24.iter().enumerate() {
        let actual = data.price.at(h).unwrap();
        mae += (v - actual).abs();
        if i % 4 == 0 {
            println!("{:>4}  {:>10.2}  {:>10.2}  {:>10.2}", i, v, actual, v - actual);
        }
    }
    println!("price MAE over D+1: {:.2} EUR/MWh", mae / 24.0);
    let _ = intensity24;
}
