//! Day-ahead dispatch demo: schedule the reference electrolyzer against one
//! day of prices/intensities at three different cost/CO2 weightings and show
//! how the purchased hours move.

use ptx::scheduler::{schedule_day, DayProblem, NetworkState};
use ptx::tech::{build_technology, Normalization, TechnologyKind};
use std::collections::BTreeMap;

fn main() {
    let network = build_technology(TechnologyKind::Electrolyzer, &BTreeMap::new()).unwrap();

    // evening price peak, clean windy night
    let price: Vec<f64> =
        (0..24).map(|h| 38.0 + 16.0 * (std::f64::consts::TAU * (h as f64 - 5.0) / 24.0).sin()).collect();
    let intensity: Vec<f64> =
        (0..24).map(|h| 250.0 - 140.0 * (std::f64::consts::TAU * (h as f64 + 3.0) / 24.0).sin()).collect();
    let norm = Normalization { price_ref: 40.0, intensity_ref: 250.0 };

    println!("{:>5} {:>8} {:>10}", "hour", "price", "intensity");
    for h in (0..24).step_by(4) {
        println!("{h:>5} {:>8.1} {:>10.1}", price[h], intensity[h]);
    }

    for alpha in [0.0, 0.5, 1.0] {
        let problem = DayProblem {
            network: network.clone(),
            start_hour: 0,
            price: price.clone(),
            intensity: intensity.clone(),
            g_e: 8.0,
            alpha,
            norm,
            prev: NetworkState::fresh(&network),
        };
        let schedule = schedule_day(&problem).unwrap();
        let bar: String = schedule.g[1..]
            .iter()
            .map(|&g| match g {
                g if g > 0.75 => '#',
                g if g > 0.4 => '+',
                g if g > 1e-6 => '.',
                _ => ' ',
            })
            .collect();
        println!(
            "alpha {alpha:3.1}  |{bar}|  cost {:7.2} EUR  co2 {:9.0} g",
            schedule.forecast_cost, schedule.forecast_co2
        );
    }
    println!("(8 MWh budget; # full, + part, . low power)");
}
