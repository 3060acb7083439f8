//! Deterministic synthetic market data for demos and verification runs.
//!
//! The generator layers daily, weekly and seasonal cycles with a hash-based
//! noise term, producing a price series and an imperfectly anti-correlated
//! CO2-intensity series. Everything is a pure function of `(seed, hour)`, so
//! fixtures are reproducible across runs and platforms without an RNG state
//! to thread through.

use chrono::NaiveDate;

use crate::controller::MarketBundle;
use crate::series::{epoch_hour_of_date, HourlySeries, Unit};

/// Parameters of the synthetic market.
#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub seed: u64,
    /// Mean price, €/MWh.
    pub price_base: f64,
    /// Daily cycle amplitude, €/MWh.
    pub daily_amp: f64,
    /// Weekly cycle amplitude, €/MWh.
    pub weekly_amp: f64,
    /// Seasonal (annual) cycle amplitude, €/MWh.
    pub seasonal_amp: f64,
    /// Uniform noise half-width, €/MWh.
    pub noise_amp: f64,
    /// Mean intensity, gCO2/kWh.
    pub intensity_base: f64,
    /// How strongly intensity mirrors the price deviation (negative =
    /// anti-correlated). 0 decouples the two series.
    pub coupling: f64,
    /// Extra independent intensity variation, gCO2/kWh.
    pub intensity_own_amp: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            price_base: 42.0,
            daily_amp: 13.0,
            weekly_amp: 7.0,
            seasonal_amp: 6.0,
            noise_amp: 5.0,
            intensity_base: 260.0,
            coupling: -2.0,
            intensity_own_amp: 55.0,
        }
    }
}

fn hash_noise(seed: u64, hour: i64, stream: u64) -> f64 {
    // splitmix64 over (seed, stream, hour) mapped to [-1, 1)
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(hour as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

const TAU: f64 = std::f64::consts::TAU;

/// Price at one epoch hour.
pub fn price_at(cfg: &SynthConfig, hour: i64) -> f64 {
    let h = hour as f64;
    cfg.price_base
        + cfg.daily_amp * (TAU * (h - 7.0) / 24.0).sin()
        + cfg.weekly_amp * (TAU * h / 168.0).sin()
        + cfg.seasonal_amp * (TAU * h / 8760.0).cos()
        + cfg.noise_amp * hash_noise(cfg.seed, hour, 1)
}

/// CO2 intensity at one epoch hour, clamped non-negative.
pub fn intensity_at(cfg: &SynthConfig, hour: i64) -> f64 {
    let price_dev = price_at(cfg, hour) - cfg.price_base;
    let h = hour as f64;
    let own = cfg.intensity_own_amp
        * (0.6 * (TAU * (h - 2.0) / 24.0).sin() + 0.4 * (TAU * h / 8760.0).sin());
    let noise = 0.3 * cfg.intensity_own_amp * hash_noise(cfg.seed, hour, 2);
    (cfg.intensity_base + cfg.coupling * price_dev + own + noise).max(0.0)
}

/// Generate `hours` hours of coupled price/intensity data starting at
/// `start_date` 00:00 UTC.
pub fn synthetic_bundle(cfg: &SynthConfig, start_date: NaiveDate, hours: usize) -> MarketBundle {
    let start = epoch_hour_of_date(start_date);
    let price: Vec<f64> = (0..hours as i64).map(|i| price_at(cfg, start + i)).collect();
    let intensity: Vec<f64> = (0..hours as i64).map(|i| intensity_at(cfg, start + i)).collect();
    MarketBundle {
        price: HourlySeries::new(start, price, Unit::EurPerMwh).unwrap(),
        intensity: HourlySeries::new(start, intensity, Unit::GramsPerKwh).unwrap(),
    }
}

/// The standard verification fixture: enough warm history for a yearly-
/// horizon run over one full simulated year starting `start_date`.
pub fn synthetic_two_years(seed: u64, start_date: NaiveDate) -> MarketBundle {
    let cfg = SynthConfig { seed, ..SynthConfig::default() };
    let warm = 370 * 24;
    let span = 370 * 24;
    let first = start_date - chrono::Days::new(370);
    synthetic_bundle(&cfg, first, warm + span)
}

/// Write a bundle as the two ingestion CSV files (`prices.csv`,
/// `intensity.csv`) under `dir`.
pub fn write_bundle_csvs(bundle: &MarketBundle, dir: &std::path::Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("prices.csv"),
        crate::market::series_to_csv(&bundle.price, "price_eur_mwh"),
    )?;
    std::fs::write(
        dir.join("intensity.csv"),
        crate::market::series_to_csv(&bundle.intensity, "intensity_gco2_kwh"),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_across_calls() {
        let cfg = SynthConfig::default();
        let d = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        let a = synthetic_bundle(&cfg, d, 1000);
        let b = synthetic_bundle(&cfg, d, 1000);
        assert_eq!(a.price.values(), b.price.values());
        assert_eq!(a.intensity.values(), b.intensity.values());
    }

    #[test]
    fn intensity_is_nonnegative_and_anticorrelated() {
        let cfg = SynthConfig::default();
        let d = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
        let bundle = synthetic_bundle(&cfg, d, 24 * 365);
        assert!(bundle.intensity.values().iter().all(|&v| v >= 0.0));
        // sample correlation between price and intensity is negative but not -1
        let p = bundle.price.values();
        let c = bundle.intensity.values();
        let n = p.len() as f64;
        let (mp, mc) = (p.iter().sum::<f64>() / n, c.iter().sum::<f64>() / n);
        let cov: f64 = p.iter().zip(c).map(|(a, b)| (a - mp) * (b - mc)).sum::<f64>() / n;
        let vp: f64 = p.iter().map(|a| (a - mp).powi(2)).sum::<f64>() / n;
        let vc: f64 = c.iter().map(|b| (b - mc).powi(2)).sum::<f64>() / n;
        let corr = cov / (vp * vc).sqrt();
        assert!(corr < -0.1, "corr {corr}");
        assert!(corr > -0.95, "corr {corr} should be imperfect");
    }
}
