//! Plant models: the three power-to-X technology networks and the weighted
//! marginal-cost blending used by the scheduler.
//!
//! Three reference plants are provided:
//!
//! * `electrolyzer` — a stand-alone 1 MW electrolyzer buying from the grid.
//! * `methanation` — a 6 MW electrolyzer feeding a 6 MWh hydrogen store
//!   that supplies a methanation reactor.
//! * `heatpump` — a COP-3 heat pump plus gas boiler and heat store serving a
//!   uniform heat load.
//!
//! Ramp limits are in MW per hour of the converter's *input*. A raw
//! `ramp_up`/`ramp_start_up` of `0` means "no limit" (an upward limit of zero
//! would mean the unit can never produce); a raw `ramp_down` of `0` is kept
//! literal ("no downward modulation"), with instantaneous shutdown allowed
//! only where `shutdown_exempt` is set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::HourlySeries;

#[derive(Debug, Error)]
pub enum TechError {
    #[error("unknown parameter {0:?}")]
    UnknownParameter(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

/// One energy converter (electrolyzer, reactor, heat pump, boiler).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    /// Output per unit input; a heat pump COP may exceed 1.
    pub efficiency: f64,
    /// Nominal input power, MW.
    pub p_nom: f64,
    /// Max increase while running, MW/h. 0 = unlimited.
    pub ramp_up: f64,
    /// Max decrease while running, MW/h. 0 = frozen (no downward modulation).
    pub ramp_down: f64,
    /// Max level reached on an off->on transition, MW/h. 0 = unlimited.
    pub ramp_start_up: f64,
    /// Minimum consecutive on-hours once started.
    pub min_up_time: u32,
    /// Minimum dispatch while on, fraction of `p_nom`.
    pub min_part_load: f64,
    /// Whether dropping straight to zero is exempt from `ramp_down`.
    pub shutdown_exempt: bool,
}

impl ConverterParams {
    pub fn validate(&self, name: &str) -> Result<(), TechError> {
        let fail = |msg: String| Err(TechError::InvariantViolation(format!("{name}: {msg}")));
        if !(self.efficiency > 0.0 && self.efficiency <= 3.5) {
            return fail(format!("efficiency {} outside (0, 3.5]", self.efficiency));
        }
        if !(self.p_nom > 0.0) {
            return fail(format!("p_nom {} must be > 0", self.p_nom));
        }
        for (field, v) in [
            ("ramp_up", self.ramp_up),
            ("ramp_down", self.ramp_down),
            ("ramp_start_up", self.ramp_start_up),
        ] {
            if !(v >= 0.0) {
                return fail(format!("{field} {v} must be >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.min_part_load) {
            return fail(format!("min_part_load {} outside [0, 1]", self.min_part_load));
        }
        Ok(())
    }

    /// Effective upward ramp, `None` = unlimited.
    pub fn effective_ramp_up(&self) -> Option<f64> {
        (self.ramp_up > 0.0).then_some(self.ramp_up)
    }

    /// Effective start-up ramp, `None` = unlimited.
    pub fn effective_ramp_start_up(&self) -> Option<f64> {
        (self.ramp_start_up > 0.0).then_some(self.ramp_start_up)
    }

    /// Downward ramp is always literal; zero freezes downward modulation.
    pub fn effective_ramp_down(&self) -> f64 {
        self.ramp_down
    }
}

/// Energy store attached to a converter chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoreParams {
    /// MWh.
    pub capacity: f64,
    /// Round-trip efficiency, applied on discharge.
    pub efficiency: f64,
    /// MWh at the start of the simulation.
    pub initial_level: f64,
}

impl StoreParams {
    pub fn validate(&self, name: &str) -> Result<(), TechError> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(TechError::InvariantViolation(format!(
                "{name}: efficiency {} outside (0, 1]",
                self.efficiency
            )));
        }
        if !(self.capacity >= 0.0) || !(0.0..=self.capacity).contains(&self.initial_level) {
            return Err(TechError::InvariantViolation(format!(
                "{name}: initial level {} outside [0, {}]",
                self.initial_level, self.capacity
            )));
        }
        Ok(())
    }
}

/// Fixed-price fuel burned by a boiler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelParams {
    /// €/MWh fuel.
    pub price: f64,
    /// gCO2/kWh fuel.
    pub emission: f64,
}

impl FuelParams {
    pub fn validate(&self) -> Result<(), TechError> {
        if !(self.price >= 0.0) || !(self.emission >= 0.0) {
            return Err(TechError::InvariantViolation(format!(
                "fuel price {} and emission {} must be >= 0",
                self.price, self.emission
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TechnologyKind {
    Electrolyzer,
    Methanation,
    HeatPump,
}

impl TechnologyKind {
    pub fn parse(s: &str) -> Result<Self, TechError> {
        match s.to_ascii_lowercase().as_str() {
            "electrolyzer" => Ok(TechnologyKind::Electrolyzer),
            "methanation" => Ok(TechnologyKind::Methanation),
            "heatpump" | "heat_pump" | "heat-pump" => Ok(TechnologyKind::HeatPump),
            other => Err(TechError::UnknownParameter(format!("technology {other:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TechnologyKind::Electrolyzer => "electrolyzer",
            TechnologyKind::Methanation => "methanation",
            TechnologyKind::HeatPump => "heatpump",
        }
    }
}

/// Converter names used by the built-in networks.
pub mod converters {
    pub const ELECTROLYZER: &str = "electrolyzer";
    pub const REACTOR: &str = "reactor";
    pub const HEAT_PUMP: &str = "heat_pump";
    pub const BOILER: &str = "boiler";
    pub const H2_STORE: &str = "h2_store";
    pub const HEAT_STORE: &str = "heat_store";
}

/// One parameterized plant as consumed by the scheduler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechnologyNetwork {
    pub kind: TechnologyKind,
    pub converters: BTreeMap<String, ConverterParams>,
    pub stores: BTreeMap<String, StoreParams>,
    pub fuel: Option<FuelParams>,
    /// Uniform heat demand in MWh/h for the heat pump plant; fixed product
    /// sale price (€/MWh product) for the others. The sale price never
    /// influences hour choice.
    pub product_load: f64,
}

impl TechnologyNetwork {
    /// The converter that buys from the day-ahead market.
    pub fn grid_converter_name(&self) -> &'static str {
        match self.kind {
            TechnologyKind::Electrolyzer | TechnologyKind::Methanation => converters::ELECTROLYZER,
            TechnologyKind::HeatPump => converters::HEAT_PUMP,
        }
    }

    pub fn grid_converter(&self) -> &ConverterParams {
        &self.converters[self.grid_converter_name()]
    }

    /// Nominal grid-facing power, MW; full-load hours are defined against it.
    pub fn p_nom(&self) -> f64 {
        self.grid_converter().p_nom
    }

    pub fn validate(&self) -> Result<(), TechError> {
        for (name, c) in &self.converters {
            c.validate(name)?;
        }
        for (name, s) in &self.stores {
            s.validate(name)?;
        }
        if let Some(fuel) = &self.fuel {
            fuel.validate()?;
        }
        let expect = |cond: bool, msg: &str| {
            if cond {
                Ok(())
            } else {
                Err(TechError::InvariantViolation(format!("{}: {msg}", self.kind.label())))
            }
        };
        match self.kind {
            TechnologyKind::Electrolyzer => {
                expect(self.converters.len() == 1, "exactly one converter")?;
                expect(self.converters.contains_key(converters::ELECTROLYZER), "electrolyzer converter")?;
                expect(self.stores.is_empty(), "no stores")?;
            }
            TechnologyKind::Methanation => {
                expect(self.converters.len() == 2, "exactly two converters")?;
                expect(self.converters.contains_key(converters::ELECTROLYZER), "electrolyzer converter")?;
                expect(self.converters.contains_key(converters::REACTOR), "reactor converter")?;
                expect(
                    self.stores.len() == 1 && self.stores.contains_key(converters::H2_STORE),
                    "one hydrogen store",
                )?;
            }
            TechnologyKind::HeatPump => {
                expect(self.converters.len() == 2, "exactly two converters")?;
                expect(self.converters.contains_key(converters::HEAT_PUMP), "heat pump converter")?;
                expect(self.converters.contains_key(converters::BOILER), "boiler converter")?;
                expect(
                    self.stores.len() == 1 && self.stores.contains_key(converters::HEAT_STORE),
                    "one heat store",
                )?;
                expect(self.fuel.is_some(), "boiler fuel parameters")?;
                expect(self.product_load > 0.0, "positive heat load")?;
            }
        }
        Ok(())
    }
}

fn electrolyzer_defaults() -> ConverterParams {
    ConverterParams {
        efficiency: 1.0,
        p_nom: 1.0,
        ramp_up: 0.3,
        ramp_down: 0.3,
        ramp_start_up: 0.15,
        min_up_time: 2,
        min_part_load: 0.0,
        shutdown_exempt: false,
    }
}

fn default_network(kind: TechnologyKind) -> TechnologyNetwork {
    match kind {
        TechnologyKind::Electrolyzer => TechnologyNetwork {
            kind,
            converters: [(converters::ELECTROLYZER.to_string(), electrolyzer_defaults())]
                .into_iter()
                .collect(),
            stores: BTreeMap::new(),
            fuel: None,
            product_load: 0.0,
        },
        TechnologyKind::Methanation => TechnologyNetwork {
            kind,
            converters: [
                (
                    converters::ELECTROLYZER.to_string(),
                    ConverterParams {
                        efficiency: 0.70,
                        p_nom: 6.0,
                        ..electrolyzer_defaults()
                    },
                ),
                (
                    converters::REACTOR.to_string(),
                    ConverterParams {
                        efficiency: 0.77,
                        // matches the electrolyzer's maximum hydrogen output
                        // (6 MW * 0.70); the source tables leave it open
                        p_nom: 4.2,
                        ramp_up: 0.04,
                        ramp_down: 0.0,
                        ramp_start_up: 0.01,
                        min_up_time: 2,
                        min_part_load: 0.0,
                        shutdown_exempt: true,
                    },
                ),
            ]
            .into_iter()
            .collect(),
            stores: [(
                converters::H2_STORE.to_string(),
                StoreParams { capacity: 6.0, efficiency: 1.0, initial_level: 0.0 },
            )]
            .into_iter()
            .collect(),
            fuel: None,
            product_load: 0.0,
        },
        TechnologyKind::HeatPump => TechnologyNetwork {
            kind,
            converters: [
                (
                    converters::HEAT_PUMP.to_string(),
                    ConverterParams {
                        efficiency: 3.0,
                        p_nom: 1.0,
                        ramp_up: 0.0, // instant warm start
                        ramp_down: 0.25,
                        ramp_start_up: 0.0,
                        min_up_time: 2,
                        min_part_load: 0.0,
                        shutdown_exempt: false,
                    },
                ),
                (
                    converters::BOILER.to_string(),
                    ConverterParams {
                        efficiency: 0.90,
                        p_nom: 1.0,
                        ramp_up: 0.004,
                        ramp_down: 0.016,
                        ramp_start_up: 0.1,
                        min_up_time: 2,
                        min_part_load: 0.0,
                        shutdown_exempt: false,
                    },
                ),
            ]
            .into_iter()
            .collect(),
            stores: [(
                converters::HEAT_STORE.to_string(),
                // capacity and load are not tabulated anywhere; sized so the
                // plant clears a 2 MWh/h load at daily budgets near 16 h
                StoreParams { capacity: 12.0, efficiency: 0.90, initial_level: 0.0 },
            )]
            .into_iter()
            .collect(),
            fuel: Some(FuelParams { price: 20.1, emission: 201.0 }),
            product_load: 2.0,
        },
    }
}

/// Build a technology network from its defaults plus `overrides`.
///
/// Override keys are dotted paths: `electrolyzer.ramp_up`,
/// `h2_store.capacity`, `fuel.price`, `product_load`, ... Booleans are set
/// with 0/1.
pub fn build_technology(
    kind: TechnologyKind,
    overrides: &BTreeMap<String, f64>,
) -> Result<TechnologyNetwork, TechError> {
    let mut network = default_network(kind);
    for (key, &value) in overrides {
        apply_override(&mut network, key, value)?;
    }
    network.validate()?;
    Ok(network)
}

fn apply_override(network: &mut TechnologyNetwork, key: &str, value: f64) -> Result<(), TechError> {
    if key == "product_load" {
        network.product_load = value;
        return Ok(());
    }
    let (head, field) = key
        .split_once('.')
        .ok_or_else(|| TechError::UnknownParameter(key.to_string()))?;
    if head == "fuel" {
        let fuel = network
            .fuel
            .as_mut()
            .ok_or_else(|| TechError::UnknownParameter(key.to_string()))?;
        match field {
            "price" => fuel.price = value,
            "emission" => fuel.emission = value,
            _ => return Err(TechError::UnknownParameter(key.to_string())),
        }
        return Ok(());
    }
    if let Some(c) = network.converters.get_mut(head) {
        match field {
            "efficiency" => c.efficiency = value,
            "p_nom" => c.p_nom = value,
            "ramp_up" => c.ramp_up = value,
            "ramp_down" => c.ramp_down = value,
            "ramp_start_up" => c.ramp_start_up = value,
            "min_up_time" => c.min_up_time = value as u32,
            "min_part_load" => c.min_part_load = value,
            "shutdown_exempt" => c.shutdown_exempt = value != 0.0,
            _ => return Err(TechError::UnknownParameter(key.to_string())),
        }
        return Ok(());
    }
    if let Some(s) = network.stores.get_mut(head) {
        match field {
            "capacity" => s.capacity = value,
            "efficiency" => s.efficiency = value,
            "initial_level" => s.initial_level = value,
            _ => return Err(TechError::UnknownParameter(key.to_string())),
        }
        return Ok(());
    }
    Err(TechError::UnknownParameter(key.to_string()))
}

/// Normalization references that make €/MWh and gCO2/kWh commensurable in
/// the weighted objective. Frozen per scheduling day and recorded in the
/// simulation ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub price_ref: f64,
    pub intensity_ref: f64,
}

impl Normalization {
    /// No scaling; α then weighs raw units against each other.
    pub fn identity() -> Self {
        Normalization { price_ref: 1.0, intensity_ref: 1.0 }
    }

    /// Trailing mean absolute values of the two histories (falling back to
    /// 1.0 on all-zero data so the blend stays finite).
    pub fn from_history(price: &HourlySeries, intensity: &HourlySeries) -> Self {
        let guard = |v: f64| if v > 0.0 { v } else { 1.0 };
        Normalization {
            price_ref: guard(price.mean_abs()),
            intensity_ref: guard(intensity.mean_abs()),
        }
    }
}

/// The blended per-MWh cost of Eq-style co-optimization:
/// `α·intensity/intensity_ref + (1-α)·price/price_ref`.
pub fn weighted_marginal_cost(alpha: f64, price: f64, intensity: f64, norm: &Normalization) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    alpha * intensity / norm.intensity_ref + (1.0 - alpha) * price / norm.price_ref
}

/// Blended cost of one MWh of boiler fuel with its fixed price and emission.
pub fn boiler_cost(alpha: f64, fuel: &FuelParams, norm: &Normalization) -> f64 {
    weighted_marginal_cost(alpha, fuel.price, fuel.emission, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn electrolyzer_defaults_match_reference_table() {
        let t = build_technology(TechnologyKind::Electrolyzer, &BTreeMap::new()).unwrap();
        let c = &t.converters[converters::ELECTROLYZER];
        assert_eq!(c.efficiency, 1.0);
        assert_eq!(c.p_nom, 1.0);
        assert_eq!(c.ramp_up, 0.3);
        assert_eq!(c.ramp_down, 0.3);
        assert_eq!(c.ramp_start_up, 0.15);
        assert_eq!(c.min_up_time, 2);
        assert!(t.stores.is_empty());
        assert!(t.fuel.is_none());
    }

    #[test]
    fn methanation_defaults_match_reference_table() {
        let t = build_technology(TechnologyKind::Methanation, &BTreeMap::new()).unwrap();
        let e = &t.converters[converters::ELECTROLYZER];
        assert_eq!(e.efficiency, 0.70);
        assert_eq!(e.p_nom, 6.0);
        assert_eq!(e.ramp_up, 0.3);
        assert_eq!(e.ramp_down, 0.3);
        assert_eq!(e.ramp_start_up, 0.15);
        assert_eq!(e.min_up_time, 2);
        let r = &t.converters[converters::REACTOR];
        assert_eq!(r.efficiency, 0.77);
        assert_eq!(r.ramp_up, 0.04);
        assert_eq!(r.ramp_down, 0.0);
        assert_eq!(r.ramp_start_up, 0.01);
        assert_eq!(r.min_up_time, 2);
        assert!(r.shutdown_exempt);
        assert_eq!(t.stores[converters::H2_STORE].capacity, 6.0);
    }

    #[test]
    fn heatpump_defaults_match_reference_table() {
        let t = build_technology(TechnologyKind::HeatPump, &BTreeMap::new()).unwrap();
        let hp = &t.converters[converters::HEAT_PUMP];
        assert_eq!(hp.efficiency, 3.0);
        assert_eq!(hp.p_nom, 1.0);
        assert_eq!(hp.ramp_up, 0.0);
        assert_eq!(hp.ramp_down, 0.25);
        assert_eq!(hp.ramp_start_up, 0.0);
        assert_eq!(hp.min_up_time, 2);
        assert_eq!(hp.effective_ramp_up(), None);
        let b = &t.converters[converters::BOILER];
        assert_eq!(b.efficiency, 0.90);
        assert_eq!(b.ramp_up, 0.004);
        assert_eq!(b.ramp_down, 0.016);
        assert_eq!(b.ramp_start_up, 0.1);
        let fuel = t.fuel.unwrap();
        assert_eq!(fuel.price, 20.1);
        assert_eq!(fuel.emission, 201.0);
        assert_eq!(t.stores[converters::HEAT_STORE].efficiency, 0.90);
    }

    #[test]
    fn overrides_and_unknown_parameters() {
        let mut ov = BTreeMap::new();
        ov.insert("electrolyzer.p_nom".to_string(), 2.5);
        ov.insert("electrolyzer.ramp_up".to_string(), 0.8);
        let t = build_technology(TechnologyKind::Electrolyzer, &ov).unwrap();
        assert_eq!(t.grid_converter().p_nom, 2.5);
        assert_eq!(t.grid_converter().ramp_up, 0.8);

        let mut bad = BTreeMap::new();
        bad.insert("electrolyzer.voltage".to_string(), 1.0);
        assert!(matches!(
            build_technology(TechnologyKind::Electrolyzer, &bad),
            Err(TechError::UnknownParameter(_))
        ));

        let mut invalid = BTreeMap::new();
        invalid.insert("electrolyzer.efficiency".to_string(), -0.5);
        assert!(matches!(
            build_technology(TechnologyKind::Electrolyzer, &invalid),
            Err(TechError::InvariantViolation(_))
        ));
    }

    #[test]
    fn topology_invariants_hold_after_overrides() {
        let mut ov = BTreeMap::new();
        ov.insert("h2_store.capacity".to_string(), 9.0);
        ov.insert("reactor.efficiency".to_string(), 0.8);
        let t = build_technology(TechnologyKind::Methanation, &ov).unwrap();
        t.validate().unwrap();
        assert_eq!(t.stores[converters::H2_STORE].capacity, 9.0);
    }

    #[test]
    fn weighted_cost_endpoints_and_affinity() {
        let norm = Normalization { price_ref: 40.0, intensity_ref: 200.0 };
        let (p, c) = (55.0, 320.0);
        assert_relative_eq!(weighted_marginal_cost(0.0, p, c, &norm), p / 40.0);
        assert_relative_eq!(weighted_marginal_cost(1.0, p, c, &norm), c / 200.0);
        // affine in alpha: midpoint equals mean of endpoints
        let mid = weighted_marginal_cost(0.5, p, c, &norm);
        assert_relative_eq!(
            mid,
            0.5 * (weighted_marginal_cost(0.0, p, c, &norm) + weighted_marginal_cost(1.0, p, c, &norm)),
            epsilon = 1e-12
        );
        // both at their reference: blend is exactly 1
        assert_relative_eq!(weighted_marginal_cost(0.5, 40.0, 200.0, &norm), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn boiler_cost_blends_fuel_terms() {
        let fuel = FuelParams { price: 20.1, emission: 201.0 };
        let id = Normalization::identity();
        assert_relative_eq!(boiler_cost(0.0, &fuel, &id), 20.1);
        assert_relative_eq!(boiler_cost(1.0, &fuel, &id), 201.0);
        assert_relative_eq!(boiler_cost(0.5, &fuel, &id), 0.5 * (20.1 + 201.0));

        let norm = Normalization { price_ref: 20.1, intensity_ref: 201.0 };
        assert_relative_eq!(boiler_cost(0.5, &fuel, &norm), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn normalization_guards_zero_data() {
        use crate::series::Unit;
        let z = HourlySeries::constant(0, 0.0, 10, Unit::EurPerMwh);
        let c = HourlySeries::constant(0, 0.0, 10, Unit::GramsPerKwh);
        let n = Normalization::from_history(&z, &c);
        assert_eq!(n.price_ref, 1.0);
        assert_eq!(n.intensity_ref, 1.0);
    }
}
