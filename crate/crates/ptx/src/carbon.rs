//! Consumption-based CO2 intensity by flow tracing.
//!
//! For every hour, each area's intensity `q_a` (gCO2/kWh) satisfies
//!
//! ```text
//! q_a * (generation_a + sum_b imports_{b->a})
//!     = sum_tech generation_{a,tech} * e_tech + sum_b imports_{b->a} * q_b
//! ```
//!
//! i.e. consumption and exports draw from the area's inflow-proportional mix,
//! and exports carry the exporting area's mixed intensity onwards. Opposed
//! flows between a pair of areas are netted before solving, which removes
//! artificial two-cycles and keeps the system uniquely solvable whenever every
//! area is reachable from some injection.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::market::{EmissionFactorTable, GridSnapshot, MarketError};
use crate::series::{HourlySeries, Unit};

/// Maximum acceptable relative residual of the solved linear system.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("hour {hour} not covered by snapshot")]
    HourNotCovered { hour: i64 },
    #[error("unknown area {0:?}")]
    UnknownArea(String),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error("area {area} has zero inflow but positive consumption {consumption} at hour {hour}")]
    DarkAreaConsuming { area: String, consumption: f64, hour: i64 },
    #[error("singular flow-tracing system at hour {hour} (cyclic flow with zero net injection?)")]
    SingularSystem { hour: i64 },
    #[error("flow-tracing residual {residual:.3e} exceeds {tolerance:.1e} at hour {hour}")]
    ResidualTooLarge { residual: f64, tolerance: f64, hour: i64 },
}

/// Intensities for all areas at one hour plus the solve residual.
#[derive(Debug, Clone)]
pub struct IntensityResult {
    /// gCO2/kWh per area, in snapshot area order.
    pub intensity: Vec<f64>,
    /// Maximum relative residual of the linear system.
    pub residual: f64,
}

/// Solve the flow-tracing system for one hour.
pub fn trace_intensity(
    snapshot: &GridSnapshot,
    factors: &EmissionFactorTable,
    epoch_hour: i64,
) -> Result<IntensityResult, TraceError> {
    let h = snapshot
        .hour_index(epoch_hour)
        .ok_or(TraceError::HourNotCovered { hour: epoch_hour })?;
    factors.check_covers(snapshot)?;

    let na = snapshot.areas().len();
    let nt = snapshot.technologies().len();

    // Net opposed flows: net[f][t] = max(flow(f,t) - flow(t,f), 0)
    let mut net = vec![0.0; na * na];
    for f in 0..na {
        for t in 0..na {
            if f == t {
                continue;
            }
            let d = snapshot.flow_mwh(h, f, t) - snapshot.flow_mwh(h, t, f);
            if d > 0.0 {
                net[f * na + t] = d;
            }
        }
    }

    let gen_total: Vec<f64> = (0..na)
        .map(|a| (0..nt).map(|t| snapshot.generation_mwh(h, a, t)).sum())
        .collect();
    let emissions: Vec<f64> = (0..na)
        .map(|a| {
            (0..nt)
                .map(|t| {
                    snapshot.generation_mwh(h, a, t)
                        * factors.factor(&snapshot.technologies()[t]).unwrap()
                })
                .sum()
        })
        .collect();

    let mut m = DMatrix::<f64>::zeros(na, na);
    let mut rhs = DVector::<f64>::zeros(na);
    for a in 0..na {
        let imports: f64 = (0..na).map(|b| net[b * na + a]).sum();
        let inflow = gen_total[a] + imports;
        if inflow <= 0.0 {
            let cons = snapshot.consumption_mwh(h, a);
            if cons > 0.0 {
                return Err(TraceError::DarkAreaConsuming {
                    area: snapshot.areas()[a].clone(),
                    consumption: cons,
                    hour: epoch_hour,
                });
            }
            // dark area: q_a = 0 by convention
            m[(a, a)] = 1.0;
            rhs[a] = 0.0;
            continue;
        }
        m[(a, a)] = inflow;
        for b in 0..na {
            if b != a {
                m[(a, b)] -= net[b * na + a];
            }
        }
        rhs[a] = emissions[a];
    }

    let lu = m.clone().lu();
    let q = lu
        .solve(&rhs)
        .ok_or(TraceError::SingularSystem { hour: epoch_hour })?;

    let residual_vec = &m * &q - &rhs;
    let scale = rhs.amax().max(1.0);
    let residual = residual_vec.amax() / scale;
    if !residual.is_finite() || residual > RESIDUAL_TOLERANCE {
        return Err(TraceError::ResidualTooLarge {
            residual,
            tolerance: RESIDUAL_TOLERANCE,
            hour: epoch_hour,
        });
    }

    // Clean off rounding dust; true intensities are non-negative for an
    // M-matrix system with non-negative emissions.
    let intensity = q.iter().map(|&v| if v < 0.0 && v > -1e-9 { 0.0 } else { v }).collect();
    Ok(IntensityResult { intensity, residual })
}

/// Per-hour intensity series for one area over the whole snapshot range.
pub fn intensity_series(
    snapshot: &GridSnapshot,
    factors: &EmissionFactorTable,
    area: &str,
) -> Result<HourlySeries, TraceError> {
    let idx = snapshot
        .area_index(area)
        .ok_or_else(|| TraceError::UnknownArea(area.to_string()))?;
    let mut values = Vec::with_capacity(snapshot.hours());
    for h in 0..snapshot.hours() {
        let hour = snapshot.start_epoch_hour() + h as i64;
        let result = trace_intensity(snapshot, factors, hour)?;
        values.push(result.intensity[idx]);
    }
    Ok(HourlySeries::new(snapshot.start_epoch_hour(), values, Unit::GramsPerKwh)
        .expect("snapshot has at least one hour"))
}

/// Solve every hour for every area; rows in `timestamp_utc,area,intensity_gco2_kwh`
/// order, area-major within each hour.
pub fn intensity_table(
    snapshot: &GridSnapshot,
    factors: &EmissionFactorTable,
) -> Result<Vec<(i64, String, f64)>, TraceError> {
    let mut rows = Vec::with_capacity(snapshot.hours() * snapshot.areas().len());
    for h in 0..snapshot.hours() {
        let hour = snapshot.start_epoch_hour() + h as i64;
        let result = trace_intensity(snapshot, factors, hour)?;
        for (a, area) in snapshot.areas().iter().enumerate() {
            rows.push((hour, area.clone(), result.intensity[a]));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn factors(pairs: &[(&str, f64)]) -> EmissionFactorTable {
        let map: BTreeMap<String, f64> =
            pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        EmissionFactorTable::new(map).unwrap()
    }

    fn single_area_wind() -> GridSnapshot {
        GridSnapshot::from_dense(
            0,
            vec!["DK".into()],
            vec!["wind".into()],
            vec![100.0],
            vec![0.0],
            vec![100.0],
        )
        .unwrap()
    }

    #[test]
    fn isolated_area_inherits_factor() {
        let snap = single_area_wind();
        let res = trace_intensity(&snap, &factors(&[("wind", 12.0)]), 0).unwrap();
        assert_relative_eq!(res.intensity[0], 12.0, max_relative = 1e-12);
        assert!(res.residual <= RESIDUAL_TOLERANCE);
    }

    /// Hand-solved 2x2 system: A all coal, B half wind half import from A.
    #[test]
    fn two_area_hand_example() {
        let snap = GridSnapshot::from_dense(
            0,
            vec!["A".into(), "B".into()],
            vec!["coal".into(), "wind".into()],
            // [h][area][tech]: A: coal 100, wind 0; B: coal 0, wind 50
            vec![100.0, 0.0, 0.0, 50.0],
            // [h][from][to]: A->B = 50
            vec![0.0, 50.0, 0.0, 0.0],
            vec![50.0, 100.0],
        )
        .unwrap();
        let res = trace_intensity(&snap, &factors(&[("coal", 1000.0), ("wind", 0.0)]), 0).unwrap();
        assert_relative_eq!(res.intensity[0], 1000.0, max_relative = 1e-12);
        assert_relative_eq!(res.intensity[1], 500.0, max_relative = 1e-12);
    }

    /// Symmetric cross-exports with identical mixes: both areas end up at the
    /// production-mix intensity. Oracle: fixed-point iteration to convergence.
    #[test]
    fn symmetric_cycle_matches_fixed_point() {
        // each area: 60 gas + 40 wind, exports 30 to the other, consumes 100
        let snap = GridSnapshot::from_dense(
            0,
            vec!["A".into(), "B".into()],
            vec!["gas".into(), "wind".into()],
            vec![60.0, 40.0, 60.0, 40.0],
            vec![0.0, 30.0, 30.0, 0.0],
            vec![100.0, 100.0],
        )
        .unwrap();
        let table = factors(&[("gas", 400.0), ("wind", 10.0)]);
        let res = trace_intensity(&snap, &table, 0).unwrap();

        // Fixed-point oracle on the *gross* flow equations.
        let emis = 60.0 * 400.0 + 40.0 * 10.0;
        let mut q = [0.0f64; 2];
        for _ in 0..200 {
            let q_new = [
                (emis + 30.0 * q[1]) / (100.0 + 30.0),
                (emis + 30.0 * q[0]) / (100.0 + 30.0),
            ];
            q = q_new;
        }
        let mix = emis / 100.0;
        assert_relative_eq!(q[0], mix, max_relative = 1e-9);
        assert_relative_eq!(res.intensity[0], mix, max_relative = 1e-9);
        assert_relative_eq!(res.intensity[1], mix, max_relative = 1e-9);
    }

    #[test]
    fn dark_area_conventions() {
        // B generates nothing, imports nothing, consumes nothing -> q_B = 0
        let snap = GridSnapshot::from_dense(
            0,
            vec!["A".into(), "B".into()],
            vec!["wind".into()],
            vec![100.0, 0.0],
            vec![0.0; 4],
            vec![100.0, 0.0],
        )
        .unwrap();
        let res = trace_intensity(&snap, &factors(&[("wind", 12.0)]), 0).unwrap();
        assert_eq!(res.intensity[1], 0.0);

        // same but B consumes -> data error
        let snap = GridSnapshot::from_dense(
            0,
            vec!["A".into(), "B".into()],
            vec!["wind".into()],
            vec![100.0, 0.0],
            vec![0.0; 4],
            vec![100.0, 5.0],
        )
        .unwrap();
        assert!(matches!(
            trace_intensity(&snap, &factors(&[("wind", 12.0)]), 0),
            Err(TraceError::DarkAreaConsuming { .. })
        ));
    }

    #[test]
    fn zero_injection_cycle_is_singular() {
        // A->B->C->A carousel with no generation anywhere but positive flows;
        // netting cannot cancel a 3-cycle, and no row pins any q.
        let snap = GridSnapshot::from_dense(
            0,
            vec!["A".into(), "B".into(), "C".into()],
            vec!["wind".into()],
            vec![0.0; 3],
            vec![
                0.0, 10.0, 0.0, //
                0.0, 0.0, 10.0, //
                10.0, 0.0, 0.0,
            ],
            vec![0.0; 3],
        )
        .unwrap();
        // All areas have inflow (imports) > 0, zero consumption, zero
        // generation: the system matrix is singular.
        let err = trace_intensity(&snap, &factors(&[("wind", 12.0)]), 0).unwrap_err();
        assert!(
            matches!(err, TraceError::SingularSystem { .. })
                || matches!(err, TraceError::ResidualTooLarge { .. }),
            "got {err:?}"
        );
    }

    #[test]
    fn missing_factor_is_reported() {
        let snap = single_area_wind();
        let err = trace_intensity(&snap, &factors(&[("coal", 900.0)]), 0).unwrap_err();
        assert!(matches!(err, TraceError::Market(MarketError::MissingFactor { .. })));
    }

    #[test]
    fn series_matches_per_hour_solves_and_steps() {
        // single area switching coal -> wind at hour 2
        let snap = GridSnapshot::from_dense(
            100,
            vec!["A".into()],
            vec!["coal".into(), "wind".into()],
            vec![50.0, 0.0, 50.0, 0.0, 0.0, 50.0, 0.0, 50.0],
            vec![0.0; 4],
            vec![50.0; 4],
        )
        .unwrap();
        let table = factors(&[("coal", 1000.0), ("wind", 12.0)]);
        let series = intensity_series(&snap, &table, "A").unwrap();
        assert_eq!(series.values(), &[1000.0, 1000.0, 12.0, 12.0]);
        assert_eq!(series.start_epoch_hour(), 100);
        for h in 0..4 {
            let res = trace_intensity(&snap, &table, 100 + h).unwrap();
            assert_eq!(series.values()[h as usize], res.intensity[0]);
        }
    }

    /// Build a random, balanced, loss-free multi-area fixture.
    /// Consumption is defined as generation + imports - exports, so the
    /// balance holds by construction (clamped to keep it non-negative by
    /// scaling flows down when needed).
    pub(crate) fn random_balanced_snapshot(
        rng: &mut ChaCha8Rng,
        na: usize,
        hours: usize,
        techs: &[(&str, f64)],
    ) -> GridSnapshot {
        let nt = techs.len();
        let mut generation = vec![0.0; hours * na * nt];
        let mut flows = vec![0.0; hours * na * na];
        let mut consumption = vec![0.0; hours * na];
        for h in 0..hours {
            for a in 0..na {
                for t in 0..nt {
                    generation[(h * na + a) * nt + t] = rng.gen_range(0.0..100.0);
                }
            }
            for f in 0..na {
                for t in 0..na {
                    if f != t && rng.gen_bool(0.6) {
                        flows[(h * na + f) * na + t] = rng.gen_range(0.0..20.0);
                    }
                }
            }
            // exports may not exceed inflow; scale this hour's flows down until ok
            loop {
                let mut ok = true;
                for a in 0..na {
                    let gen: f64 = (0..nt).map(|t| generation[(h * na + a) * nt + t]).sum();
                    let imports: f64 = (0..na).map(|b| flows[(h * na + b) * na + a]).sum();
                    let exports: f64 = (0..na).map(|b| flows[(h * na + a) * na + b]).sum();
                    if exports > gen + imports {
                        ok = false;
                    }
                }
                if ok {
                    break;
                }
                for f in 0..na {
                    for t in 0..na {
                        flows[(h * na + f) * na + t] *= 0.5;
                    }
                }
            }
            for a in 0..na {
                let gen: f64 = (0..nt).map(|t| generation[(h * na + a) * nt + t]).sum();
                let imports: f64 = (0..na).map(|b| flows[(h * na + b) * na + a]).sum();
                let exports: f64 = (0..na).map(|b| flows[(h * na + a) * na + b]).sum();
                consumption[h * na + a] = gen + imports - exports;
            }
        }
        GridSnapshot::from_dense(
            0,
            (0..na).map(|i| format!("A{i}")).collect(),
            techs.iter().map(|(n, _)| n.to_string()).collect(),
            generation,
            flows,
            consumption,
        )
        .unwrap()
    }

    #[test]
    fn emission_conservation_on_random_fixtures() {
        let techs = [("coal", 1000.0), ("gas", 400.0), ("wind", 12.0), ("solar", 45.0)];
        let table = factors(&techs);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let na = rng.gen_range(2..6);
            let snap = random_balanced_snapshot(&mut rng, na, 3, &techs);
            for h in 0..snap.hours() {
                let res = trace_intensity(&snap, &table, h as i64).unwrap();
                let mut traced = 0.0;
                let mut emitted = 0.0;
                for a in 0..na {
                    traced += res.intensity[a] * snap.consumption_mwh(h, a);
                    for (t, (_, e)) in techs.iter().enumerate() {
                        emitted += snap.generation_mwh(h, a, t) * e;
                    }
                    // convexity: each intensity within the factor range
                    let max_e = techs.iter().map(|t| t.1).fold(0.0, f64::max);
                    assert!(res.intensity[a] >= -1e-12 && res.intensity[a] <= max_e + 1e-9);
                }
                assert_relative_eq!(traced, emitted, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn intensity_invariant_under_scaling() {
        let techs = [("coal", 1000.0), ("wind", 12.0)];
        let table = factors(&techs);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let snap = random_balanced_snapshot(&mut rng, 4, 1, &techs);
        let base = trace_intensity(&snap, &table, 0).unwrap();

        let scale = 7.25;
        let na = 4;
        let scaled = GridSnapshot::from_dense(
            0,
            snap.areas().to_vec(),
            snap.technologies().to_vec(),
            (0..na)
                .flat_map(|a| (0..2).map(move |t| (a, t)))
                .map(|(a, t)| snap.generation_mwh(0, a, t) * scale)
                .collect(),
            (0..na)
                .flat_map(|f| (0..na).map(move |t| (f, t)))
                .map(|(f, t)| snap.flow_mwh(0, f, t) * scale)
                .collect(),
            (0..na).map(|a| snap.consumption_mwh(0, a) * scale).collect(),
        )
        .unwrap();
        let res = trace_intensity(&scaled, &table, 0).unwrap();
        for a in 0..na {
            assert_relative_eq!(res.intensity[a], base.intensity[a], max_relative = 1e-9);
        }
    }
}
