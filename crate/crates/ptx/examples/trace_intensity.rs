//! Flow-tracing demo: consumption-based CO2 intensity of a three-area grid.
//!
//! Area A burns coal and exports, area B mixes wind with imports from A,
//! area C imports from both. Run with `cargo run --example trace_intensity`.

use ptx::carbon::trace_intensity;
use ptx::market::{EmissionFactorTable, GridSnapshot};

fn main() {
    let areas = vec!["A".to_string(), "B".to_string(), "C".to_string()];
    let technologies = vec!["coal".to_string(), "wind".to_string()];

    // one hour; [area][tech] generation, [from][to] flows, [area] consumption
    let generation = vec![
        200.0, 0.0, // A: all coal
        0.0, 80.0, // B: all wind
        0.0, 20.0, // C: a little wind
    ];
    let flows = vec![
        0.0, 40.0, 30.0, // A -> B, A -> C
        0.0, 0.0, 25.0, // B -> C
        0.0, 0.0, 0.0,
    ];
    let consumption = vec![130.0, 95.0, 75.0];

    let snapshot =
        GridSnapshot::from_dense(0, areas, technologies, generation, flows, consumption).unwrap();
    let factors = EmissionFactorTable::new(
        [("coal".to_string(), 1000.0), ("wind".to_string(), 12.0)].into_iter().collect(),
    )
    .unwrap();

    let result = trace_intensity(&snapshot, &factors, 0).unwrap();
    println!("consumption-based CO2 intensity (gCO2/kWh):");
    for (area, q) in snapshot.areas().iter().zip(&result.intensity) {
        println!("  {area}: {q:8.2}");
    }
    println!("linear-system residual: {:.2e}", result.residual);

    // emission conservation: traced emissions equal produced emissions
    let traced: f64 = (0..3).map(|a| result.intensity[a] * snapshot.consumption_mwh(0, a)).sum();
    let emitted = 200.0 * 1000.0 + 100.0 * 12.0;
    println!("traced {traced:.1} vs emitted {emitted:.1} (gCO2·MWh/kWh)");
}
