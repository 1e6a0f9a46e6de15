//! Type I error and power of interval-inversion tests for a common risk
//! difference, comparing MH, INV and MR weights.
//!
//! cargo run --release --example type_one_error

use stratmover::sim::{scenario_grid, test_study};

fn main() -> stratmover::Result<()> {
    let grid = scenario_grid(6, 20_000, 42)?;
    for s in grid.iter().filter(|s| s.sizes[0].0 == 100) {
        let rep = test_study(s)?;
        let rates: Vec<String> = rep.rates.iter().map(|r| format!("{} {:5.2}%", r.method, 100.0 * r.rate)).collect();
        println!("{:<22} {}", s.id, rates.join("  "));
        if let (Some(m), Some(sd)) = (rep.weight_mean, rep.weight_sd) {
            println!("{:<22} stratum-1 weight {m:.4} ± {sd:.4}", "");
        }
    }
    Ok(())
}
