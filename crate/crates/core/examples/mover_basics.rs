//! The unstratified MOVER combiner and the adjusted per-stratum level used by
//! the AC construction.
//!
//! cargo run --example mover_basics

use stratmover::mover::{gamma_level, mover_diff_unstratified};
use stratmover::{ConfidenceInterval, Estimate};

fn main() -> stratmover::Result<()> {
    let treated = Estimate::new(0.5, ConfidenceInterval::new(0.3, 0.7, 0.95)?)?;
    let control = Estimate::new(0.5, ConfidenceInterval::new(0.3, 0.7, 0.95)?)?;
    let ci = mover_diff_unstratified(treated, control)?;
    println!("difference of two equal proportions: [{:.5}, {:.5}]", ci.lower, ci.upper);

    // asymmetric limits are carried through, unlike a Wald interval
    let treated = Estimate::new(0.9, ConfidenceInterval::new(0.72, 0.97, 0.95)?)?;
    let control = Estimate::new(0.2, ConfidenceInterval::new(0.09, 0.38, 0.95)?)?;
    let ci = mover_diff_unstratified(treated, control)?;
    println!("0.9 - 0.2 = 0.7 with interval [{:.4}, {:.4}]", ci.lower, ci.upper);

    for strata in [1, 2, 4, 8] {
        let w = vec![1.0 / strata as f64; strata];
        let sigma = vec![0.1; strata];
        println!("{strata} equal strata: per-stratum gamma = {:.5}", gamma_level(&w, &sigma, 0.05)?);
    }
    Ok(())
}
