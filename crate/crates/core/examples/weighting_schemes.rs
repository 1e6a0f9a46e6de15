//! Mantel–Haenszel, inverse-variance, minimum-risk and fixed weights, and the
//! minimum-risk continuity correction.
//!
//! cargo run --example weighting_schemes

use stratmover::binary::{mr_continuity, resolve_weights, BinaryStratum, ZeroCellPolicy};
use stratmover::WeightScheme;

fn main() -> stratmover::Result<()> {
    let data = [BinaryStratum::new(12, 100, 25, 100)?, BinaryStratum::new(40, 60, 48, 65)?];
    for scheme in [WeightScheme::Mh, WeightScheme::Inv, WeightScheme::Mr, WeightScheme::Fixed(vec![1.0, 3.0])] {
        let w = resolve_weights(&data, &scheme, ZeroCellPolicy::None)?;
        println!("{scheme:<5} {:?}", w.resolved);
    }
    println!("MR continuity correction c = {:.6}", mr_continuity(&data));

    // a stratum with no events has zero estimated variance and, in the limit,
    // takes every INV weight; half an event keeps it finite
    let sparse = [BinaryStratum::new(0, 20, 0, 20)?, BinaryStratum::new(3, 20, 6, 20)?];
    match resolve_weights(&sparse, &WeightScheme::Inv, ZeroCellPolicy::None) {
        Ok(w) => println!("INV without correction: {:?}", w.resolved),
        Err(e) => println!("INV without correction: {e}"),
    }
    let w = resolve_weights(&sparse, &WeightScheme::Inv, ZeroCellPolicy::HalfEvent)?;
    println!("INV with half-event correction: {:?}", w.resolved);
    Ok(())
}
