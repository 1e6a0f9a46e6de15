//! Treatment-by-stratum interaction: the difference of two stratum-specific
//! effects, each known only through an estimate and its interval.
//!
//! cargo run --example interaction

use stratmover::survival::interaction_ci;
use stratmover::{ConfidenceInterval, Estimate};

fn main() -> stratmover::Result<()> {
    let male = Estimate::new(0.953, ConfidenceInterval::new(-0.054, 1.912, 0.95)?)?;
    let female = Estimate::new(0.653, ConfidenceInterval::new(-0.596, 1.858, 0.95)?)?;
    let ci = interaction_ci(&[male, female])?;
    println!("RMST difference, male minus female: {:.3} [{:.3}, {:.3}]", male.value - female.value, ci.lower, ci.upper);
    Ok(())
}
