//! Stratified RMST and milestone survival comparisons built from published
//! per-stratum estimates and one-sample intervals.
//!
//! cargo run --example survival_external_cis

use stratmover::io::{read_external_cis, render_analysis, Format};
use stratmover::survival::{analyze_survival, summaries_from_external, Endpoint, SurvivalOptions};
use stratmover::WeightScheme;

fn main() -> stratmover::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    for (file, endpoint) in [("trial_rmst8_cis.json", Endpoint::Rmst(8.0)), ("trial_km8_cis.json", Endpoint::Milestone(8.0))] {
        let ext = read_external_cis(format!("{dir}/{file}"))?;
        let summ = summaries_from_external(&ext, endpoint)?;
        for scheme in [WeightScheme::Mh, WeightScheme::Inv] {
            let a = analyze_survival(&summ, &SurvivalOptions { scheme: scheme.clone(), ..Default::default() })?;
            println!("{endpoint:?}, {scheme} weights");
            print!("{}", render_analysis(&a, Format::Table)?);
            println!();
        }
    }
    Ok(())
}
