//! Risk difference and relative risk intervals for the four-stratum mouse
//! bioassay under MH, INV and MR weights.
//!
//! cargo run --example bioassay_table

use stratmover::binary::{analyze_binary, BinaryOptions};
use stratmover::io::{parse_binary_csv, render_analysis, Format};
use stratmover::WeightScheme;

fn main() -> stratmover::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/bioassay.csv");
    let data = parse_binary_csv(path)?;
    for (s, label) in data.strata.iter().zip(&data.labels) {
        println!("stratum {label}: control {}/{}, treated {}/{}", s.x0, s.n0, s.x1, s.n1);
    }
    for scheme in [WeightScheme::Mh, WeightScheme::Inv, WeightScheme::Mr] {
        println!("\n{scheme} weights");
        let analysis = analyze_binary(&data.strata, &BinaryOptions { scheme, ..Default::default() })?;
        print!("{}", render_analysis(&analysis, Format::Table)?);
    }
    Ok(())
}
