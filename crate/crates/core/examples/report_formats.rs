//! The same analysis as an aligned table, full-precision CSV and JSON, and
//! the JSON read back without loss.
//!
//! cargo run --example report_formats

use stratmover::binary::{analyze_binary, BinaryOptions};
use stratmover::io::{parse_analysis_json, parse_binary_reader, render_analysis, Format};
use stratmover::{MethodId, Scale};

const CSV: &str = "stratum,group,events,total\nyoung,0,8,50\nyoung,1,15,48\nold,0,14,40\nold,1,21,44\n";

fn main() -> stratmover::Result<()> {
    let data = parse_binary_reader(CSV.as_bytes())?;
    let opts = BinaryOptions { methods: vec![MethodId::Av, MethodId::Ac, MethodId::Wald], ..Default::default() };
    let analysis = analyze_binary(&data.strata, &opts)?;
    for format in [Format::Table, Format::Csv, Format::Json] {
        println!("--- {format:?}");
        print!("{}", render_analysis(&analysis, format)?);
    }
    let back = parse_analysis_json(&render_analysis(&analysis, Format::Json)?)?;
    assert_eq!(back, analysis);
    let ac = back.get(MethodId::Ac, Scale::Ratio).expect("AC ratio present");
    println!("--- round trip exact; AC ratio upper = {}", ac.ci.upper);
    Ok(())
}
