//! Kaplan–Meier fits, milestone survival and RMST with the built-in
//! one-sample intervals, from individual time-to-event records.
//!
//! cargo run --example survival_from_records

use stratmover::io::{parse_survival_csv, render_analysis, Format};
use stratmover::survival::{analyze_survival, km_fit, make_summaries, CiSource, Endpoint, SurvivalOptions};
use stratmover::Group;

fn main() -> stratmover::Result<()> {
    let data = parse_survival_csv(concat!(env!("CARGO_MANIFEST_DIR"), "/data/synthetic_survival.csv"))?;
    for (s, label) in data.labels.iter().enumerate() {
        for g in [Group::Control, Group::Treated] {
            let km = km_fit(&data.records, s, g)?;
            println!(
                "{label:<7} {g:<8} n={:<3} S(5)={:.3} RMST(8)={:.3}",
                km.subjects,
                km.survival_at(5.0),
                km.area_to(8.0)
            );
        }
    }
    for endpoint in [Endpoint::Milestone(5.0), Endpoint::Rmst(8.0)] {
        let summ = make_summaries(&data.records, endpoint, &CiSource::Default, 0.95)?;
        println!("\n{endpoint:?}");
        print!("{}", render_analysis(&analyze_survival(&summ, &SurvivalOptions::default())?, Format::Table)?);
    }
    Ok(())
}
