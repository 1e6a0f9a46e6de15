//! All stratified MOVER constructions on user-supplied summaries, with a
//! custom interval provider for the re-leveled AC methods.
//!
//! cargo run --example stratified_summaries

use stratmover::mover::{
    ac2_diff_ci, ac2_ratio_bisection, ac_diff_ci, acl_ratio, av_diff_ci, avl_ratio, fieller_ac_ratio, fieller_av_ratio,
    CiProvider, EngineOptions, WithinStratumMover,
};
use stratmover::normal::z_for_level;
use stratmover::{ConfidenceInterval, EffectResult, Group, Stratum, StratumGroupSummary, WeightSpec};

/// Normal-theory intervals rebuilt at any requested level.
struct NormalTheory<'a>(&'a [Stratum]);

impl CiProvider for NormalTheory<'_> {
    fn group_ci(&self, stratum: usize, group: Group, level: f64) -> stratmover::Result<ConfidenceInterval> {
        let c = self.0[stratum].group(group);
        let h = z_for_level(level) * c.variance.sqrt();
        ConfidenceInterval::new(c.estimate - h, c.estimate + h, level)
    }
}

fn cell(estimate: f64, se: f64, n: u64) -> stratmover::Result<StratumGroupSummary> {
    let h = z_for_level(0.95) * se;
    StratumGroupSummary::new(estimate, se * se, ConfidenceInterval::new(estimate - h, estimate + h, 0.95)?, n)
}

fn show(r: &EffectResult) {
    let gamma = r.gamma.map_or(String::new(), |g| format!("  gamma ({:.3}, {:.3})", g.control, g.treated));
    println!("{:<10} {:<4} {:.4}  [{:.4}, {:.4}]{gamma}", r.scale, r.method, r.estimate, r.ci.lower, r.ci.upper);
}

fn main() -> stratmover::Result<()> {
    // mean responses per stratum: (control, treated) with standard errors
    let strata = vec![
        Stratum::new(cell(10.2, 0.8, 40)?, cell(12.9, 0.9, 42)?),
        Stratum::new(cell(8.7, 1.1, 25)?, cell(10.1, 1.0, 27)?),
        Stratum::new(cell(11.5, 0.6, 60)?, cell(13.0, 0.7, 58)?),
    ];
    let weights = WeightSpec::fixed(&[0.3, 0.2, 0.5])?;
    let opts = EngineOptions::new(0.95);
    let provider = NormalTheory(&strata);
    let within = WithinStratumMover::new(&strata, &provider);

    show(&av_diff_ci(&strata, &weights, 1.0, 0.95)?);
    show(&ac_diff_ci(&strata, &weights, 1.0, &opts, &provider)?);
    show(&ac2_diff_ci(&strata, &weights, 1.0, &opts, &within)?);
    show(&fieller_av_ratio(&strata, &weights, 0.95)?);
    show(&avl_ratio(&strata, &weights, 0.95)?);
    show(&fieller_ac_ratio(&strata, &weights, &opts, &provider)?);
    show(&acl_ratio(&strata, &weights, &opts, &provider)?);
    show(&ac2_ratio_bisection(&strata, &weights, &opts, &provider, &within)?);
    Ok(())
}
