//! Exact coverage by exhaustive enumeration of a tiny design, next to the
//! Monte Carlo estimate of the same quantity.
//!
//! cargo run --release --example exact_oracle

use stratmover::sim::{coverage_study, exact_rates, Effect, Metric, Scenario, StudyKind};
use stratmover::{MethodId, WeightScheme};

fn main() -> stratmover::Result<()> {
    let scenario = Scenario {
        id: "tiny".into(),
        rates0: vec![0.3, 0.5],
        effect: Effect::Constant(0.15),
        sizes: vec![(6, 6), (6, 6)],
        scheme: WeightScheme::Mh,
        methods: vec![MethodId::Wald, MethodId::Av, MethodId::Ac, MethodId::Ac2],
        level: 0.95,
        metric: Metric::Rd,
        replicates: 50_000,
        seed: 1,
        policy: Default::default(),
    };
    let exact = exact_rates(&scenario, StudyKind::Coverage)?;
    let mc = coverage_study(&scenario)?;
    for (method, p) in exact {
        let m = mc.rate(method).expect("method simulated");
        println!("{method:<5} exact {p:.4}  monte carlo {:.4} ± {:.4}", m.rate, m.mcse);
    }
    Ok(())
}
