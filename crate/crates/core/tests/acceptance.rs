//! Acceptance criteria: one PASS/FAIL line per criterion, detail lines for
//! every checked cell. Run with `cargo test --test acceptance`.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stratmover::binary::{
    analyze_binary, mr_continuity, resolve_weights, summaries, unstratified_bias, wilson_ci, BinaryOptions, BinaryStratum,
    WilsonProvider,
};
use stratmover::io::parse_binary_csv;
use stratmover::mover::{
    ac2_diff_ci, ac_diff_ci, av_diff_ci, fieller_ac_ratio, gamma_level, mover_diff_unstratified, EngineOptions,
    WithinStratumMover,
};
use stratmover::sim::{coverage_study, exact_rates, scenario_grid, test_study, Effect, Metric, Scenario, StudyKind};
use stratmover::survival::{analyze_survival, interaction_ci, summaries_from_external, Endpoint, SurvivalOptions};
use stratmover::{ConfidenceInterval, Estimate, MethodId, Scale, Stratum, WeightScheme, WeightSpec};

const SEED: u64 = 42;

/// Writes past the test harness capture so lines appear in every run.
fn emit(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
    checked: usize,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Criterion { name, failures: Vec::new(), checked: 0 }
    }

    fn check(&mut self, ok: bool, detail: String) {
        self.checked += 1;
        emit(&format!("    {} {detail}", if ok { "ok  " } else { "MISS" }));
        if !ok {
            self.failures.push(detail);
        }
    }

    fn finish(self) {
        let verdict = if self.failures.is_empty() { "PASS" } else { "FAIL" };
        emit(&format!("[{verdict}] {} ({} checks, {} failed)", self.name, self.checked, self.failures.len()));
        assert!(self.failures.is_empty(), "{}:\n{}", self.name, self.failures.join("\n"));
    }
}

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

fn same3(got: f64, printed: f64) -> bool {
    (round3(got) - printed).abs() < 1e-9
}

#[test]
fn criterion_1_bioassay_table_exact() {
    let started = Instant::now();
    let mut c = Criterion::new("criterion 1: bioassay table reproduced to 3 decimals");
    let data = parse_binary_csv(data_path("bioassay.csv")).unwrap().strata;
    let run = |scheme: WeightScheme| analyze_binary(&data, &BinaryOptions { scheme, ..Default::default() }).unwrap();
    let (mh, inv, mr) = (run(WeightScheme::Mh), run(WeightScheme::Inv), run(WeightScheme::Mr));

    use MethodId::*;
    let rd: [(MethodId, Option<(f64, f64)>, Option<(f64, f64)>, Option<(f64, f64)>); 6] = [
        (Dc, Some((0.012, 0.200)), None, None),
        (Wald, Some((0.013, 0.198)), Some((-0.001, 0.169)), Some((0.005, 0.187))),
        (Av, Some((0.038, 0.225)), Some((0.025, 0.211)), Some((0.034, 0.217))),
        (Ys, Some((0.027, 0.217)), Some((0.006, 0.200)), Some((0.015, 0.211))),
        (Ac, Some((0.029, 0.216)), Some((0.016, 0.190)), Some((0.022, 0.206))),
        (Ac2, Some((0.029, 0.216)), Some((0.016, 0.190)), Some((0.022, 0.206))),
    ];
    for (label, analysis, est) in [("MH", &mh, 0.106), ("INV", &inv, 0.084), ("MR", &mr, 0.096)] {
        let any = analysis.get(Wald, Scale::Difference).unwrap();
        c.check(same3(any.estimate, est), format!("RD {label} estimate {:.3} vs {est:.3}", any.estimate));
    }
    for (method, mh_cell, inv_cell, mr_cell) in rd {
        for ((label, analysis), cell) in [("MH", &mh), ("INV", &inv), ("MR", &mr)].into_iter().zip([mh_cell, inv_cell, mr_cell]) {
            let got = analysis.get(method, Scale::Difference);
            match (cell, got) {
                (Some((l, u)), Some(r)) => c.check(
                    same3(r.ci.lower, l) && same3(r.ci.upper, u),
                    format!("RD {label} {method} [{:.3}, {:.3}] vs [{l:.3}, {u:.3}]", r.ci.lower, r.ci.upper),
                ),
                (None, None) => c.check(true, format!("RD {label} {method} not reported, as printed")),
                (Some(_), None) => c.check(false, format!("RD {label} {method} missing")),
                (None, Some(r)) => c.check(false, format!("RD {label} {method} reported {:?} but printed as '-'", r.ci)),
            }
        }
    }
    let rr = mh.get(Av, Scale::Ratio).unwrap().estimate;
    c.check(same3(rr, 2.674), format!("RR MH estimate {rr:.3} vs 2.674"));
    for (method, l, u) in [
        (Dc, 1.366, 5.234),
        (Asy, 1.369, 5.222),
        (Av, 1.442, 5.033),
        (Avl, 1.370, 5.688),
        (Ac, 1.373, 5.093),
        (Ac2, 1.373, 5.093),
        (Acl, 1.368, 5.080),
    ] {
        let r = mh.get(method, Scale::Ratio).unwrap();
        c.check(
            same3(r.ci.lower, l) && same3(r.ci.upper, u),
            format!("RR MH {method} [{:.3}, {:.3}] vs [{l:.3}, {u:.3}]", r.ci.lower, r.ci.upper),
        );
    }
    let secs = started.elapsed().as_secs_f64();
    c.check(secs < 1.0, format!("elapsed {secs:.3} s < 1 s"));
    c.finish();
}

#[test]
fn criterion_2_survival_table_av() {
    let mut c = Criterion::new("criterion 2: RMST AV/AVL from injected one-sample intervals, ±0.001");
    let ext = stratmover::io::read_external_cis(data_path("trial_rmst8_cis.json")).unwrap();
    let summ = summaries_from_external(&ext, Endpoint::Rmst(8.0)).unwrap();
    let a = analyze_survival(&summ, &SurvivalOptions::default()).unwrap();
    let w = &a.get(MethodId::Av, Scale::Difference).unwrap().weights.resolved;
    c.check(
        same3(w[0], 0.602) && same3(w[1], 0.398),
        format!("MH weights ({:.3}, {:.3}) vs (0.602, 0.398)", w[0], w[1]),
    );
    for (method, scale, l, u) in [
        (MethodId::Av, Scale::Difference, 0.049, 1.584),
        (MethodId::Av, Scale::Ratio, 1.020, 1.654),
        (MethodId::Avl, Scale::Ratio, 1.011, 1.646),
    ] {
        let r = a.get(method, scale).unwrap();
        let ok = (r.ci.lower - l).abs() <= 0.001 + 1e-12 && (r.ci.upper - u).abs() <= 0.001 + 1e-12;
        c.check(ok, format!("{scale} {method} [{:.4}, {:.4}] vs [{l:.3}, {u:.3}]", r.ci.lower, r.ci.upper));
    }
    c.finish();
}

#[test]
fn criterion_3_interaction() {
    let mut c = Criterion::new("criterion 3: interaction interval ±0.002");
    let est = |v: f64, l: f64, u: f64| Estimate::new(v, ConfidenceInterval::new(l, u, 0.95).unwrap()).unwrap();
    let ci = interaction_ci(&[est(0.953, -0.054, 1.912), est(0.653, -0.596, 1.858)]).unwrap();
    let ok = (ci.lower + 1.271).abs() <= 0.002 && (ci.upper - 1.874).abs() <= 0.002;
    c.check(ok, format!("[{:.4}, {:.4}] vs [-1.271, 1.874]", ci.lower, ci.upper));
    c.finish();
}

fn grid_cell(replicates: u64, id: &str) -> Scenario {
    scenario_grid(6, replicates, SEED).unwrap().into_iter().find(|s| s.id == id).unwrap_or_else(|| panic!("no scenario {id}"))
}

#[test]
fn criterion_4_type_one_error_and_power() {
    let mut c = Criterion::new("criterion 4: rejection-rate spot cells");
    // (scenario, method, printed %, tolerance in percentage points, replicates)
    let cells = [
        ("ex6-rd-mh-n50-rd0", MethodId::Wald, 5.43, 0.3, 100_000),
        ("ex6-rd-mh-n50-rd0", MethodId::Ys, 2.01, 0.3, 100_000),
        ("ex6-rd-mh-n200-rd0", MethodId::Ac, 4.97, 0.3, 100_000),
        ("ex6-rd-inv-n10000-rd0", MethodId::Ac, 5.05, 0.8, 10_000),
        ("ex6-rd-mr-n10000-rd0", MethodId::Wald, 5.67, 0.8, 10_000),
        ("ex6-rd-inv-n500-rd0.05", MethodId::Ac, 82.7, 0.5, 100_000),
    ];
    for (id, method, printed, tol, reps) in cells {
        let rep = test_study(&grid_cell(reps, id)).unwrap();
        let got = 100.0 * rep.rate(method).unwrap().rate;
        c.check((got - printed).abs() <= tol, format!("{id} {method}: {got:.2}% vs {printed:.2}% ± {tol} ({reps} replicates)"));
    }
    c.finish();
}

#[test]
fn criterion_5_heterogeneity_validity() {
    let mut c = Criterion::new("criterion 5: large-sample coverage under stratum heterogeneity");
    let cells: Vec<Scenario> = scenario_grid(5, 10_000, SEED)
        .unwrap()
        .into_iter()
        .filter(|s| s.id.starts_with("ex5-rd-mh-n8000-"))
        .collect();
    c.check(cells.len() == 50, format!("{} scenarios at n = 8000", cells.len()));
    let mut ys_below = Vec::new();
    let mut ys_sum = 0.0;
    for s in &cells {
        let rep = coverage_study(s).unwrap();
        for method in [MethodId::Ac, MethodId::Ac2, MethodId::Av, MethodId::Wald] {
            let r = rep.rate(method).unwrap().rate;
            c.check((0.94..=0.96).contains(&r), format!("{} {method} CP {r:.4} in [0.94, 0.96]", s.id));
        }
        let ys = rep.rate(MethodId::Ys).unwrap().rate;
        ys_sum += ys;
        c.check(ys > 0.955, format!("{} YS CP {ys:.4} > 0.955", s.id));
        if ys <= 0.955 {
            ys_below.push(s.id.clone());
        }
    }
    emit(&format!(
        "    note: mean YS CP {:.4}; {} of {} cells at or below 0.955",
        ys_sum / cells.len() as f64,
        ys_below.len(),
        cells.len()
    ));
    c.finish();
}

#[test]
fn criterion_6_exact_enumeration_oracle() {
    let mut c = Criterion::new("criterion 6: Monte Carlo matches exhaustive enumeration within 3 SE");
    let methods = vec![MethodId::Ac, MethodId::Ac2, MethodId::Av, MethodId::Wald];
    for n in [4u64, 6, 8] {
        let s = Scenario {
            id: format!("tiny-n{n}"),
            rates0: vec![0.3, 0.5],
            effect: Effect::Constant(0.15),
            sizes: vec![(n, n); 2],
            scheme: WeightScheme::Mh,
            methods: methods.clone(),
            level: 0.95,
            metric: Metric::Rd,
            replicates: 40_000,
            seed: SEED + n,
            policy: Default::default(),
        };
        let exact = exact_rates(&s, StudyKind::Coverage).unwrap();
        let mc = coverage_study(&s).unwrap();
        for (method, p) in exact {
            let m = mc.rate(method).unwrap();
            let se = (p * (1.0 - p) / m.replicates as f64).sqrt();
            c.check(
                (m.rate - p).abs() <= 3.0 * se,
                format!("n_sg={n} {method}: MC {:.4} vs exact {p:.4} (3 SE = {:.4})", m.rate, 3.0 * se),
            );
        }
    }
    c.finish();
}

fn random_binary(rng: &mut ChaCha8Rng, strata: usize) -> Vec<BinaryStratum> {
    (0..strata)
        .map(|_| {
            let (n0, n1) = (rng.random_range(5..60u64), rng.random_range(5..60u64));
            let x0 = rng.random_range(1..n0);
            let x1 = rng.random_range(1..n1);
            BinaryStratum::new(x0, n0, x1, n1).unwrap()
        })
        .collect()
}

#[test]
fn criterion_7_property_suites() {
    let started = Instant::now();
    let mut c = Criterion::new("criterion 7: property suites");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    // Z(phi) = (t1 - phi t0) / sqrt(V1 + phi^2 V0) strictly decreases
    let mut mono = true;
    for _ in 0..200 {
        let (t1, t0): (f64, f64) = (rng.random_range(0.01..1.0), rng.random_range(0.01..1.0));
        let (v1, v0): (f64, f64) = (rng.random_range(1e-4..0.1), rng.random_range(1e-4..0.1));
        let z = |phi: f64| (t1 - phi * t0) / (v1 + phi * phi * v0).sqrt();
        let grid: Vec<f64> = (0..1000).map(|i| z(1e6 * i as f64 / 999.0)).collect();
        mono &= grid.windows(2).all(|w| w[1] < w[0]);
    }
    c.check(mono, "test statistic strictly decreasing on a 1000-point grid over [0, 1e6], 200 draws".into());

    // Fieller plug-back
    let opts = EngineOptions::new(0.95);
    let mut worst: f64 = 0.0;
    let mut finite = 0;
    for _ in 0..200 {
        let strata_count = rng.random_range(2..5);
        let data = random_binary(&mut rng, strata_count);
        let strata = summaries(&data, 0.95, Default::default()).unwrap();
        let w = resolve_weights(&data, &WeightScheme::Mh, Default::default()).unwrap();
        let provider = WilsonProvider(&data);
        let Ok(r) = fieller_ac_ratio(&strata, &w, &opts, &provider) else { continue };
        if r.ci.lower > 0.0 {
            let d = ac_diff_ci(&strata, &w, r.ci.lower, &opts, &provider).unwrap();
            worst = worst.max(d.ci.lower.abs());
            finite += 1;
        }
        if r.ci.upper.is_finite() {
            let d = ac_diff_ci(&strata, &w, r.ci.upper, &opts, &provider).unwrap();
            worst = worst.max(d.ci.upper.abs());
            finite += 1;
        }
    }
    c.check(finite > 100 && worst < 1e-8, format!("Fieller plug-back residual {worst:.2e} < 1e-8 over {finite} limits"));

    // S = 1 collapse; hypot vs sqrt of the same sum differ only in the last bits
    let mut collapse: f64 = 0.0;
    for _ in 0..200 {
        let data = random_binary(&mut rng, 1);
        let strata = summaries(&data, 0.95, Default::default()).unwrap();
        let w = WeightSpec::fixed(&[1.0]).unwrap();
        let provider = WilsonProvider(&data);
        let s = &strata[0];
        let eq1 = mover_diff_unstratified(s.treated.as_estimate(), s.control.as_estimate()).unwrap();
        let diff = WithinStratumMover::new(&strata, &provider);
        for ci in [
            av_diff_ci(&strata, &w, 1.0, 0.95).unwrap().ci,
            ac_diff_ci(&strata, &w, 1.0, &opts, &provider).unwrap().ci,
            ac2_diff_ci(&strata, &w, 1.0, &opts, &diff).unwrap().ci,
        ] {
            collapse = collapse.max((ci.lower - eq1.lower).abs()).max((ci.upper - eq1.upper).abs());
        }
    }
    c.check(collapse < 1e-14, format!("single-stratum AV/AC/AC2 equal the unstratified interval (max gap {collapse:.1e})"));

    // gamma >= alpha
    let mut gamma_ok = true;
    for _ in 0..1000 {
        let k = rng.random_range(1..8);
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let alpha = rng.random_range(0.001..0.5);
        gamma_ok &= gamma_level(&w, &s, alpha).unwrap() >= alpha - 1e-12;
    }
    c.check(gamma_ok, "gamma >= alpha over 1000 random weight/sigma draws".into());

    // level monotonicity on every method and scale
    let bio = parse_binary_csv(data_path("bioassay.csv")).unwrap().strata;
    let mut nested = true;
    for scheme in [WeightScheme::Mh, WeightScheme::Inv, WeightScheme::Mr] {
        let at = |level| analyze_binary(&bio, &BinaryOptions { scheme: scheme.clone(), level, ..Default::default() }).unwrap();
        let (wide, narrow) = (at(0.99), at(0.95));
        for r in &narrow.results {
            nested &= wide.get(r.method, r.scale).is_some_and(|w| w.ci.encloses(&r.ci));
        }
    }
    c.check(nested, "99% intervals enclose 95% intervals for every method, scale and scheme".into());

    // Wilson bounds
    let mut wilson = true;
    for n in 1..=100u64 {
        for x in 0..=n {
            let ci = wilson_ci(x, n, 0.95).unwrap();
            let p = x as f64 / n as f64;
            wilson &= 0.0 <= ci.lower && ci.lower <= p && p <= ci.upper && ci.upper <= 1.0;
            wilson &= (x > 0 || ci.lower == 0.0) && (x < n || ci.upper == 1.0);
        }
    }
    c.check(wilson, "Wilson 0 <= l <= p <= u <= 1, exact at x = 0 and x = n, for n <= 100".into());

    // MR widening adds exactly 2c
    let mr = analyze_binary(&bio, &BinaryOptions { scheme: WeightScheme::Mr, ..Default::default() }).unwrap();
    let av = mr.get(MethodId::Av, Scale::Difference).unwrap();
    let strata: Vec<Stratum> = summaries(&bio, 0.95, Default::default()).unwrap();
    let plain = av_diff_ci(&strata, &WeightSpec::fixed(&av.weights.resolved).unwrap(), 1.0, 0.95).unwrap();
    let cc = mr_continuity(&bio);
    let gap = (av.ci.width() - plain.ci.width() - 2.0 * cc).abs();
    c.check(gap < 1e-12, format!("MR widening adds 2c = {:.6} (gap {gap:.1e})", 2.0 * cc));

    // bias vanishes with equal allocation ratios or equal control rates
    let zero_r = unstratified_bias(0.1, 0.5, 80.0, 20.0, 2.0, 2.0, 0.1);
    let zero_p = unstratified_bias(0.3, 0.3, 80.0, 20.0, 0.25, 4.0, 0.1);
    c.check(zero_r.abs() < 1e-15 && zero_p.abs() < 1e-15, format!("bias zeros {zero_r:.1e}, {zero_p:.1e}"));

    let secs = started.elapsed().as_secs_f64();
    c.check(secs < 10.0, format!("elapsed {secs:.2} s < 10 s"));
    c.finish();
}

#[test]
fn criterion_8_weight_drift() {
    let mut c = Criterion::new("criterion 8: first-stratum weight means at n_sg = 10^4");
    for (id, printed, tol) in [("ex6-rd-mr-n10000-rd0", 0.6490, 0.002), ("ex6-rd-inv-n10000-rd0", 0.7273, 0.001)] {
        let rep = test_study(&grid_cell(100_000, id)).unwrap();
        let mean = rep.weight_mean.unwrap();
        c.check(
            (mean - printed).abs() <= tol,
            format!("{id}: mean weight {mean:.4} (sd {:.4}) vs {printed} ± {tol}", rep.weight_sd.unwrap()),
        );
    }
    c.finish();
}
