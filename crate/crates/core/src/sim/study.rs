use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::substream;
use super::scenario::{Metric, Scenario};
use crate::binary::{compute_binary, resolve_weights, summaries, BinaryStratum};
use crate::error::{Error, Result};
use crate::types::MethodId;

/// Safety bound on dataset regeneration; not a property of the designs.
pub const MAX_ATTEMPTS: u64 = 1_000_000;

/// A simulated dataset and how many draws were rejected before it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub strata: Vec<BinaryStratum>,
    pub regenerations: u64,
}

/// `true` when a dataset satisfies the regeneration rule: at least one event
/// overall (RD) or in each group (RR).
pub fn accepted(data: &[BinaryStratum], metric: Metric) -> bool {
    let x0: u64 = data.iter().map(|s| s.x0).sum();
    let x1: u64 = data.iter().map(|s| s.x1).sum();
    match metric {
        Metric::Rd => x0 + x1 > 0,
        Metric::Rr => x0 > 0 && x1 > 0,
    }
}

/// Draws replicate `replicate` of `scenario`, regenerating until accepted.
pub fn generate_dataset(scenario: &Scenario, replicate: u64) -> Result<Dataset> {
    let mut rng = substream(scenario.seed, replicate);
    let rates1 = scenario.rates1();
    let dists = scenario
        .sizes
        .iter()
        .zip(scenario.rates0.iter().zip(&rates1))
        .map(|(&(n0, n1), (&p0, &p1))| {
            let b0 = Binomial::new(n0, p0).map_err(|e| Error::invariant("rates0", e.to_string()))?;
            let b1 = Binomial::new(n1, p1).map_err(|e| Error::invariant("rates1", e.to_string()))?;
            Ok((n0, n1, b0, b1))
        })
        .collect::<Result<Vec<_>>>()?;
    for attempt in 0..MAX_ATTEMPTS {
        let strata: Vec<BinaryStratum> = dists
            .iter()
            .map(|(n0, n1, b0, b1)| BinaryStratum { x0: b0.sample(&mut rng), n0: *n0, x1: b1.sample(&mut rng), n1: *n1 })
            .collect();
        if accepted(&strata, scenario.metric) {
            return Ok(Dataset { strata, regenerations: attempt });
        }
    }
    Err(Error::RegenerationLimit(MAX_ATTEMPTS))
}

/// What a replicate's interval is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Does the interval contain the scenario target?
    Coverage,
    /// Does the interval exclude the no-effect value?
    Rejection,
}

/// Per-method outcome on one dataset; `None` when incomputable.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub hits: Vec<Option<bool>>,
    /// Resolved weight of the first stratum, when the weights were computable.
    pub first_weight: Option<f64>,
}

/// Evaluates every scenario method on one dataset.
pub fn evaluate(scenario: &Scenario, data: &[BinaryStratum], kind: StudyKind) -> Evaluation {
    let m = scenario.methods.len();
    if scenario.level >= 1.0 {
        // the level-1 interval is the whole line: it covers everything and rejects nothing
        return Evaluation { hits: vec![Some(kind == StudyKind::Coverage); m], first_weight: None };
    }
    let setup = resolve_weights(data, &scenario.scheme, scenario.policy)
        .and_then(|w| summaries(data, scenario.level, scenario.policy).map(|s| (w, s)));
    let Ok((weights, strata)) = setup else {
        return Evaluation { hits: vec![None; m], first_weight: None };
    };
    let (target, null) = (scenario.target(), scenario.metric.null());
    let scale = scenario.metric.scale();
    let hits = scenario
        .methods
        .iter()
        .map(|&method| {
            compute_binary(data, &strata, &weights, method, scale, scenario.level, scenario.policy)
                .ok()
                .map(|r| match kind {
                    StudyKind::Coverage => r.ci.contains(target),
                    StudyKind::Rejection => !r.ci.contains(null),
                })
        })
        .collect();
    Evaluation { hits, first_weight: weights.resolved.first().copied() }
}

/// Rate for one method with its Monte Carlo standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRate {
    pub method: MethodId,
    pub rate: f64,
    /// `sqrt(rate (1 - rate) / replicates)`.
    pub mcse: f64,
    /// Replicates in which the method was computable.
    pub replicates: u64,
    pub excluded: u64,
}

impl MethodRate {
    /// `rate ± 3 mcse`.
    pub fn bracket(&self) -> (f64, f64) {
        (self.rate - 3.0 * self.mcse, self.rate + 3.0 * self.mcse)
    }
}

/// Summary of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario_id: String,
    pub metric: Metric,
    pub kind: StudyKind,
    pub target: f64,
    pub replicates: u64,
    pub regenerations: u64,
    pub rates: Vec<MethodRate>,
    /// Mean and standard deviation of the first stratum's weight.
    pub weight_mean: Option<f64>,
    pub weight_sd: Option<f64>,
}

impl SimReport {
    pub fn rate(&self, method: MethodId) -> Option<&MethodRate> {
        self.rates.iter().find(|r| r.method == method)
    }
}

pub fn mcse(rate: f64, replicates: u64) -> f64 {
    if replicates == 0 {
        return f64::NAN;
    }
    (rate * (1.0 - rate) / replicates as f64).sqrt()
}

fn run(scenario: &Scenario, kind: StudyKind) -> Result<SimReport> {
    scenario.validate()?;
    let outcomes: Vec<(u64, Evaluation)> = (0..scenario.replicates)
        .into_par_iter()
        .map(|i| generate_dataset(scenario, i).map(|d| (d.regenerations, evaluate(scenario, &d.strata, kind))))
        .collect::<Result<_>>()?;

    // sequential, index-ordered reduction keeps the floating sums bit-stable
    let m = scenario.methods.len();
    let mut hits = vec![0u64; m];
    let mut used = vec![0u64; m];
    let mut regenerations = 0;
    let (mut wn, mut wsum, mut wsq) = (0u64, 0.0, 0.0);
    for (regen, ev) in &outcomes {
        regenerations += regen;
        for (k, h) in ev.hits.iter().enumerate() {
            if let Some(h) = h {
                used[k] += 1;
                hits[k] += *h as u64;
            }
        }
        if let Some(w) = ev.first_weight {
            wn += 1;
            wsum += w;
            wsq += w * w;
        }
    }
    let rates = scenario
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let rate = if used[k] > 0 { hits[k] as f64 / used[k] as f64 } else { f64::NAN };
            MethodRate { method, rate, mcse: mcse(rate, used[k]), replicates: used[k], excluded: scenario.replicates - used[k] }
        })
        .collect();
    let (weight_mean, weight_sd) = if wn > 1 {
        let mean = wsum / wn as f64;
        let var = ((wsq - wn as f64 * mean * mean) / (wn - 1) as f64).max(0.0);
        (Some(mean), Some(var.sqrt()))
    } else {
        (None, None)
    };
    Ok(SimReport {
        scenario_id: scenario.id.clone(),
        metric: scenario.metric,
        kind,
        target: scenario.target(),
        replicates: scenario.replicates,
        regenerations,
        rates,
        weight_mean,
        weight_sd,
    })
}

/// Fraction of replicates whose interval covers the scenario target.
pub fn coverage_study(scenario: &Scenario) -> Result<SimReport> {
    run(scenario, StudyKind::Coverage)
}

/// Fraction of replicates whose interval excludes the no-effect value.
pub fn test_study(scenario: &Scenario) -> Result<SimReport> {
    run(scenario, StudyKind::Rejection)
}
