//! Exhaustive-enumeration coverage for tiny designs, conditional on the
//! regeneration rule and on each method being computable.

use statrs::distribution::{Binomial, Discrete};

use super::scenario::Scenario;
use super::study::{accepted, evaluate, StudyKind};
use crate::binary::BinaryStratum;
use crate::error::{Error, Result};
use crate::types::MethodId;

/// Largest outcome space enumerated (product of `n_sg + 1`).
pub const MAX_OUTCOMES: u64 = 5_000_000;

/// Exact rate per method: `P(hit, computable | accepted) / P(computable | accepted)`.
pub fn exact_rates(scenario: &Scenario, kind: StudyKind) -> Result<Vec<(MethodId, f64)>> {
    scenario.validate()?;
    let rates1 = scenario.rates1();
    let mut cells = Vec::new();
    for (s, &(n0, n1)) in scenario.sizes.iter().enumerate() {
        cells.push((n0, scenario.rates0[s]));
        cells.push((n1, rates1[s]));
    }
    let space: u64 = cells.iter().map(|(n, _)| n + 1).product();
    if space > MAX_OUTCOMES {
        return Err(Error::invariant("sizes", format!("{space} outcomes exceed the enumeration bound")));
    }
    let pmfs: Vec<Vec<f64>> = cells
        .iter()
        .map(|&(n, p)| {
            let b = Binomial::new(p, n).map_err(|e| Error::invariant("rate", e.to_string()))?;
            Ok((0..=n).map(|x| b.pmf(x)).collect())
        })
        .collect::<Result<_>>()?;

    let m = scenario.methods.len();
    let mut hit_mass = vec![0.0; m];
    let mut used_mass = vec![0.0; m];
    let mut x = vec![0u64; cells.len()];
    'outer: loop {
        let prob: f64 = x.iter().zip(&pmfs).map(|(&xi, p)| p[xi as usize]).product();
        let data: Vec<BinaryStratum> = scenario
            .sizes
            .iter()
            .enumerate()
            .map(|(s, &(n0, n1))| BinaryStratum { x0: x[2 * s], n0, x1: x[2 * s + 1], n1 })
            .collect();
        if prob > 0.0 && accepted(&data, scenario.metric) {
            let ev = evaluate(scenario, &data, kind);
            for (k, h) in ev.hits.iter().enumerate() {
                if let Some(h) = h {
                    used_mass[k] += prob;
                    if *h {
                        hit_mass[k] += prob;
                    }
                }
            }
        }
        // odometer increment
        for (i, xi) in x.iter_mut().enumerate() {
            if *xi < cells[i].0 {
                *xi += 1;
                continue 'outer;
            }
            *xi = 0;
        }
        break;
    }
    Ok(scenario.methods.iter().enumerate().map(|(k, &method)| (method, hit_mass[k] / used_mass[k])).collect())
}
