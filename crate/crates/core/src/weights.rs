//! Stratum weight resolution shared by the binary and survival backends.

use crate::error::{Error, Result};
use crate::types::{WeightScheme, WeightSpec};

/// Per-stratum quantities the weighting schemes draw on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightInputs {
    pub n_control: f64,
    pub n_treated: f64,
    /// Estimated variance of the stratum difference.
    pub variance: f64,
    /// Estimated stratum difference.
    pub difference: f64,
}

/// Resolves `scheme` into normalized weights.
///
/// MR weights minimise the plug-in risk `sum w_s^2 V_s + (sum (w_s - f_s) d_s)^2`
/// subject to `sum w_s = 1`, where `f_s` is the stratum's share of subjects.
/// With two strata this is `w_1 = (V_2 + f_1 (d_2 - d_1)^2) / (V_1 + V_2 + (d_2 - d_1)^2)`.
pub fn resolve(scheme: &WeightScheme, inputs: &[WeightInputs]) -> Result<WeightSpec> {
    if inputs.is_empty() {
        return Err(Error::EmptyStrata);
    }
    let raw: Vec<f64> = match scheme {
        WeightScheme::Mh => inputs
            .iter()
            .map(|s| s.n_treated * s.n_control / (s.n_treated + s.n_control))
            .collect(),
        WeightScheme::Inv => inverse_variance(inputs)?,
        WeightScheme::Mr => minimum_risk(inputs)?,
        WeightScheme::Fixed(ws) => {
            if ws.len() != inputs.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} fixed weights for {} strata",
                    ws.len(),
                    inputs.len()
                )));
            }
            ws.clone()
        }
    };
    WeightSpec::from_raw(scheme.clone(), &raw)
}

fn inverse_variance(inputs: &[WeightInputs]) -> Result<Vec<f64>> {
    let zero: Vec<bool> = inputs.iter().map(|s| s.variance <= 0.0).collect();
    if zero.iter().all(|z| *z) {
        return Err(Error::DegenerateVariance);
    }
    // Zero-variance strata take all the weight in the limit.
    if zero.iter().any(|z| *z) {
        return Ok(zero.iter().map(|z| if *z { 1.0 } else { 0.0 }).collect());
    }
    Ok(inputs.iter().map(|s| 1.0 / s.variance).collect())
}

fn minimum_risk(inputs: &[WeightInputs]) -> Result<Vec<f64>> {
    let k = inputs.len();
    if k < 2 {
        return Err(Error::MrStrataCount(k));
    }
    if inputs.iter().any(|s| !(s.variance > 0.0)) {
        return Err(Error::DegenerateVariance);
    }
    let total: f64 = inputs.iter().map(|s| s.n_control + s.n_treated).sum();
    let share: Vec<f64> = inputs.iter().map(|s| (s.n_control + s.n_treated) / total).collect();
    let d: Vec<f64> = inputs.iter().map(|s| s.difference).collect();
    let dinv: Vec<f64> = inputs.iter().map(|s| 1.0 / s.variance).collect();

    // (diag(V) + d d')^{-1} x by Sherman–Morrison.
    let dt_dinv_d: f64 = d.iter().zip(&dinv).map(|(di, vi)| di * di * vi).sum();
    let solve = |x: &[f64]| -> Vec<f64> {
        let dt_dinv_x: f64 = d.iter().zip(&dinv).zip(x).map(|((di, vi), xi)| di * vi * xi).sum();
        let scale = dt_dinv_x / (1.0 + dt_dinv_d);
        (0..k).map(|i| dinv[i] * x[i] - dinv[i] * d[i] * scale).collect()
    };
    let target: f64 = share.iter().zip(&d).map(|(f, di)| f * di).sum();
    let a = solve(&d);
    let b = solve(&vec![1.0; k]);
    let sum_a: f64 = a.iter().sum();
    let sum_b: f64 = b.iter().sum();
    let mu = (1.0 - target * sum_a) / sum_b;
    let w: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| target * ai + mu * bi).collect();
    if let Some((stratum, weight)) = w.iter().copied().enumerate().find(|(_, x)| *x < 0.0) {
        return Err(Error::NegativeWeight { stratum, weight });
    }
    Ok(w)
}
