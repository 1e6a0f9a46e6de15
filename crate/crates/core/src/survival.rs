//! Time-to-event backend: Kaplan–Meier curves, milestone survival and RMST
//! summaries, and injection of externally computed one-sample intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mover::{
    ac2_diff_ci, ac2_ratio_bisection, ac_diff_ci, acl_ratio, av_diff_ci, avl_ratio, fieller_ac_ratio,
    fieller_av_ratio, mover_diff_unstratified, CiProvider, EngineOptions, WithinStratumMover,
};
use crate::normal::z_for_level;
use crate::types::{
    check_level, Adjustment, Analysis, ConfidenceInterval, EffectResult, Estimate, Group, MethodFailure, MethodId,
    Scale, Stratum, StratumGroupSummary, WeightScheme, WeightSpec,
};
use crate::weights::{self, WeightInputs};

/// One subject's follow-up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRecord {
    pub time: f64,
    /// `true` for an event, `false` for censoring.
    pub event: bool,
    pub group: Group,
    pub stratum: usize,
}

/// Product-limit estimate of one stratum × group cell.
///
/// `survival[k]` and `greenwood_var[k]` hold on `[event_times[k], event_times[k + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMCurve {
    pub event_times: Vec<f64>,
    pub survival: Vec<f64>,
    pub greenwood_var: Vec<f64>,
    pub at_risk: Vec<u64>,
    pub events: Vec<u64>,
    /// Largest observed time, event or censored.
    pub last_time: f64,
    pub subjects: u64,
}

/// Fits the Kaplan–Meier curve of the records in `stratum`, `group`.
///
/// Events precede censorings at tied times.
pub fn km_fit(records: &[SurvivalRecord], stratum: usize, group: Group) -> Result<KMCurve> {
    let mut obs: Vec<(f64, bool)> = records
        .iter()
        .filter(|r| r.stratum == stratum && r.group == group)
        .map(|r| (r.time, r.event))
        .collect();
    if obs.is_empty() {
        return Err(Error::EmptyGroup { stratum, group });
    }
    if let Some((t, _)) = obs.iter().find(|(t, _)| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::invariant("time", format!("{t} is not a nonnegative finite time")));
    }
    obs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total = obs.len() as u64;
    let mut curve = KMCurve {
        event_times: Vec::new(),
        survival: Vec::new(),
        greenwood_var: Vec::new(),
        at_risk: Vec::new(),
        events: Vec::new(),
        last_time: obs[obs.len() - 1].0,
        subjects: total,
    };
    let mut s = 1.0;
    let mut gw_sum = 0.0;
    let mut i = 0;
    while i < obs.len() {
        let t = obs[i].0;
        let at_risk = total - i as u64;
        let mut d = 0u64;
        let mut j = i;
        while j < obs.len() && obs[j].0 == t {
            d += obs[j].1 as u64;
            j += 1;
        }
        if d > 0 {
            s *= 1.0 - d as f64 / at_risk as f64;
            // the term is infinite when the risk set empties; S is then 0
            if d < at_risk {
                gw_sum += d as f64 / (at_risk as f64 * (at_risk - d) as f64);
            }
            curve.event_times.push(t);
            curve.survival.push(s);
            curve.greenwood_var.push(s * s * gw_sum);
            curve.at_risk.push(at_risk);
            curve.events.push(d);
        }
        i = j;
    }
    Ok(curve)
}

impl KMCurve {
    /// Index of the last event time `<= t`.
    fn step(&self, t: f64) -> Option<usize> {
        self.event_times.partition_point(|&u| u <= t).checked_sub(1)
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || t > self.last_time {
            return Err(Error::BeyondFollowUp { time: t, last: self.last_time });
        }
        Ok(())
    }

    /// Step value of the survival function at `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        self.step(t).map_or(1.0, |k| self.survival[k])
    }

    /// Greenwood variance at the last event time `<= t`.
    pub fn variance_at(&self, t: f64) -> f64 {
        self.step(t).map_or(0.0, |k| self.greenwood_var[k])
    }

    /// `int_0^t S(u) du` by exact step integration.
    pub fn area_to(&self, t: f64) -> f64 {
        let mut area = 0.0;
        let mut prev = 0.0;
        let mut s = 1.0;
        for (&u, &su) in self.event_times.iter().zip(&self.survival) {
            if u > t {
                break;
            }
            area += s * (u - prev);
            prev = u;
            s = su;
        }
        area + s * (t - prev)
    }
}

/// Transformation on which a one-sample interval is symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkingScale {
    Identity,
    /// `log(-log S)`.
    CLogLog,
}

impl WorkingScale {
    fn forward(self, x: f64) -> f64 {
        match self {
            WorkingScale::Identity => x,
            WorkingScale::CLogLog => (-x.ln()).ln(),
        }
    }

    fn inverse(self, y: f64) -> f64 {
        match self {
            WorkingScale::Identity => y,
            WorkingScale::CLogLog => (-y.exp()).exp(),
        }
    }

    /// Where the transform is finite; elsewhere intervals fall back to identity.
    fn defined(self, x: f64) -> bool {
        match self {
            WorkingScale::Identity => true,
            WorkingScale::CLogLog => x > 0.0 && x < 1.0,
        }
    }
}

/// Interval symmetric on the working scale with delta-method variance `var` on the natural scale.
pub fn transformed_wald(estimate: f64, var: f64, scale: WorkingScale, level: f64) -> Result<ConfidenceInterval> {
    let z = z_for_level(level);
    let (lo, hi) = match scale {
        _ if var == 0.0 => (estimate, estimate),
        WorkingScale::CLogLog if scale.defined(estimate) => {
            // d/dS log(-log S) = 1 / (S log S)
            let se = var.sqrt() / (estimate * estimate.ln()).abs();
            (estimate.powf((z * se).exp()), estimate.powf((-z * se).exp()))
        }
        _ => {
            let h = z * var.sqrt();
            (estimate - h, estimate + h)
        }
    };
    ConfidenceInterval::new(lo.min(estimate), hi.max(estimate), level)
}

/// Milestone survival at `t` with Greenwood variance and a cloglog interval.
pub fn milestone(curve: &KMCurve, t: f64, level: f64) -> Result<StratumGroupSummary> {
    curve.check_time(t)?;
    let s = curve.survival_at(t);
    let v = curve.variance_at(t);
    StratumGroupSummary::new(s, v, transformed_wald(s, v, WorkingScale::CLogLog, level)?, curve.subjects)
}

/// Restricted mean survival time to `horizon` with a plain Wald interval.
///
/// `var = sum_{t_i <= L} A_i^2 d_i / (n_i (n_i - d_i))`, `A_i = int_{t_i}^L S(u) du`.
pub fn rmst(curve: &KMCurve, horizon: f64, level: f64) -> Result<StratumGroupSummary> {
    curve.check_time(horizon)?;
    let total = curve.area_to(horizon);
    let mut var = 0.0;
    for k in 0..curve.event_times.len() {
        let t = curve.event_times[k];
        if t > horizon {
            break;
        }
        let (n, d) = (curve.at_risk[k], curve.events[k]);
        if d < n {
            let a = total - curve.area_to(t);
            var += a * a * d as f64 / (n as f64 * (n - d) as f64);
        }
    }
    StratumGroupSummary::new(total, var, transformed_wald(total, var, WorkingScale::Identity, level)?, curve.subjects)
}

/// The survival functional being compared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "time")]
pub enum Endpoint {
    Milestone(f64),
    Rmst(f64),
}

impl Endpoint {
    pub fn working_scale(self) -> WorkingScale {
        match self {
            Endpoint::Milestone(_) => WorkingScale::CLogLog,
            Endpoint::Rmst(_) => WorkingScale::Identity,
        }
    }

    fn summarize(self, curve: &KMCurve, level: f64) -> Result<StratumGroupSummary> {
        match self {
            Endpoint::Milestone(t) => milestone(curve, t, level),
            Endpoint::Rmst(l) => rmst(curve, l, level),
        }
    }
}

/// One externally supplied stratum × group estimate and interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExternalCell {
    pub estimate: f64,
    #[serde(with = "crate::types::limit_serde")]
    pub lower: f64,
    #[serde(with = "crate::types::limit_serde")]
    pub upper: f64,
    pub level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalStratum {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub control: ExternalCell,
    pub treated: ExternalCell,
}

impl ExternalStratum {
    pub fn cell(&self, g: Group) -> &ExternalCell {
        match g {
            Group::Control => &self.control,
            Group::Treated => &self.treated,
        }
    }
}

/// Externally computed one-sample intervals (e.g. score-type), one entry per stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalCis {
    pub strata: Vec<ExternalStratum>,
}

/// Where per-cell intervals come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CiSource {
    /// Built-in cloglog (milestone) or Wald (RMST) intervals.
    Default,
    External(ExternalCis),
}

/// Engine-ready survival summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSummaries {
    pub labels: Vec<String>,
    pub strata: Vec<Stratum>,
    pub working_scale: WorkingScale,
    pub external: bool,
}

fn stratum_count(records: &[SurvivalRecord]) -> Result<usize> {
    records.iter().map(|r| r.stratum + 1).max().ok_or(Error::EmptyStrata)
}

/// Fits every stratum × group cell and summarizes `endpoint`.
///
/// With [`CiSource::External`] the supplied estimates and intervals replace
/// the fitted ones; a missing external variance falls back to the fitted
/// delta variance.
pub fn make_summaries(
    records: &[SurvivalRecord],
    endpoint: Endpoint,
    source: &CiSource,
    level: f64,
) -> Result<SurvivalSummaries> {
    check_level(level)?;
    let s_count = stratum_count(records)?;
    if let CiSource::External(ext) = source {
        if ext.strata.len() != s_count {
            return Err(Error::DimensionMismatch(format!(
                "{} external strata for {} strata in the data",
                ext.strata.len(),
                s_count
            )));
        }
    }
    let mut strata = Vec::with_capacity(s_count);
    let mut labels = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let mut cells = [None; 2];
        for g in Group::BOTH {
            let fitted = endpoint.summarize(&km_fit(records, s, g)?, level)?;
            cells[g.index()] = Some(match source {
                CiSource::Default => fitted,
                CiSource::External(ext) => {
                    let c = ext.strata[s].cell(g);
                    external_summary(c, Some(c.variance.unwrap_or(fitted.variance)), fitted.n)?
                }
            });
        }
        labels.push(match source {
            CiSource::External(ext) => ext.strata[s].label.clone().unwrap_or_else(|| s.to_string()),
            CiSource::Default => s.to_string(),
        });
        strata.push(Stratum::new(cells[0].unwrap(), cells[1].unwrap()));
    }
    Ok(SurvivalSummaries {
        labels,
        strata,
        working_scale: endpoint.working_scale(),
        external: matches!(source, CiSource::External(_)),
    })
}

fn external_summary(c: &ExternalCell, variance: Option<f64>, n: u64) -> Result<StratumGroupSummary> {
    let ci = ConfidenceInterval::new(c.lower, c.upper, c.level)?;
    let var = variance.unwrap_or_else(|| ((c.upper - c.lower) / (2.0 * z_for_level(c.level))).powi(2));
    StratumGroupSummary::new(c.estimate, var, ci, n)
}

/// Summaries from external intervals alone (no subject-level data).
///
/// Every cell needs `n`; a missing variance is recovered from the interval width.
pub fn summaries_from_external(ext: &ExternalCis, endpoint: Endpoint) -> Result<SurvivalSummaries> {
    if ext.strata.is_empty() {
        return Err(Error::EmptyStrata);
    }
    let mut strata = Vec::new();
    for (s, es) in ext.strata.iter().enumerate() {
        let cell = |g: Group| -> Result<StratumGroupSummary> {
            let c = es.cell(g);
            let n = c.n.ok_or_else(|| Error::invariant(format!("strata[{s}].{g}.n"), "required without raw data"))?;
            external_summary(c, c.variance, n)
        };
        strata.push(Stratum::new(cell(Group::Control)?, cell(Group::Treated)?));
    }
    Ok(SurvivalSummaries {
        labels: ext.strata.iter().enumerate().map(|(i, s)| s.label.clone().unwrap_or_else(|| i.to_string())).collect(),
        strata,
        working_scale: endpoint.working_scale(),
        external: true,
    })
}

/// Re-levels stored intervals.
///
/// For built-in intervals this is an exact refit from estimate and variance.
/// External intervals have their half-widths on the working scale scaled by
/// `z_{level} / z_{stored level}`, which is an approximation.
pub struct Releveler<'a> {
    pub strata: &'a [Stratum],
    pub scale: WorkingScale,
    pub external: bool,
}

impl CiProvider for Releveler<'_> {
    fn group_ci(&self, stratum: usize, group: Group, level: f64) -> Result<ConfidenceInterval> {
        let c = self.strata[stratum].group(group);
        if !self.external {
            return transformed_wald(c.estimate, c.variance, self.scale, level);
        }
        let k = z_for_level(level) / z_for_level(c.ci.level);
        let e = c.estimate;
        let on_scale = [e, c.ci.lower, c.ci.upper].iter().all(|x| self.scale.defined(*x));
        let sc = if on_scale { self.scale } else { WorkingScale::Identity };
        let y = sc.forward(e);
        let a = sc.inverse(y + k * (sc.forward(c.ci.lower) - y));
        let b = sc.inverse(y + k * (sc.forward(c.ci.upper) - y));
        ConfidenceInterval::new(a.min(b).min(e), a.max(b).max(e), level)
    }

    fn is_approximate(&self) -> bool {
        self.external
    }
}

/// Options for [`analyze_survival`].
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalOptions {
    pub scheme: WeightScheme,
    pub methods: Vec<MethodId>,
    pub scales: Vec<Scale>,
    pub level: f64,
}

impl Default for SurvivalOptions {
    fn default() -> Self {
        SurvivalOptions {
            scheme: WeightScheme::Mh,
            methods: MethodId::ALL.to_vec(),
            scales: vec![Scale::Difference, Scale::Ratio],
            level: 0.95,
        }
    }
}

/// Resolves weights from cell sizes (MH) or stratum-difference variances (INV, MR).
pub fn resolve_weights(summ: &SurvivalSummaries, scheme: &WeightScheme) -> Result<WeightSpec> {
    let inputs: Vec<WeightInputs> = summ
        .strata
        .iter()
        .map(|s| WeightInputs {
            n_control: s.control.n as f64,
            n_treated: s.treated.n as f64,
            variance: s.control.variance + s.treated.variance,
            difference: s.treated.estimate - s.control.estimate,
        })
        .collect();
    weights::resolve(scheme, &inputs)
}

/// The MOVER methods available for survival summaries.
pub const SURVIVAL_METHODS: [MethodId; 5] = [MethodId::Av, MethodId::Avl, MethodId::Ac, MethodId::Acl, MethodId::Ac2];

/// Computes one MOVER method on survival summaries.
pub fn compute_survival(
    summ: &SurvivalSummaries,
    weights: &WeightSpec,
    method: MethodId,
    scale: Scale,
    level: f64,
) -> Result<EffectResult> {
    if !method.supports(scale) || !SURVIVAL_METHODS.contains(&method) {
        return Err(Error::UnsupportedMethod { method, scale });
    }
    let strata = &summ.strata;
    let opts = EngineOptions::new(level);
    let provider = Releveler { strata, scale: summ.working_scale, external: summ.external };
    let diff = WithinStratumMover::new(strata, &provider);
    let r = match (scale, method) {
        (Scale::Difference, MethodId::Av) => av_diff_ci(strata, weights, 1.0, level),
        (Scale::Difference, MethodId::Ac) => ac_diff_ci(strata, weights, 1.0, &opts, &provider),
        (Scale::Difference, MethodId::Ac2) => ac2_diff_ci(strata, weights, 1.0, &opts, &diff),
        (Scale::Ratio, MethodId::Av) => fieller_av_ratio(strata, weights, level),
        (Scale::Ratio, MethodId::Avl) => avl_ratio(strata, weights, level),
        (Scale::Ratio, MethodId::Ac) => fieller_ac_ratio(strata, weights, &opts, &provider),
        (Scale::Ratio, MethodId::Acl) => acl_ratio(strata, weights, &opts, &provider),
        (Scale::Ratio, MethodId::Ac2) => ac2_ratio_bisection(strata, weights, &opts, &provider, &diff),
        _ => Err(Error::UnsupportedMethod { method, scale }),
    }?;
    if summ.external {
        Ok(r)
    } else {
        let mut r = r;
        r.corrections.push(Adjustment::DefaultOneSampleCi);
        Ok(r)
    }
}

/// Runs the requested MOVER methods; binary-only comparators are skipped.
pub fn analyze_survival(summ: &SurvivalSummaries, opts: &SurvivalOptions) -> Result<Analysis> {
    check_level(opts.level)?;
    let weights = resolve_weights(summ, &opts.scheme)?;
    let mut out = Analysis::default();
    for &scale in &opts.scales {
        for &method in &opts.methods {
            if !method.supports(scale) || !SURVIVAL_METHODS.contains(&method) {
                continue;
            }
            match compute_survival(summ, &weights, method, scale, opts.level) {
                Ok(r) => out.results.push(r),
                Err(e) => out.failures.push(MethodFailure { method, scale, error: e.to_string() }),
            }
        }
    }
    Ok(out)
}

/// Treatment difference within one stratum, by unstratified MOVER.
pub fn stratum_difference(s: &Stratum) -> Result<Estimate> {
    let ci = mover_diff_unstratified(s.treated.as_estimate(), s.control.as_estimate())?;
    Ok(Estimate { value: s.treated.estimate - s.control.estimate, ci })
}

fn check_two(diffs: &[Estimate]) -> Result<()> {
    if diffs.len() != 2 {
        return Err(Error::StrataCount { expected: 2, got: diffs.len() });
    }
    Ok(())
}

/// Interval for the treatment-by-stratum interaction
/// `(delta_11 - delta_10) - (delta_21 - delta_20)`.
pub fn interaction_ci(diffs: &[Estimate]) -> Result<ConfidenceInterval> {
    check_two(diffs)?;
    mover_diff_unstratified(diffs[0], diffs[1])
}

/// Interaction on the ratio scale: MOVER on log ratios, exponentiated.
pub fn interaction_ratio_ci(ratios: &[Estimate]) -> Result<ConfidenceInterval> {
    check_two(ratios)?;
    let log = |e: &Estimate| -> Result<Estimate> {
        if !(e.value > 0.0 && e.ci.lower > 0.0) {
            return Err(Error::NonpositiveEstimate(format!("ratio {} with lower limit {}", e.value, e.ci.lower)));
        }
        Estimate::new(e.value.ln(), ConfidenceInterval::new(e.ci.lower.ln(), e.ci.upper.ln(), e.ci.level)?)
    };
    let ci = mover_diff_unstratified(log(&ratios[0])?, log(&ratios[1])?)?;
    ConfidenceInterval::new(ci.lower.exp(), ci.upper.exp(), ci.level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(time: f64, event: bool) -> SurvivalRecord {
        SurvivalRecord { time, event, group: Group::Control, stratum: 0 }
    }

    fn textbook() -> Vec<SurvivalRecord> {
        // 6 subjects: 1, 2+, 3, 3, 4+, 5
        [(1.0, true), (2.0, false), (3.0, true), (3.0, true), (4.0, false), (5.0, true)]
            .iter()
            .map(|&(t, e)| rec(t, e))
            .collect()
    }

    #[test]
    fn single_event_drops_to_zero() {
        let c = km_fit(&[rec(1.0, true)], 0, Group::Control).unwrap();
        assert_eq!(c.survival_at(0.5), 1.0);
        assert_eq!(c.survival_at(1.0), 0.0);
        assert_eq!(rmst(&c, 1.0, 0.95).unwrap().estimate, 1.0);
    }

    #[test]
    fn all_censored_is_flat() {
        let c = km_fit(&[rec(1.0, false), rec(2.0, false)], 0, Group::Control).unwrap();
        assert!(c.event_times.is_empty());
        let m = milestone(&c, 2.0, 0.95).unwrap();
        assert_eq!((m.estimate, m.variance), (1.0, 0.0));
        let r = rmst(&c, 1.5, 0.95).unwrap();
        assert_eq!((r.estimate, r.variance), (1.5, 0.0));
    }

    #[test]
    fn textbook_product_limit() {
        let c = km_fit(&textbook(), 0, Group::Control).unwrap();
        assert_eq!(c.event_times, vec![1.0, 3.0, 5.0]);
        assert_eq!(c.at_risk, vec![6, 4, 1]);
        // 5/6, 5/6 * 2/4, 0
        let s = [5.0 / 6.0, 5.0 / 12.0, 0.0];
        for (a, b) in c.survival.iter().zip(s) {
            assert!((a - b).abs() < 1e-15);
        }
        let gw1 = s[0] * s[0] * (1.0 / 30.0);
        let gw2 = s[1] * s[1] * (1.0 / 30.0 + 2.0 / 8.0);
        assert!((c.variance_at(2.5) - gw1).abs() < 1e-12);
        assert!((c.variance_at(3.0) - gw2).abs() < 1e-12);
        assert!((c.variance_at(4.9) - gw2).abs() < 1e-12);
        // step integral to 4: 1 + 5/6 * 2 + 5/12 * 1
        let r = rmst(&c, 4.0, 0.95).unwrap();
        assert!((r.estimate - (1.0 + 10.0 / 6.0 + 5.0 / 12.0)).abs() < 1e-14);
        let a1 = 10.0 / 6.0 + 5.0 / 12.0;
        let a3 = 5.0 / 12.0;
        let v = a1 * a1 / 30.0 + a3 * a3 * 2.0 / 8.0;
        assert!((r.variance - v).abs() < 1e-12);
    }

    #[test]
    fn beyond_follow_up() {
        let c = km_fit(&textbook(), 0, Group::Control).unwrap();
        assert!(matches!(milestone(&c, 5.5, 0.95), Err(Error::BeyondFollowUp { .. })));
        assert!(matches!(rmst(&c, 6.0, 0.95), Err(Error::BeyondFollowUp { .. })));
    }

    #[test]
    fn empty_cell() {
        assert_eq!(
            km_fit(&textbook(), 0, Group::Treated).unwrap_err(),
            Error::EmptyGroup { stratum: 0, group: Group::Treated }
        );
    }

    #[test]
    fn cloglog_interval_inside_unit() {
        let c = km_fit(&textbook(), 0, Group::Control).unwrap();
        let m = milestone(&c, 3.0, 0.95).unwrap();
        assert!(m.ci.lower > 0.0 && m.ci.upper < 1.0 && m.ci.contains(m.estimate));
    }

    #[test]
    fn interaction_examples() {
        let e = |v: f64, l: f64, u: f64| Estimate::new(v, ConfidenceInterval::new(l, u, 0.95).unwrap()).unwrap();
        let ci = interaction_ci(&[e(0.953, -0.054, 1.912), e(0.653, -0.596, 1.858)]).unwrap();
        assert!((ci.lower + 1.271).abs() < 2e-3 && (ci.upper - 1.874).abs() < 2e-3);
        let same = interaction_ci(&[e(0.3, 0.1, 0.6), e(0.3, 0.1, 0.6)]).unwrap();
        assert!((same.lower + same.upper).abs() < 1e-15);
        assert!(matches!(interaction_ci(&[e(0.3, 0.1, 0.6)]), Err(Error::StrataCount { expected: 2, got: 1 })));
        // log scale: symmetric on the log axis gives exp(+-sqrt(2) h)
        let r = interaction_ratio_ci(&[e(2.0, 1.0, 4.0), e(2.0, 1.0, 4.0)]).unwrap();
        let h = 2f64.sqrt() * 2f64.ln();
        assert!((r.lower - (-h).exp()).abs() < 1e-12 && (r.upper - h.exp()).abs() < 1e-12);
    }

    #[test]
    fn external_relevel_identity_scales_half_width() {
        let cell = StratumGroupSummary::new(3.0, 0.1, ConfidenceInterval::new(2.0, 4.5, 0.95).unwrap(), 10).unwrap();
        let strata = [Stratum::new(cell, cell)];
        let p = Releveler { strata: &strata, scale: WorkingScale::Identity, external: true };
        let c = p.group_ci(0, Group::Control, 0.9).unwrap();
        let k = z_for_level(0.9) / z_for_level(0.95);
        assert!((c.lower - (3.0 - k)).abs() < 1e-12 && (c.upper - (3.0 + 1.5 * k)).abs() < 1e-12);
        assert!(p.is_approximate());
    }

    #[test]
    fn default_source_is_flagged() {
        let mut recs = Vec::new();
        for s in 0..2 {
            for g in Group::BOTH {
                for k in 0..6 {
                    let t = 1.0 + k as f64 + 0.3 * s as f64 + 0.5 * g.index() as f64;
                    recs.push(SurvivalRecord { time: t, event: k % 3 != 2, group: g, stratum: s });
                }
            }
        }
        let summ = make_summaries(&recs, Endpoint::Rmst(5.0), &CiSource::Default, 0.95).unwrap();
        let a = analyze_survival(&summ, &SurvivalOptions::default()).unwrap();
        assert!(!a.results.is_empty());
        assert!(a.results.iter().all(|r| r.corrections.contains(&Adjustment::DefaultOneSampleCi)));
        assert!(a.results.iter().all(|r| r.method != MethodId::Wald));
    }

    proptest! {
        #[test]
        fn rmst_bounded_and_monotone(times in proptest::collection::vec((0.01f64..10.0, any::<bool>()), 1..30)) {
            let recs: Vec<_> = times.iter().map(|&(t, e)| rec(t, e)).collect();
            let c = km_fit(&recs, 0, Group::Control).unwrap();
            let mut prev = 0.0;
            for k in 0..=20 {
                let l = (c.last_time * k as f64 / 20.0).min(c.last_time);
                let r = rmst(&c, l, 0.95).unwrap().estimate;
                prop_assert!(r <= l + 1e-12);
                prop_assert!(r >= prev - 1e-12);
                prev = r;
            }
            for w in c.survival.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
            // the cumulative Greenwood sum var / S^2 never decreases while S > 0
            let sums: Vec<f64> = c.greenwood_var.iter().zip(&c.survival)
                .take_while(|(_, s)| **s > 0.0).map(|(v, s)| v / (s * s)).collect();
            for w in sums.windows(2) {
                prop_assert!(w[1] >= w[0] * (1.0 - 1e-12));
            }
        }

        #[test]
        fn uncensored_rmst_is_truncated_mean(times in proptest::collection::vec(0.01f64..10.0, 2..40), frac in 0.1f64..1.0) {
            let recs: Vec<_> = times.iter().map(|&t| rec(t, true)).collect();
            let c = km_fit(&recs, 0, Group::Control).unwrap();
            let l = (c.last_time * frac).min(c.last_time);
            let r = rmst(&c, l, 0.95).unwrap();
            let y: Vec<f64> = times.iter().map(|t| t.min(l)).collect();
            let n = y.len() as f64;
            let mean = y.iter().sum::<f64>() / n;
            let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n / n;
            prop_assert!((r.estimate - mean).abs() < 1e-10);
            prop_assert!((r.variance - var).abs() < 1e-10 * var.max(1.0));
        }

        #[test]
        fn milestone_is_step_value(times in proptest::collection::vec((0.01f64..10.0, any::<bool>()), 1..30), frac in 0.0f64..1.0) {
            let recs: Vec<_> = times.iter().map(|&(t, e)| rec(t, e)).collect();
            let c = km_fit(&recs, 0, Group::Control).unwrap();
            let t = (c.last_time * frac).min(c.last_time);
            let m = milestone(&c, t, 0.95).unwrap();
            let k = c.event_times.iter().rposition(|&u| u <= t);
            prop_assert_eq!(m.estimate, k.map_or(1.0, |k| c.survival[k]));
        }
    }
}
