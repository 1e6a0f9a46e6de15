//! Binary-proportion backend: Wilson intervals, MH/INV/MR weights and the
//! large-sample comparators (Wald, ASY, DC, YS).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mover::{
    ac2_diff_ci, ac2_ratio_bisection, ac_diff_ci, acl_ratio, av_diff_ci, avl_ratio, fieller_ac_ratio,
    fieller_av_ratio, gamma_level, pool_group, CiProvider, EngineOptions, WithinStratumMover,
};
use crate::normal::z_for_level;
use crate::types::{
    check_level, Analysis, ConfidenceInterval, EffectResult, Gamma, Group, MethodFailure, MethodId, Scale, Stratum,
    StratumGroupSummary, WeightScheme, WeightSpec,
};
use crate::weights::{self, WeightInputs};

/// Event counts and sizes of one stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryStratum {
    pub x0: u64,
    pub n0: u64,
    pub x1: u64,
    pub n1: u64,
}

impl BinaryStratum {
    pub fn new(x0: u64, n0: u64, x1: u64, n1: u64) -> Result<Self> {
        let s = BinaryStratum { x0, n0, x1, n1 };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        for g in Group::BOTH {
            if self.size(g) == 0 {
                return Err(Error::invariant(format!("n{}", g.index()), "group size must be positive"));
            }
            if self.events(g) > self.size(g) {
                return Err(Error::invariant(
                    format!("x{}", g.index()),
                    format!("{} events exceed group size {}", self.events(g), self.size(g)),
                ));
            }
        }
        Ok(())
    }

    pub fn events(&self, g: Group) -> u64 {
        match g {
            Group::Control => self.x0,
            Group::Treated => self.x1,
        }
    }

    pub fn size(&self, g: Group) -> u64 {
        match g {
            Group::Control => self.n0,
            Group::Treated => self.n1,
        }
    }

    /// Raw proportion `x / n`.
    pub fn rate(&self, g: Group) -> f64 {
        self.events(g) as f64 / self.size(g) as f64
    }

    pub fn difference(&self) -> f64 {
        self.rate(Group::Treated) - self.rate(Group::Control)
    }
}

/// How empty or full cells enter weights and variances. Estimates always use raw rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroCellPolicy {
    #[default]
    None,
    /// `p = 0` becomes `0.5 / n` and `p = 1` becomes `1 - 0.5 / n`.
    HalfEvent,
}

impl std::str::FromStr for ZeroCellPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "none" => Ok(ZeroCellPolicy::None),
            "half-event" | "half" => Ok(ZeroCellPolicy::HalfEvent),
            other => Err(Error::invariant("zero_cell", format!("unknown policy '{other}'"))),
        }
    }
}

impl ZeroCellPolicy {
    fn adjusted_rate(self, s: &BinaryStratum, g: Group) -> f64 {
        let n = s.size(g) as f64;
        let x = s.events(g);
        match self {
            ZeroCellPolicy::HalfEvent if x == 0 => 0.5 / n,
            ZeroCellPolicy::HalfEvent if x == s.size(g) => 1.0 - 0.5 / n,
            _ => x as f64 / n,
        }
    }

    /// Binomial variance `p (1 - p) / n` of one cell's rate.
    pub fn cell_variance(self, s: &BinaryStratum, g: Group) -> f64 {
        let p = self.adjusted_rate(s, g);
        p * (1.0 - p) / s.size(g) as f64
    }

    /// Variance of the stratum difference.
    pub fn difference_variance(self, s: &BinaryStratum) -> f64 {
        self.cell_variance(s, Group::Treated) + self.cell_variance(s, Group::Control)
    }
}

/// Wilson score interval for `x` successes out of `n`.
pub fn wilson_ci(x: u64, n: u64, level: f64) -> Result<ConfidenceInterval> {
    check_level(level)?;
    if n == 0 || x > n {
        return Err(Error::invariant("wilson", format!("need 0 <= x <= n, n >= 1; got x={x}, n={n}")));
    }
    let (xf, nf) = (x as f64, n as f64);
    let z = z_for_level(level);
    let z2 = z * z;
    let p = xf / nf;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lower = if x == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let upper = if x == n { 1.0 } else { (centre + half).clamp(p, 1.0) };
    ConfidenceInterval::new(lower, upper, level)
}

fn check_data(data: &[BinaryStratum]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyStrata);
    }
    data.iter().try_for_each(BinaryStratum::check)
}

pub fn weight_inputs(data: &[BinaryStratum], policy: ZeroCellPolicy) -> Vec<WeightInputs> {
    data.iter()
        .map(|s| WeightInputs {
            n_control: s.n0 as f64,
            n_treated: s.n1 as f64,
            variance: policy.difference_variance(s),
            difference: s.difference(),
        })
        .collect()
}

/// Resolves a weighting scheme on binary data. INV and MR use the
/// risk-difference variance on both scales.
pub fn resolve_weights(data: &[BinaryStratum], scheme: &WeightScheme, policy: ZeroCellPolicy) -> Result<WeightSpec> {
    check_data(data)?;
    weights::resolve(scheme, &weight_inputs(data, policy))
}

/// Minimum-risk continuity correction `(3/16) / sum n1 n0 / (n1 + n0)`.
pub fn mr_continuity(data: &[BinaryStratum]) -> f64 {
    let h: f64 = data.iter().map(|s| (s.n1 * s.n0) as f64 / (s.n1 + s.n0) as f64).sum();
    0.1875 / h
}

/// Per-stratum summaries: raw rate, policy-adjusted variance, Wilson interval.
pub fn summaries(data: &[BinaryStratum], level: f64, policy: ZeroCellPolicy) -> Result<Vec<Stratum>> {
    check_data(data)?;
    data.iter()
        .map(|s| {
            let cell = |g: Group| {
                StratumGroupSummary::new(
                    s.rate(g),
                    policy.cell_variance(s, g),
                    wilson_ci(s.events(g), s.size(g), level)?,
                    s.size(g),
                )
            };
            Ok(Stratum::new(cell(Group::Control)?, cell(Group::Treated)?))
        })
        .collect()
}

/// Wilson intervals refitted at any level.
pub struct WilsonProvider<'a>(pub &'a [BinaryStratum]);

impl CiProvider for WilsonProvider<'_> {
    fn group_ci(&self, stratum: usize, group: Group, level: f64) -> Result<ConfidenceInterval> {
        let s = &self.0[stratum];
        wilson_ci(s.events(group), s.size(group), level)
    }
}

fn pooled(data: &[BinaryStratum], w: &[f64], g: Group) -> f64 {
    data.iter().zip(w).map(|(s, w)| w * s.rate(g)).sum()
}

fn result(
    method: MethodId,
    scale: Scale,
    estimate: f64,
    lower: f64,
    upper: f64,
    level: f64,
    weights: &WeightSpec,
    gamma: Option<Gamma>,
) -> Result<EffectResult> {
    let r = EffectResult {
        method,
        scale,
        estimate,
        ci: ConfidenceInterval { lower, upper, level },
        weights: weights.clone(),
        gamma,
        corrections: Vec::new(),
    };
    r.check()?;
    Ok(r)
}

/// Delta-method (Wald) interval for the weighted risk difference.
pub fn wald_rd_ci(data: &[BinaryStratum], weights: &WeightSpec, level: f64, policy: ZeroCellPolicy) -> Result<EffectResult> {
    check_level(level)?;
    check_data(data)?;
    weights.check(data.len())?;
    let w = &weights.resolved;
    let est = pooled(data, w, Group::Treated) - pooled(data, w, Group::Control);
    let var: f64 = data.iter().zip(w).map(|(s, w)| w * w * policy.difference_variance(s)).sum();
    let h = z_for_level(level) * var.sqrt();
    result(MethodId::Wald, Scale::Difference, est, est - h, est + h, level, weights, None)
}

/// Log-scale Wald interval for the weighted rate ratio.
pub fn asy_rr_ci(data: &[BinaryStratum], weights: &WeightSpec, level: f64, policy: ZeroCellPolicy) -> Result<EffectResult> {
    check_level(level)?;
    check_data(data)?;
    weights.check(data.len())?;
    let w = &weights.resolved;
    let t1 = pooled(data, w, Group::Treated);
    let t0 = pooled(data, w, Group::Control);
    for (g, t) in [(Group::Treated, t1), (Group::Control, t0)] {
        if !(t > 0.0) {
            return Err(Error::ZeroPooledRate(g));
        }
    }
    let group_var = |g: Group| -> f64 { data.iter().zip(w).map(|(s, w)| w * w * policy.cell_variance(s, g)).sum() };
    let var = group_var(Group::Treated) / (t1 * t1) + group_var(Group::Control) / (t0 * t0);
    let rr = t1 / t0;
    let h = z_for_level(level) * var.sqrt();
    result(MethodId::Asy, Scale::Ratio, rr, rr * (-h).exp(), rr * h.exp(), level, weights, None)
}

/// Dually consistent interval for the MH risk difference.
///
/// The variance substitutes the pooled difference into the stratum cells:
/// `v_s1 = [(p0 + d)(1 - p1) + p1 (1 - p0 - d)] / (2 n1)` and
/// `v_s0 = [(p1 - d)(1 - p0) + p0 (1 - p1 + d)] / (2 n0)`.
pub fn dc_rd_ci(data: &[BinaryStratum], level: f64) -> Result<EffectResult> {
    check_level(level)?;
    check_data(data)?;
    if data.iter().all(|s| s.x0 + s.x1 == 0) {
        return Err(Error::Incomputable("no events in the study".into()));
    }
    let weights = resolve_weights(data, &WeightScheme::Mh, ZeroCellPolicy::None)?;
    let w = &weights.resolved;
    let d = pooled(data, w, Group::Treated) - pooled(data, w, Group::Control);
    let var: f64 = data
        .iter()
        .zip(w)
        .map(|(s, w)| {
            let (p1, p0) = (s.rate(Group::Treated), s.rate(Group::Control));
            let v1 = ((p0 + d) * (1.0 - p1) + p1 * (1.0 - p0 - d)) / (2.0 * s.n1 as f64);
            let v0 = ((p1 - d) * (1.0 - p0) + p0 * (1.0 - p1 + d)) / (2.0 * s.n0 as f64);
            w * w * (v1 + v0)
        })
        .sum();
    let h = z_for_level(level) * var.max(0.0).sqrt();
    result(MethodId::Dc, Scale::Difference, d, d - h, d + h, level, &weights, None)
}

/// Dually consistent interval for the MH rate ratio.
///
/// `var(log RR) = sum W_s (pbar_s - p_s0 p_s1) / (sum W_s p_s0 * sum W_s p_s1)`
/// with unnormalized `W_s = n1 n0 / n` and `pbar_s` the stratum's pooled rate.
pub fn dc_rr_ci(data: &[BinaryStratum], level: f64) -> Result<EffectResult> {
    check_level(level)?;
    check_data(data)?;
    for g in Group::BOTH {
        if data.iter().all(|s| s.events(g) == 0) {
            return Err(Error::Incomputable(format!("no events in the {g} group")));
        }
    }
    let weights = resolve_weights(data, &WeightScheme::Mh, ZeroCellPolicy::None)?;
    let mut num = 0.0;
    let mut a0 = 0.0;
    let mut a1 = 0.0;
    for s in data {
        let (n0, n1) = (s.n0 as f64, s.n1 as f64);
        let wt = n1 * n0 / (n0 + n1);
        let (p0, p1) = (s.rate(Group::Control), s.rate(Group::Treated));
        let pbar = (n0 * p0 + n1 * p1) / (n0 + n1);
        num += wt * (pbar - p0 * p1);
        a0 += wt * p0;
        a1 += wt * p1;
    }
    let rr = a1 / a0;
    let h = z_for_level(level) * (num / (a0 * a1)).sqrt();
    result(MethodId::Dc, Scale::Ratio, rr, rr * (-h).exp(), rr * h.exp(), level, &weights, None)
}

/// Yan–Su interval for the weighted risk difference, with binomial variances
/// evaluated at the pooled level-`(1 - gamma_g)` limits.
pub fn ys_rd_ci(
    data: &[BinaryStratum],
    weights: &WeightSpec,
    level: f64,
    policy: ZeroCellPolicy,
) -> Result<EffectResult> {
    check_level(level)?;
    let strata = summaries(data, level, policy)?;
    weights.check(data.len())?;
    let w = &weights.resolved;
    let provider = WilsonProvider(data);
    let alpha = 1.0 - level;
    let sigmas = |g: Group| -> Vec<f64> { strata.iter().map(|s| s.group(g).variance.sqrt()).collect() };
    let g1 = gamma_level(w, &sigmas(Group::Treated), alpha)?;
    let g0 = gamma_level(w, &sigmas(Group::Control), alpha)?;
    let p1 = pool_group(&strata, weights, Group::Treated, g1, &provider)?;
    let p0 = pool_group(&strata, weights, Group::Control, g0, &provider)?;
    let lambda = |g: Group| -> f64 { data.iter().zip(w).map(|(s, w)| w * w / s.size(g) as f64).sum() };
    let (l1, l0) = (lambda(Group::Treated), lambda(Group::Control));
    let z = z_for_level(level);
    let est = p1.tau_hat - p0.tau_hat;
    let var_l = l1 * p1.lower * (1.0 - p1.lower) + l0 * p0.upper * (1.0 - p0.upper);
    let var_u = l1 * p1.upper * (1.0 - p1.upper) + l0 * p0.lower * (1.0 - p0.lower);
    result(
        MethodId::Ys,
        Scale::Difference,
        est,
        est - z * var_l.sqrt(),
        est + z * var_u.sqrt(),
        level,
        weights,
        Some(Gamma { control: g0, treated: g1 }),
    )
}

/// Bias of the unstratified risk difference with two strata sharing a common
/// difference `delta`, where `r_s = n_s1 / n_s0`.
///
/// Evaluated directly as the expected pooled-rate difference minus `delta`;
/// the closed form is `n10 n20 (r1 - r2)(p10 - p20) / ((n10 r1 + n20 r2)(n10 + n20))`.
pub fn unstratified_bias(p10: f64, p20: f64, n10: f64, n20: f64, r1: f64, r2: f64, delta: f64) -> f64 {
    let (n11, n21) = (r1 * n10, r2 * n20);
    let (p11, p21) = (p10 + delta, p20 + delta);
    let treated = (n11 * p11 + n21 * p21) / (n11 + n21);
    let control = (n10 * p10 + n20 * p20) / (n10 + n20);
    treated - control - delta
}

/// Options for [`analyze_binary`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryOptions {
    pub scheme: WeightScheme,
    pub methods: Vec<MethodId>,
    pub scales: Vec<Scale>,
    pub level: f64,
    pub policy: ZeroCellPolicy,
}

impl Default for BinaryOptions {
    fn default() -> Self {
        BinaryOptions {
            scheme: WeightScheme::Mh,
            methods: MethodId::ALL.to_vec(),
            scales: vec![Scale::Difference, Scale::Ratio],
            level: 0.95,
            policy: ZeroCellPolicy::None,
        }
    }
}

/// Computes one method on one scale, with the MR correction on difference intervals.
pub fn compute_binary(
    data: &[BinaryStratum],
    strata: &[Stratum],
    weights: &WeightSpec,
    method: MethodId,
    scale: Scale,
    level: f64,
    policy: ZeroCellPolicy,
) -> Result<EffectResult> {
    if !method.supports(scale) {
        return Err(Error::UnsupportedMethod { method, scale });
    }
    let opts = EngineOptions::new(level);
    let provider = WilsonProvider(data);
    let diff = WithinStratumMover::new(strata, &provider);
    let base = match (scale, method) {
        (Scale::Difference, MethodId::Wald) => wald_rd_ci(data, weights, level, policy),
        (Scale::Difference, MethodId::Dc) => dc_rd_ci(data, level),
        (Scale::Difference, MethodId::Ys) => ys_rd_ci(data, weights, level, policy),
        (Scale::Difference, MethodId::Av) => av_diff_ci(strata, weights, 1.0, level),
        (Scale::Difference, MethodId::Ac) => ac_diff_ci(strata, weights, 1.0, &opts, &provider),
        (Scale::Difference, MethodId::Ac2) => ac2_diff_ci(strata, weights, 1.0, &opts, &diff),
        (Scale::Ratio, MethodId::Asy) => asy_rr_ci(data, weights, level, policy),
        (Scale::Ratio, MethodId::Dc) => dc_rr_ci(data, level),
        (Scale::Ratio, MethodId::Av) => fieller_av_ratio(strata, weights, level),
        (Scale::Ratio, MethodId::Avl) => avl_ratio(strata, weights, level),
        (Scale::Ratio, MethodId::Ac) => fieller_ac_ratio(strata, weights, &opts, &provider),
        (Scale::Ratio, MethodId::Acl) => acl_ratio(strata, weights, &opts, &provider),
        (Scale::Ratio, MethodId::Ac2) => ac2_ratio_bisection(strata, weights, &opts, &provider, &diff),
        _ => Err(Error::UnsupportedMethod { method, scale }),
    }?;
    if scale == Scale::Difference && matches!(weights.scheme, WeightScheme::Mr) {
        Ok(base.widen(mr_continuity(data)))
    } else {
        Ok(base)
    }
}

/// Runs every requested method on every requested scale.
///
/// Unsupported method × scale pairs are skipped, as is DC under non-MH
/// weights (it is defined only for MH). Per-method errors are collected in
/// [`Analysis::failures`]; setup errors (bad data, unresolvable weights) abort.
pub fn analyze_binary(data: &[BinaryStratum], opts: &BinaryOptions) -> Result<Analysis> {
    check_level(opts.level)?;
    let weights = resolve_weights(data, &opts.scheme, opts.policy)?;
    let strata = summaries(data, opts.level, opts.policy)?;
    let mut out = Analysis::default();
    for &scale in &opts.scales {
        for &method in &opts.methods {
            if !method.supports(scale) || (method == MethodId::Dc && !matches!(opts.scheme, WeightScheme::Mh)) {
                continue;
            }
            match compute_binary(data, &strata, &weights, method, scale, opts.level, opts.policy) {
                Ok(r) => out.results.push(r),
                Err(e) => out.failures.push(MethodFailure { method, scale, error: e.to_string() }),
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Adjustment;
    use proptest::prelude::*;

    pub(crate) fn bioassay() -> Vec<BinaryStratum> {
        [(5, 79, 4, 16), (3, 87, 2, 16), (10, 90, 4, 18), (3, 82, 1, 15)]
            .iter()
            .map(|&(x0, n0, x1, n1)| BinaryStratum::new(x0, n0, x1, n1).unwrap())
            .collect()
    }

    #[test]
    fn wilson_edges() {
        let c = wilson_ci(0, 10, 0.95).unwrap();
        assert_eq!(c.lower, 0.0);
        let c = wilson_ci(10, 10, 0.95).unwrap();
        assert_eq!(c.upper, 1.0);
    }

    #[test]
    fn wilson_matches_closed_form() {
        // quadratic-root form evaluated independently
        let c = wilson_ci(5, 79, 0.95).unwrap();
        assert!((c.lower - 0.027_334_864_880_068_373).abs() < 1e-12, "{}", c.lower);
        assert!((c.upper - 0.139_748_851_627_788_13).abs() < 1e-12, "{}", c.upper);
    }

    #[test]
    fn bioassay_weights() {
        let d = bioassay();
        let mh = resolve_weights(&d, &WeightScheme::Mh, ZeroCellPolicy::None).unwrap();
        for (w, e) in mh.resolved.iter().zip([0.2441, 0.2480, 0.2752, 0.2327]) {
            assert!((w - e).abs() < 5e-5);
        }
        let inv = resolve_weights(&d, &WeightScheme::Inv, ZeroCellPolicy::None).unwrap();
        for (w, e) in inv.resolved.iter().zip([0.15114, 0.26107, 0.17613, 0.41166]) {
            assert!((w - e).abs() < 5e-6);
        }
        let mr = resolve_weights(&d, &WeightScheme::Mr, ZeroCellPolicy::None).unwrap();
        for (w, e) in mr.resolved.iter().zip([0.21689, 0.26848, 0.19647, 0.31816]) {
            assert!((w - e).abs() < 5e-6);
        }
    }

    #[test]
    fn identical_strata_inv_is_even() {
        let s = BinaryStratum::new(3, 20, 6, 20).unwrap();
        let w = resolve_weights(&[s, s], &WeightScheme::Inv, ZeroCellPolicy::None).unwrap();
        assert_eq!(w.resolved, vec![0.5, 0.5]);
    }

    #[test]
    fn continuity_correction_values() {
        assert!((mr_continuity(&bioassay()) - 0.003_440_4).abs() < 1e-6);
        let one = [BinaryStratum::new(1, 4, 2, 4).unwrap()];
        assert!((mr_continuity(&one) - 0.09375).abs() < 1e-15);
        let two = [BinaryStratum::new(1, 8, 2, 8).unwrap()];
        assert!((mr_continuity(&two) - 0.09375 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mr_widening_is_two_c() {
        let d = bioassay();
        let w = resolve_weights(&d, &WeightScheme::Mr, ZeroCellPolicy::None).unwrap();
        let strata = summaries(&d, 0.95, ZeroCellPolicy::None).unwrap();
        let c = mr_continuity(&d);
        for m in [MethodId::Wald, MethodId::Av, MethodId::Ac, MethodId::Ac2, MethodId::Ys] {
            let widened = compute_binary(&d, &strata, &w, m, Scale::Difference, 0.95, ZeroCellPolicy::None).unwrap();
            let mh_like = WeightSpec { scheme: WeightScheme::Fixed(w.resolved.clone()), ..w.clone() };
            let base = compute_binary(&d, &strata, &mh_like, m, Scale::Difference, 0.95, ZeroCellPolicy::None).unwrap();
            assert!((widened.ci.width() - base.ci.width() - 2.0 * c).abs() < 1e-14, "{m}");
            assert!(widened.corrections.contains(&Adjustment::MrContinuity { c }));
        }
    }

    #[test]
    fn equal_groups_center_wald_at_zero() {
        let d = [BinaryStratum::new(3, 20, 3, 20).unwrap(), BinaryStratum::new(7, 30, 7, 30).unwrap()];
        let w = resolve_weights(&d, &WeightScheme::Mh, ZeroCellPolicy::None).unwrap();
        let r = wald_rd_ci(&d, &w, 0.95, ZeroCellPolicy::None).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!((r.ci.lower + r.ci.upper).abs() < 1e-15);
        assert!(asy_rr_ci(&d, &w, 0.95, ZeroCellPolicy::None).unwrap().ci.contains(1.0));
        assert!(dc_rd_ci(&d, 0.95).unwrap().ci.contains(0.0));
        assert!(dc_rr_ci(&d, 0.95).unwrap().ci.contains(1.0));
        let ys = ys_rd_ci(&d[..1], &WeightSpec::fixed(&[1.0]).unwrap(), 0.95, ZeroCellPolicy::None).unwrap();
        assert!((ys.ci.lower + ys.ci.upper).abs() < 1e-15);
    }

    #[test]
    fn asy_matches_delta_method_script() {
        // independent numpy recomputation of the log-RR delta variance
        let d = [BinaryStratum::new(2, 11, 5, 13).unwrap(), BinaryStratum::new(4, 9, 6, 10).unwrap()];
        let w = WeightSpec::fixed(&[0.4, 0.6]).unwrap();
        let r = asy_rr_ci(&d, &w, 0.95, ZeroCellPolicy::None).unwrap();
        assert!((r.estimate - 1.514_010_989_010_989_2).abs() < 1e-10, "{}", r.estimate);
        assert!((r.ci.lower - 0.711_791_186_522_974_9).abs() < 1e-10, "{}", r.ci.lower);
        assert!((r.ci.upper - 3.220_367_599_721_672).abs() < 1e-10, "{}", r.ci.upper);
    }

    #[test]
    fn sato_variance_matches_independent_form() {
        // Sato (1989) in its original P/Q notation:
        // var = (d * sum P_s + sum Q_s) / (sum W_s)^2,
        // P_s = (n1^2 x0 - n0^2 x1 + n1 n0 (n0 - n1)/2) / n^2,
        // Q_s = (x1 (n0 - x0) + x0 (n1 - x1)) / (2 n).
        let d = [
            BinaryStratum::new(0, 3, 1, 4).unwrap(),
            BinaryStratum::new(1, 5, 0, 2).unwrap(),
            BinaryStratum::new(2, 4, 3, 3).unwrap(),
        ];
        let r = dc_rd_ci(&d, 0.95).unwrap();
        let (mut sp, mut sq, mut sw) = (0.0, 0.0, 0.0);
        for s in &d {
            let (x0, n0, x1, n1) = (s.x0 as f64, s.n0 as f64, s.x1 as f64, s.n1 as f64);
            let n = n0 + n1;
            sp += (n1 * n1 * x0 - n0 * n0 * x1 + n1 * n0 * (n0 - n1) / 2.0) / (n * n);
            sq += (x1 * (n0 - x0) + x0 * (n1 - x1)) / (2.0 * n);
            sw += n1 * n0 / n;
        }
        let var = (r.estimate * sp + sq) / (sw * sw);
        let h = z_for_level(0.95) * var.sqrt();
        assert!((r.ci.lower - (r.estimate - h)).abs() < 1e-12);
        assert!((r.ci.upper - (r.estimate + h)).abs() < 1e-12);
    }

    #[test]
    fn greenland_robins_matches_independent_form() {
        // var = sum (n1 n0 (x1 + x0) / n^2 - x1 x0 / n) / (R * S),
        // R = sum x1 n0 / n, S = sum x0 n1 / n
        let d = [BinaryStratum::new(2, 10, 4, 12).unwrap(), BinaryStratum::new(1, 7, 3, 9).unwrap()];
        let r = dc_rr_ci(&d, 0.9).unwrap();
        let (mut num, mut rr, mut ss) = (0.0, 0.0, 0.0);
        for s in &d {
            let (x0, n0, x1, n1) = (s.x0 as f64, s.n0 as f64, s.x1 as f64, s.n1 as f64);
            let n = n0 + n1;
            num += n1 * n0 * (x1 + x0) / (n * n) - x1 * x0 / n;
            rr += x1 * n0 / n;
            ss += x0 * n1 / n;
        }
        let h = z_for_level(0.9) * (num / (rr * ss)).sqrt();
        assert!((r.estimate - rr / ss).abs() < 1e-13);
        assert!((r.ci.lower.ln() - (r.estimate.ln() - h)).abs() < 1e-12);
        assert!((r.ci.upper.ln() - (r.estimate.ln() + h)).abs() < 1e-12);
    }

    #[test]
    fn dc_needs_events() {
        let d = [BinaryStratum::new(0, 10, 0, 10).unwrap()];
        assert!(matches!(dc_rd_ci(&d, 0.95), Err(Error::Incomputable(_))));
        let d = [BinaryStratum::new(0, 10, 2, 10).unwrap()];
        assert!(matches!(dc_rr_ci(&d, 0.95), Err(Error::Incomputable(_))));
    }

    #[test]
    fn bias_examples() {
        assert!(unstratified_bias(0.1, 0.5, 80.0, 20.0, 2.0, 2.0, 0.1).abs() < 1e-16);
        assert!(unstratified_bias(0.3, 0.3, 80.0, 20.0, 0.25, 4.0, 0.1).abs() < 1e-16);
        let (n10, n20, r1, r2, p10, p20) = (80.0, 20.0, 0.25, 4.0, 0.1, 0.5);
        let closed = n10 * n20 * (r1 - r2) * (p10 - p20) / ((n10 * r1 + n20 * r2) * (n10 + n20));
        let b = unstratified_bias(p10, p20, n10, n20, r1, r2, 0.2);
        assert!((b - closed).abs() < 1e-15);
        assert!((b - 0.24).abs() < 1e-15);
    }

    #[test]
    fn half_event_never_moves_estimates() {
        let d = [BinaryStratum::new(0, 10, 10, 10).unwrap(), BinaryStratum::new(2, 10, 3, 10).unwrap()];
        let opts = BinaryOptions { scheme: WeightScheme::Inv, policy: ZeroCellPolicy::HalfEvent, ..Default::default() };
        let a = analyze_binary(&d, &opts).unwrap();
        let w = &a.results[0].weights.resolved;
        let expected = w[0] * 1.0 + w[1] * 0.1;
        let wald = a.get(MethodId::Wald, Scale::Difference).unwrap();
        assert!((wald.estimate - expected).abs() < 1e-15);
        assert!(a.get(MethodId::Dc, Scale::Difference).is_none());
    }

    proptest! {
        #[test]
        fn wilson_within_unit_interval(n in 1u64..=200, frac in 0.0f64..=1.0, level in 0.5f64..0.999) {
            let x = ((n as f64) * frac).round() as u64;
            let c = wilson_ci(x, n, level).unwrap();
            prop_assert!(0.0 <= c.lower && c.upper <= 1.0);
            prop_assert!(c.contains(x as f64 / n as f64));
        }

        #[test]
        fn constant_size_ratio_mh_rr_is_crude(
            cells in proptest::collection::vec((1u64..6, 0u64..=10, 0u64..=10), 1..4),
            k in 1u64..4,
        ) {
            // n1 = k n0 in every stratum
            let d: Vec<BinaryStratum> = cells.iter().map(|&(m, a, b)| {
                let n0 = 10 * m;
                BinaryStratum::new(a.min(n0), n0, (b * k).min(n0 * k), n0 * k).unwrap()
            }).collect();
            prop_assume!(d.iter().any(|s| s.x0 > 0));
            let w = resolve_weights(&d, &WeightScheme::Mh, ZeroCellPolicy::None).unwrap();
            let t1: f64 = d.iter().zip(&w.resolved).map(|(s, w)| w * s.rate(Group::Treated)).sum();
            let t0: f64 = d.iter().zip(&w.resolved).map(|(s, w)| w * s.rate(Group::Control)).sum();
            let crude = d.iter().map(|s| s.x1).sum::<u64>() as f64 / d.iter().map(|s| s.n1).sum::<u64>() as f64
                / (d.iter().map(|s| s.x0).sum::<u64>() as f64 / d.iter().map(|s| s.n0).sum::<u64>() as f64);
            prop_assert!((t1 / t0 - crude).abs() < 1e-12 * crude.max(1.0));
        }
    }
}
