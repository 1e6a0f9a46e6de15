//! Endpoint-agnostic MOVER interval constructors.
//!
//! Every constructor consumes per-stratum [`Stratum`] summaries and a resolved
//! [`WeightSpec`]. Methods that need stratum intervals at an adjusted level
//! `1 - gamma` draw them from a [`CiProvider`]; the AC2 constructions draw
//! per-stratum difference intervals from a [`StratumDifferenceCi`].

use crate::error::{Error, Result};
use crate::normal::{two_sided_alpha, z_for_level};
use crate::types::{
    check_level, Adjustment, ConfidenceInterval, EffectResult, Estimate, Gamma, Group, MethodId, Scale,
    Stratum, WeightSpec,
};

/// Where the per-stratum standard deviations entering gamma come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceSource {
    /// The variance carried by each summary (delta-method variance).
    #[default]
    Delta,
    /// `(u - l)^2 / (4 z^2)` recovered from each summary's own interval.
    RecoveredFromCi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub level: f64,
    pub variance_source: VarianceSource,
}

impl EngineOptions {
    pub fn new(level: f64) -> Self {
        EngineOptions { level, variance_source: VarianceSource::Delta }
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.level
    }
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions::new(0.95)
    }
}

/// Produces a stratum × group interval at an arbitrary level.
pub trait CiProvider: Sync {
    fn group_ci(&self, stratum: usize, group: Group, level: f64) -> Result<ConfidenceInterval>;

    /// `true` when re-leveled intervals are approximations.
    fn is_approximate(&self) -> bool {
        false
    }
}

/// Serves only the intervals already stored in the summaries.
pub struct StoredIntervals<'a>(pub &'a [Stratum]);

impl CiProvider for StoredIntervals<'_> {
    fn group_ci(&self, stratum: usize, group: Group, level: f64) -> Result<ConfidenceInterval> {
        let ci = self.0[stratum].group(group).ci;
        if (ci.level - level).abs() < 1e-12 {
            Ok(ci)
        } else {
            Err(Error::RefitUnavailable { stratum, group, level })
        }
    }
}

/// Produces an interval for `delta_s1 - phi * delta_s0` within one stratum.
pub trait StratumDifferenceCi: Sync {
    fn difference_ci(&self, stratum: usize, phi: f64, level: f64) -> Result<ConfidenceInterval>;

    fn is_approximate(&self) -> bool {
        false
    }
}

/// The default AC2 provider: the unstratified MOVER combiner applied inside
/// each stratum to group intervals re-leveled by a [`CiProvider`].
pub struct WithinStratumMover<'a, P: ?Sized> {
    pub strata: &'a [Stratum],
    pub groups: &'a P,
}

impl<'a, P: CiProvider + ?Sized> WithinStratumMover<'a, P> {
    pub fn new(strata: &'a [Stratum], groups: &'a P) -> Self {
        WithinStratumMover { strata, groups }
    }
}

impl<P: CiProvider + ?Sized> StratumDifferenceCi for WithinStratumMover<'_, P> {
    fn difference_ci(&self, stratum: usize, phi: f64, level: f64) -> Result<ConfidenceInterval> {
        let s = &self.strata[stratum];
        let c1 = self.groups.group_ci(stratum, Group::Treated, level)?;
        let c0 = self.groups.group_ci(stratum, Group::Control, level)?;
        let (e1, e0) = (s.treated.estimate, s.control.estimate);
        let d = e1 - phi * e0;
        let lo = d - ((c1.lower - e1).powi(2) + phi * phi * (c0.upper - e0).powi(2)).sqrt();
        let hi = d + ((c1.upper - e1).powi(2) + phi * phi * (c0.lower - e0).powi(2)).sqrt();
        Ok(ConfidenceInterval { lower: lo, upper: hi, level })
    }

    fn is_approximate(&self) -> bool {
        self.groups.is_approximate()
    }
}

/// Unstratified MOVER interval for `tau_1 - tau_0`.
pub fn mover_diff_unstratified(treated: Estimate, control: Estimate) -> Result<ConfidenceInterval> {
    for e in [&treated, &control] {
        if !e.ci.contains(e.value) {
            return Err(Error::MalformedInterval { estimate: e.value, lower: e.ci.lower, upper: e.ci.upper });
        }
    }
    if (treated.ci.level - control.ci.level).abs() > 1e-12 {
        return Err(Error::invariant(
            "level",
            format!("group intervals at different levels {} and {}", treated.ci.level, control.ci.level),
        ));
    }
    let d = treated.value - control.value;
    let lo = d - (treated.ci.lower - treated.value).hypot(control.ci.upper - control.value);
    let hi = d + (treated.ci.upper - treated.value).hypot(control.ci.lower - control.value);
    ConfidenceInterval::new(lo, hi, treated.ci.level)
}

/// Adjusted per-stratum tail probability `gamma` with
/// `z_{gamma/2} = z_{alpha/2} * sqrt(sum w^2 sigma^2) / sum w sigma`.
pub fn gamma_level(weights: &[f64], sigmas: &[f64], alpha: f64) -> Result<f64> {
    if weights.len() != sigmas.len() {
        return Err(Error::DimensionMismatch(format!("{} weights, {} sigmas", weights.len(), sigmas.len())));
    }
    if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::invariant("sigma", format!("{s} is negative")));
    }
    let linear: f64 = weights.iter().zip(sigmas).map(|(w, s)| w * s).sum();
    if !(linear > 0.0) {
        return Err(Error::AllZeroVariances);
    }
    let quad: f64 = weights.iter().zip(sigmas).map(|(w, s)| (w * s).powi(2)).sum();
    let z = quad.sqrt() / linear * z_for_level(1.0 - alpha);
    // Cauchy–Schwarz gives gamma >= alpha; guard the rounding at the boundary.
    Ok(two_sided_alpha(z).max(alpha))
}

/// Pooled estimate and pooled stratum limits for one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupPooled {
    pub tau_hat: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Quadratic coefficients of the Fieller limits.
///
/// The lower limit solves `a_l phi^2 - 2 b phi + c_l = 0`, the upper one
/// `a_u phi^2 - 2 b phi + c_u = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiellerCoefficients {
    pub b: f64,
    pub a_l: f64,
    pub c_l: f64,
    pub a_u: f64,
    pub c_u: f64,
}

impl FiellerCoefficients {
    /// Builds the coefficients from the pooled estimates and the four
    /// recovered squared margins (treated-lower, control-upper, control-lower, treated-upper).
    pub fn from_margins(t1: f64, t0: f64, m1_lower: f64, m0_upper: f64, m0_lower: f64, m1_upper: f64) -> Self {
        FiellerCoefficients {
            b: t1 * t0,
            a_l: t0 * t0 - m0_upper,
            c_l: t1 * t1 - m1_lower,
            a_u: t0 * t0 - m0_lower,
            c_u: t1 * t1 - m1_upper,
        }
    }

    /// Returns `(lower, upper, adjustments)`; the upper limit may be `+inf`.
    pub fn solve(&self) -> Result<(f64, f64, Vec<Adjustment>)> {
        let mut adj = Vec::new();
        let lower = if self.c_l < 0.0 {
            adj.push(Adjustment::LowerSetToZero);
            0.0
        } else if self.c_l == 0.0 {
            0.0
        } else {
            let disc = (self.b * self.b - self.a_l * self.c_l).max(0.0);
            let denom = self.b + disc.sqrt();
            if denom <= 0.0 {
                return Err(Error::Incomputable(
                    "control group estimate and interval are all zero".into(),
                ));
            }
            // Rationalized form of (b - sqrt(disc)) / a_l, stable as a_l -> 0.
            self.c_l / denom
        };
        let upper = if self.a_u <= 0.0 {
            adj.push(Adjustment::UpperUnbounded);
            f64::INFINITY
        } else {
            let disc = (self.b * self.b - self.a_u * self.c_u).max(0.0);
            (self.b + disc.sqrt()) / self.a_u
        };
        Ok((lower, upper, adj))
    }
}

fn check_weights(strata: &[Stratum], weights: &WeightSpec) -> Result<()> {
    if strata.is_empty() {
        return Err(Error::EmptyStrata);
    }
    weights.check(strata.len())
}

fn check_stored_level(strata: &[Stratum], level: f64) -> Result<()> {
    for (i, s) in strata.iter().enumerate() {
        for g in Group::BOTH {
            let c = s.group(g);
            if (c.ci.level - level).abs() > 1e-12 {
                return Err(Error::invariant(
                    format!("strata[{i}].{g}.ci.level"),
                    format!("{} differs from requested {}", c.ci.level, level),
                ));
            }
            if !c.ci.contains(c.estimate) {
                return Err(Error::MalformedInterval { estimate: c.estimate, lower: c.ci.lower, upper: c.ci.upper });
            }
        }
    }
    Ok(())
}

fn pooled_estimate(strata: &[Stratum], w: &[f64], g: Group) -> f64 {
    strata.iter().zip(w).map(|(s, w)| w * s.group(g).estimate).sum()
}

/// Sum of `w_s^2 (limit_sg - estimate_sg)^2` over strata, using the stored intervals.
fn recovered_square(strata: &[Stratum], w: &[f64], g: Group, upper: bool) -> f64 {
    strata
        .iter()
        .zip(w)
        .map(|(s, w)| {
            let c = s.group(g);
            let lim = if upper { c.ci.upper } else { c.ci.lower };
            (w * (lim - c.estimate)).powi(2)
        })
        .sum()
}

fn recovered_sigma(c: &crate::types::StratumGroupSummary) -> f64 {
    (c.ci.upper - c.ci.lower) / (2.0 * z_for_level(c.ci.level))
}

fn group_sigmas(strata: &[Stratum], g: Group, source: VarianceSource) -> Vec<f64> {
    strata
        .iter()
        .map(|s| {
            let c = s.group(g);
            match source {
                VarianceSource::Delta => c.variance.sqrt(),
                VarianceSource::RecoveredFromCi => recovered_sigma(c),
            }
        })
        .collect()
}

/// Gamma for sigmas from `source`, falling back to CI-recovered sigmas when
/// every delta variance is zero.
fn gamma_with_fallback(
    w: &[f64],
    sigmas: impl Fn(VarianceSource) -> Vec<f64>,
    opts: &EngineOptions,
    adj: &mut Vec<Adjustment>,
) -> Result<f64> {
    match gamma_level(w, &sigmas(opts.variance_source), opts.alpha()) {
        Err(Error::AllZeroVariances) if opts.variance_source == VarianceSource::Delta => {
            match gamma_level(w, &sigmas(VarianceSource::RecoveredFromCi), opts.alpha()) {
                Ok(g) => {
                    if !adj.contains(&Adjustment::GammaVarianceFromCi) {
                        adj.push(Adjustment::GammaVarianceFromCi);
                    }
                    Ok(g)
                }
                // point intervals at every level: gamma cannot move the pooled limits
                Err(Error::AllZeroVariances) => Ok(opts.alpha()),
                Err(e) => Err(e),
            }
        }
        Err(Error::AllZeroVariances) => Ok(opts.alpha()),
        other => other,
    }
}

/// Pools one group's level-`(1 - gamma)` stratum limits.
pub fn pool_group(
    strata: &[Stratum],
    weights: &WeightSpec,
    g: Group,
    gamma: f64,
    provider: &dyn CiProvider,
) -> Result<GroupPooled> {
    let w = &weights.resolved;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let ci = provider.group_ci(i, g, 1.0 - gamma)?;
        lower += wi * ci.lower;
        upper += wi * ci.upper;
    }
    Ok(GroupPooled { tau_hat: pooled_estimate(strata, w, g), lower, upper })
}

struct AcPooling {
    treated: GroupPooled,
    control: GroupPooled,
    gamma: Gamma,
    adjustments: Vec<Adjustment>,
}

fn ac_pooling(
    strata: &[Stratum],
    weights: &WeightSpec,
    opts: &EngineOptions,
    provider: &dyn CiProvider,
) -> Result<AcPooling> {
    check_level(opts.level)?;
    check_weights(strata, weights)?;
    let w = &weights.resolved;
    let mut adjustments = Vec::new();
    let g1 = gamma_with_fallback(w, |src| group_sigmas(strata, Group::Treated, src), opts, &mut adjustments)?;
    let g0 = gamma_with_fallback(w, |src| group_sigmas(strata, Group::Control, src), opts, &mut adjustments)?;
    if provider.is_approximate() {
        adjustments.push(Adjustment::ApproximateReleveling);
    }
    Ok(AcPooling {
        treated: pool_group(strata, weights, Group::Treated, g1, provider)?,
        control: pool_group(strata, weights, Group::Control, g0, provider)?,
        gamma: Gamma { control: g0, treated: g1 },
        adjustments,
    })
}

fn finish(
    method: MethodId,
    scale: Scale,
    estimate: f64,
    lower: f64,
    upper: f64,
    level: f64,
    weights: &WeightSpec,
    gamma: Option<Gamma>,
    corrections: Vec<Adjustment>,
) -> Result<EffectResult> {
    let r = EffectResult {
        method,
        scale,
        estimate,
        ci: ConfidenceInterval { lower, upper, level },
        weights: weights.clone(),
        gamma,
        corrections,
    };
    r.check()?;
    Ok(r)
}

/// Additive-variance interval for `tau_1 - phi tau_0` from the stored stratum intervals.
pub fn av_diff_ci(strata: &[Stratum], weights: &WeightSpec, phi: f64, level: f64) -> Result<EffectResult> {
    check_level(level)?;
    check_weights(strata, weights)?;
    check_stored_level(strata, level)?;
    let w = &weights.resolved;
    let t1 = pooled_estimate(strata, w, Group::Treated);
    let t0 = pooled_estimate(strata, w, Group::Control);
    let tau = t1 - phi * t0;
    let phi2 = phi * phi;
    let var_l = recovered_square(strata, w, Group::Treated, false) + phi2 * recovered_square(strata, w, Group::Control, true);
    let var_u = recovered_square(strata, w, Group::Treated, true) + phi2 * recovered_square(strata, w, Group::Control, false);
    finish(MethodId::Av, Scale::Difference, tau, tau - var_l.sqrt(), tau + var_u.sqrt(), level, weights, None, vec![])
}

/// Additive-CI interval: group-level pooled `(1 - gamma)` limits combined by MOVER.
pub fn ac_diff_ci(
    strata: &[Stratum],
    weights: &WeightSpec,
    phi: f64,
    opts: &EngineOptions,
    provider: &dyn CiProvider,
) -> Result<EffectResult> {
    let p = ac_pooling(strata, weights, opts, provider)?;
    let (t1, t0) = (p.treated.tau_hat, p.control.tau_hat);
    let tau = t1 - phi * t0;
    let lo = tau - ((p.treated.lower - t1).powi(2) + phi * phi * (p.control.upper - t0).powi(2)).sqrt();
    let hi = tau + ((p.treated.upper - t1).powi(2) + phi * phi * (p.control.lower - t0).powi(2)).sqrt();
    finish(MethodId::Ac, Scale::Difference, tau, lo, hi, opts.level, weights, Some(p.gamma), p.adjustments)
}

struct Ac2Pieces {
    tau: f64,
    lower: f64,
    upper: f64,
    gamma: f64,
    adjustments: Vec<Adjustment>,
}

fn ac2_pieces(
    strata: &[Stratum],
    weights: &WeightSpec,
    phi: f64,
    opts: &EngineOptions,
    diff: &dyn StratumDifferenceCi,
) -> Result<Ac2Pieces> {
    let w = &weights.resolved;
    let mut adjustments = Vec::new();
    let sigmas = |src: VarianceSource| -> Vec<f64> {
        let s1 = group_sigmas(strata, Group::Treated, src);
        let s0 = group_sigmas(strata, Group::Control, src);
        s1.iter().zip(&s0).map(|(a, b)| (a * a + phi * phi * b * b).sqrt()).collect()
    };
    let gamma = gamma_with_fallback(w, sigmas, opts, &mut adjustments)?;
    if diff.is_approximate() {
        adjustments.push(Adjustment::ApproximateReleveling);
    }
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut tau = 0.0;
    for (i, (s, wi)) in strata.iter().zip(w).enumerate() {
        let ci = diff.difference_ci(i, phi, 1.0 - gamma)?;
        lower += wi * ci.lower;
        upper += wi * ci.upper;
        tau += wi * (s.treated.estimate - phi * s.control.estimate);
    }
    Ok(Ac2Pieces { tau, lower, upper, gamma, adjustments })
}

/// Weighted sum of per-stratum level-`(1 - gamma)` difference intervals.
pub fn ac2_diff_ci(
    strata: &[Stratum],
    weights: &WeightSpec,
    phi: f64,
    opts: &EngineOptions,
    diff: &dyn StratumDifferenceCi,
) -> Result<EffectResult> {
    check_level(opts.level)?;
    check_weights(strata, weights)?;
    let p = ac2_pieces(strata, weights, phi, opts, diff)?;
    finish(
        MethodId::Ac2,
        Scale::Difference,
        p.tau,
        p.lower,
        p.upper,
        opts.level,
        weights,
        Some(Gamma::common(p.gamma)),
        p.adjustments,
    )
}

fn ratio_estimate(t1: f64, t0: f64) -> Result<f64> {
    if t0 == 0.0 && t1 == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    if t0 == 0.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(t1 / t0)
    }
}

fn check_nonnegative(strata: &[Stratum]) -> Result<()> {
    for s in strata {
        for g in Group::BOTH {
            if s.group(g).estimate < 0.0 {
                return Err(Error::invariant("estimate", "ratio intervals need nonnegative stratum estimates"));
            }
        }
    }
    Ok(())
}

/// Fieller interval for `tau_1 / tau_0` inverting the AC difference interval.
pub fn fieller_ac_ratio(
    strata: &[Stratum],
    weights: &WeightSpec,
    opts: &EngineOptions,
    provider: &dyn CiProvider,
) -> Result<EffectResult> {
    check_nonnegative(strata)?;
    let p = ac_pooling(strata, weights, opts, provider)?;
    let (t1, t0) = (p.treated.tau_hat, p.control.tau_hat);
    let est = ratio_estimate(t1, t0)?;
    let coef = FiellerCoefficients::from_margins(
        t1,
        t0,
        (p.treated.lower - t1).powi(2),
        (p.control.upper - t0).powi(2),
        (p.control.lower - t0).powi(2),
        (p.treated.upper - t1).powi(2),
    );
    let (lo, hi, mut adj) = coef.solve()?;
    let mut corrections = p.adjustments;
    corrections.append(&mut adj);
    finish(MethodId::Ac, Scale::Ratio, est, lo, hi, opts.level, weights, Some(p.gamma), corrections)
}

/// Log-ratio interval from the AC pooled limits, exponentiated.
pub fn acl_ratio(
    strata: &[Stratum],
    weights: &WeightSpec,
    opts: &EngineOptions,
    provider: &dyn CiProvider,
) -> Result<EffectResult> {
    let p = ac_pooling(strata, weights, opts, provider)?;
    let (t1, t0) = (p.treated.tau_hat, p.control.tau_hat);
    let vals = [
        ("treated estimate", t1),
        ("control estimate", t0),
        ("treated pooled lower", p.treated.lower),
        ("treated pooled upper", p.treated.upper),
        ("control pooled lower", p.control.lower),
        ("control pooled upper", p.control.upper),
    ];
    if let Some((name, v)) = vals.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonpositiveEstimate(format!("{name} is {v}")));
    }
    let log_ratio = (t1 / t0).ln();
    let var_l = (p.treated.lower / t1).ln().powi(2) + (p.control.upper / t0).ln().powi(2);
    let var_u = (p.treated.upper / t1).ln().powi(2) + (p.control.lower / t0).ln().powi(2);
    finish(
        MethodId::Acl,
        Scale::Ratio,
        t1 / t0,
        (log_ratio - var_l.sqrt()).exp(),
        (log_ratio + var_u.sqrt()).exp(),
        opts.level,
        weights,
        Some(p.gamma),
        p.adjustments,
    )
}

/// Fieller interval inverting the AV difference interval.
pub fn fieller_av_ratio(strata: &[Stratum], weights: &WeightSpec, level: f64) -> Result<EffectResult> {
    check_level(level)?;
    check_weights(strata, weights)?;
    check_stored_level(strata, level)?;
    check_nonnegative(strata)?;
    let w = &weights.resolved;
    let t1 = pooled_estimate(strata, w, Group::Treated);
    let t0 = pooled_estimate(strata, w, Group::Control);
    let est = ratio_estimate(t1, t0)?;
    let coef = FiellerCoefficients::from_margins(
        t1,
        t0,
        recovered_square(strata, w, Group::Treated, false),
        recovered_square(strata, w, Group::Control, true),
        recovered_square(strata, w, Group::Control, false),
        recovered_square(strata, w, Group::Treated, true),
    );
    let (lo, hi, adj) = coef.solve()?;
    finish(MethodId::Av, Scale::Ratio, est, lo, hi, level, weights, None, adj)
}

/// Log-ratio interval with MOVER-recovered group variances.
pub fn avl_ratio(strata: &[Stratum], weights: &WeightSpec, level: f64) -> Result<EffectResult> {
    check_level(level)?;
    check_weights(strata, weights)?;
    check_stored_level(strata, level)?;
    let w = &weights.resolved;
    let t1 = pooled_estimate(strata, w, Group::Treated);
    let t0 = pooled_estimate(strata, w, Group::Control);
    if !(t1 > 0.0) || !(t0 > 0.0) {
        return Err(Error::NonpositiveEstimate(format!("pooled estimates {t1} and {t0}")));
    }
    let log_ratio = (t1 / t0).ln();
    let var_l = recovered_square(strata, w, Group::Treated, false) / (t1 * t1)
        + recovered_square(strata, w, Group::Control, true) / (t0 * t0);
    let var_u = recovered_square(strata, w, Group::Treated, true) / (t1 * t1)
        + recovered_square(strata, w, Group::Control, false) / (t0 * t0);
    finish(
        MethodId::Avl,
        Scale::Ratio,
        t1 / t0,
        (log_ratio - var_l.sqrt()).exp(),
        (log_ratio + var_u.sqrt()).exp(),
        level,
        weights,
        None,
        vec![],
    )
}

const BISECTION_REL_TOL: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 200;
const MAX_DOUBLINGS: usize = 60;

/// Bisection for a sign change of `f` on `[lo, hi]` with `f(lo) > 0 >= f(hi)`.
fn bisect(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut last = f64::NAN;
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECTION_REL_TOL * mid.abs().max(f64::MIN_POSITIVE) {
            return Ok(mid);
        }
        last = f(mid)?;
        if last > 0.0 {
            lo = mid;
        } else if last < 0.0 {
            hi = mid;
        } else {
            return Ok(mid);
        }
    }
    Err(Error::NoConvergence { lo, hi, residual: last })
}

/// Fieller interval inverting the AC2 difference interval, solved by bisection
/// started from the AC Fieller limits.
pub fn ac2_ratio_bisection(
    strata: &[Stratum],
    weights: &WeightSpec,
    opts: &EngineOptions,
    provider: &dyn CiProvider,
    diff: &dyn StratumDifferenceCi,
) -> Result<EffectResult> {
    check_level(opts.level)?;
    check_weights(strata, weights)?;
    check_nonnegative(strata)?;
    let w = &weights.resolved;
    let t1 = pooled_estimate(strata, w, Group::Treated);
    let t0 = pooled_estimate(strata, w, Group::Control);
    let est = ratio_estimate(t1, t0)?;

    let lower_at = |phi: f64| -> Result<f64> { Ok(ac2_pieces(strata, weights, phi, opts, diff)?.lower) };
    let upper_at = |phi: f64| -> Result<f64> { Ok(ac2_pieces(strata, weights, phi, opts, diff)?.upper) };
    let start = fieller_ac_ratio(strata, weights, opts, provider).ok().map(|r| (r.ci.lower, r.ci.upper));

    let mut corrections = Vec::new();

    let lower = if t1 == 0.0 {
        0.0
    } else {
        let at_zero = lower_at(0.0)?;
        if at_zero <= 0.0 {
            if at_zero < 0.0 {
                corrections.push(Adjustment::LowerSetToZero);
            }
            0.0
        } else if est.is_infinite() {
            // Upper end of the lower bracket: expand until the lower limit turns negative.
            let mut lo = 0.0;
            let mut hi = start.map(|s| s.0).filter(|v| v.is_finite() && *v > 0.0).unwrap_or(1.0);
            let mut found = false;
            for _ in 0..MAX_DOUBLINGS {
                if lower_at(hi)? <= 0.0 {
                    found = true;
                    break;
                }
                lo = hi;
                hi *= 2.0;
            }
            if !found {
                return Err(Error::NoConvergence { lo, hi, residual: lower_at(hi)? });
            }
            bisect(&lower_at, lo, hi)?
        } else {
            // lower_at(0) > 0 and lower_at(est) <= 0; narrow with the AC limit.
            let (mut lo, mut hi) = (0.0, est);
            if let Some((s, _)) = start.filter(|s| s.0 > 0.0 && s.0 < est) {
                if lower_at(s)? > 0.0 {
                    lo = s;
                } else {
                    hi = s;
                }
            }
            bisect(&lower_at, lo, hi)?
        }
    };

    let upper = if t0 == 0.0 {
        corrections.push(Adjustment::UpperUnbounded);
        f64::INFINITY
    } else {
        let mut lo = est;
        let mut hi = start.map(|s| s.1).filter(|v| v.is_finite() && *v > est).unwrap_or(2.0 * est.max(1.0));
        let mut found = false;
        for _ in 0..=MAX_DOUBLINGS {
            if upper_at(hi)? <= 0.0 {
                found = true;
                break;
            }
            lo = hi;
            hi *= 2.0;
        }
        if !found {
            return Err(Error::NoConvergence { lo, hi, residual: upper_at(hi)? });
        }
        bisect(&|phi| upper_at(phi), lo, hi)?
    };

    let at_est = ac2_pieces(strata, weights, if est.is_finite() { est } else { 1.0 }, opts, diff)?;
    corrections.extend(at_est.adjustments);
    finish(
        MethodId::Ac2,
        Scale::Ratio,
        est,
        lower,
        upper,
        opts.level,
        weights,
        Some(Gamma::common(at_est.gamma)),
        corrections,
    )
}
