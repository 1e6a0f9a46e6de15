//! Shared vocabulary: intervals, per-cell summaries, weights, method identifiers
//! and the validated input bundle consumed by the interval engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment arm. Control is group 0, treated is group 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Control,
    Treated,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::Control, Group::Treated];

    pub fn index(self) -> usize {
        match self {
            Group::Control => 0,
            Group::Treated => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Group> {
        match i {
            0 => Some(Group::Control),
            1 => Some(Group::Treated),
            _ => None,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::Control => "control",
            Group::Treated => "treated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scale {
    Difference,
    Ratio,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Difference => "difference",
            Scale::Ratio => "ratio",
        })
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "difference" | "diff" | "rd" => Ok(Scale::Difference),
            "ratio" | "rr" => Ok(Scale::Ratio),
            other => Err(Error::invariant("scale", format!("unknown scale '{other}'"))),
        }
    }
}

/// Interval construction methods.
///
/// `Av`, `Ac`, `Ac2` are the stratified MOVER constructions; `Avl` and `Acl`
/// their log-ratio counterparts. `Wald`/`Asy` are large-sample intervals,
/// `Dc` uses the dually consistent variance and `Ys` is the Yan–Su variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MethodId {
    Av,
    Ac,
    Ac2,
    Avl,
    Acl,
    Wald,
    Asy,
    Dc,
    Ys,
}

impl MethodId {
    pub const ALL: [MethodId; 9] = [
        MethodId::Dc,
        MethodId::Wald,
        MethodId::Asy,
        MethodId::Av,
        MethodId::Avl,
        MethodId::Ys,
        MethodId::Ac,
        MethodId::Ac2,
        MethodId::Acl,
    ];

    pub fn supports(self, scale: Scale) -> bool {
        use MethodId::*;
        match scale {
            Scale::Ratio => matches!(self, Av | Avl | Ac | Acl | Ac2 | Asy | Dc),
            Scale::Difference => matches!(self, Av | Ac | Ac2 | Wald | Dc | Ys),
        }
    }

    /// Methods that re-level stratum intervals to `1 - gamma`.
    pub fn uses_gamma(self) -> bool {
        matches!(self, MethodId::Ac | MethodId::Acl | MethodId::Ac2 | MethodId::Ys)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Av => "AV",
            MethodId::Ac => "AC",
            MethodId::Ac2 => "AC2",
            MethodId::Avl => "AVL",
            MethodId::Acl => "ACL",
            MethodId::Wald => "WALD",
            MethodId::Asy => "ASY",
            MethodId::Dc => "DC",
            MethodId::Ys => "YS",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let m = match s.trim().to_ascii_uppercase().as_str() {
            "AV" => MethodId::Av,
            "AC" => MethodId::Ac,
            "AC2" => MethodId::Ac2,
            "AVL" => MethodId::Avl,
            "ACL" => MethodId::Acl,
            "WALD" => MethodId::Wald,
            "ASY" => MethodId::Asy,
            "DC" => MethodId::Dc,
            "YS" => MethodId::Ys,
            other => return Err(Error::invariant("method", format!("unknown method '{other}'"))),
        };
        Ok(m)
    }
}

/// Serializes non-finite limits as the strings `"inf"` / `"-inf"`.
pub(crate) mod limit_serde {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => parse(&s).ok_or_else(|| de::Error::custom(format!("bad limit '{s}'"))),
        }
    }

    pub fn parse(s: &str) -> Option<f64> {
        match s.trim() {
            "inf" | "+inf" | "Inf" | "infinity" => Some(f64::INFINITY),
            "-inf" | "-Inf" | "-infinity" => Some(f64::NEG_INFINITY),
            other => other.parse().ok(),
        }
    }

    pub fn format(v: f64) -> String {
        if v.is_infinite() {
            if v > 0.0 { "inf".into() } else { "-inf".into() }
        } else {
            format!("{v}")
        }
    }
}

pub use limit_serde::{format as format_limit, parse as parse_limit};

/// A two-sided interval at confidence level `level` (stored as `1 - alpha`).
///
/// An unbounded ratio upper limit is `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    #[serde(with = "limit_serde")]
    pub lower: f64,
    #[serde(with = "limit_serde")]
    pub upper: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn new(lower: f64, upper: f64, level: f64) -> Result<Self> {
        let ci = ConfidenceInterval { lower, upper, level };
        ci.check()?;
        Ok(ci)
    }

    pub fn check(&self) -> Result<()> {
        check_level(self.level)?;
        if self.lower.is_nan() || self.upper.is_nan() {
            return Err(Error::invariant("ci", "limit is NaN"));
        }
        if self.lower > self.upper {
            return Err(Error::invariant(
                "ci",
                format!("lower {} exceeds upper {}", self.lower, self.upper),
            ));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        1.0 - self.level
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// `true` when `other` lies inside `self`.
    pub fn encloses(&self, other: &ConfidenceInterval) -> bool {
        self.lower <= other.lower && other.upper <= self.upper
    }
}

pub(crate) fn check_level(level: f64) -> Result<()> {
    if level > 0.0 && level < 1.0 {
        Ok(())
    } else {
        Err(Error::invariant("level", format!("{level} is not in (0, 1)")))
    }
}

/// A point estimate with its interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci: ConfidenceInterval,
}

impl Estimate {
    pub fn new(value: f64, ci: ConfidenceInterval) -> Result<Self> {
        if !ci.contains(value) {
            return Err(Error::MalformedInterval {
                estimate: value,
                lower: ci.lower,
                upper: ci.upper,
            });
        }
        Ok(Estimate { value, ci })
    }
}

/// Everything the engine needs from one stratum × group cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumGroupSummary {
    pub estimate: f64,
    pub variance: f64,
    pub ci: ConfidenceInterval,
    pub n: u64,
}

impl StratumGroupSummary {
    pub fn new(estimate: f64, variance: f64, ci: ConfidenceInterval, n: u64) -> Result<Self> {
        let s = StratumGroupSummary { estimate, variance, ci, n };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<()> {
        self.ci.check()?;
        if !self.estimate.is_finite() {
            return Err(Error::invariant("estimate", "not finite"));
        }
        if !self.ci.contains(self.estimate) {
            return Err(Error::MalformedInterval {
                estimate: self.estimate,
                lower: self.ci.lower,
                upper: self.ci.upper,
            });
        }
        if !(self.variance >= 0.0) {
            return Err(Error::invariant("variance", format!("{} is negative", self.variance)));
        }
        if self.n == 0 {
            return Err(Error::invariant("n", "sample size must be positive"));
        }
        Ok(())
    }

    pub fn as_estimate(&self) -> Estimate {
        Estimate { value: self.estimate, ci: self.ci }
    }
}

/// The two cells of one stratum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub control: StratumGroupSummary,
    pub treated: StratumGroupSummary,
}

impl Stratum {
    pub fn new(control: StratumGroupSummary, treated: StratumGroupSummary) -> Self {
        Stratum { control, treated }
    }

    pub fn group(&self, g: Group) -> &StratumGroupSummary {
        match g {
            Group::Control => &self.control,
            Group::Treated => &self.treated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// Mantel–Haenszel, proportional to `n1 n0 / (n1 + n0)`.
    Mh,
    /// Inverse variance of the stratum difference.
    Inv,
    /// Minimum risk.
    Mr,
    /// User-supplied weights, normalized on resolution.
    Fixed(Vec<f64>),
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Mh => f.write_str("MH"),
            WeightScheme::Inv => f.write_str("INV"),
            WeightScheme::Mr => f.write_str("MR"),
            WeightScheme::Fixed(_) => f.write_str("FIXED"),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mh" => Ok(WeightScheme::Mh),
            "inv" => Ok(WeightScheme::Inv),
            "mr" => Ok(WeightScheme::Mr),
            other => {
                let ws: std::result::Result<Vec<f64>, _> =
                    other.split(',').map(|t| t.trim().parse::<f64>()).collect();
                ws.map(WeightScheme::Fixed)
                    .map_err(|_| Error::invariant("scheme", format!("unknown weight scheme '{other}'")))
            }
        }
    }
}

/// A weighting scheme together with its normalized per-stratum weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub scheme: WeightScheme,
    pub resolved: Vec<f64>,
}

impl WeightSpec {
    /// Normalizes `raw` to sum to one.
    pub fn from_raw(scheme: WeightScheme, raw: &[f64]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::EmptyStrata);
        }
        if let Some((i, w)) = raw.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::invariant("weights", format!("weight {i} is {w}")));
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::invariant("weights", "weights sum to zero"));
        }
        let resolved = raw.iter().map(|w| w / total).collect();
        Ok(WeightSpec { scheme, resolved })
    }

    pub fn fixed(weights: &[f64]) -> Result<Self> {
        Self::from_raw(WeightScheme::Fixed(weights.to_vec()), weights)
    }

    pub fn len(&self) -> usize {
        self.resolved.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resolved.is_empty()
    }

    pub fn check(&self, strata: usize) -> Result<()> {
        if self.resolved.len() != strata {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} strata",
                self.resolved.len(),
                strata
            )));
        }
        if self.resolved.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invariant("weights", "negative weight"));
        }
        let total: f64 = self.resolved.iter().sum();
        if (total - 1.0).abs() >= 1e-12 {
            return Err(Error::invariant("weights", format!("sum is {total}")));
        }
        if matches!(self.scheme, WeightScheme::Mr) && strata < 2 {
            return Err(Error::MrStrataCount(strata));
        }
        Ok(())
    }
}

/// Adjustments applied to a result after the base construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Adjustment {
    /// Minimum-risk continuity widening `(L - c, U + c)`.
    MrContinuity { c: f64 },
    /// A ratio lower limit had no root in `(0, inf)` and was set to 0.
    LowerSetToZero,
    /// A ratio upper limit is unbounded.
    UpperUnbounded,
    /// The delta variances were all zero; gamma used CI-recovered variances.
    GammaVarianceFromCi,
    /// External stratum intervals were re-leveled by scaling half-widths.
    ApproximateReleveling,
    /// Stratum intervals are the built-in defaults, not user supplied.
    DefaultOneSampleCi,
}

/// The adjusted per-stratum level `1 - gamma` used by re-leveling methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma {
    pub control: f64,
    pub treated: f64,
}

impl Gamma {
    pub fn common(g: f64) -> Self {
        Gamma { control: g, treated: g }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectResult {
    pub method: MethodId,
    pub scale: Scale,
    #[serde(with = "limit_serde")]
    pub estimate: f64,
    pub ci: ConfidenceInterval,
    pub weights: WeightSpec,
    pub gamma: Option<Gamma>,
    pub corrections: Vec<Adjustment>,
}

impl EffectResult {
    pub fn check(&self) -> Result<()> {
        self.ci.check()?;
        if !self.ci.contains(self.estimate) {
            return Err(Error::MalformedInterval {
                estimate: self.estimate,
                lower: self.ci.lower,
                upper: self.ci.upper,
            });
        }
        if self.gamma.is_some() != self.method.uses_gamma() {
            return Err(Error::invariant("gamma", format!("presence mismatch for {}", self.method)));
        }
        Ok(())
    }

    /// Widens the interval by `c` on each side.
    pub fn widen(mut self, c: f64) -> Self {
        self.ci.lower -= c;
        self.ci.upper += c;
        self.corrections.push(Adjustment::MrContinuity { c });
        self
    }
}

/// A method that could not be computed, kept alongside the successful results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodFailure {
    pub method: MethodId,
    pub scale: Scale,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Analysis {
    pub results: Vec<EffectResult>,
    pub failures: Vec<MethodFailure>,
}

impl Analysis {
    pub fn get(&self, method: MethodId, scale: Scale) -> Option<&EffectResult> {
        self.results.iter().find(|r| r.method == method && r.scale == scale)
    }
}

impl EffectResult {
    /// `true` when re-leveled stratum intervals were approximated.
    pub fn is_approximate(&self) -> bool {
        self.corrections.contains(&Adjustment::ApproximateReleveling)
    }
}

/// Validated engine input: at least one stratum, both groups everywhere, weights aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedInput {
    pub strata: Vec<Stratum>,
    pub weights: WeightSpec,
}

/// Checks the per-cell and weight invariants of an `S × 2` summary matrix.
///
/// Cells are indexed `[stratum][group index]` with control at index 0.
pub fn validate_inputs(
    summaries: &[[Option<StratumGroupSummary>; 2]],
    weights: WeightSpec,
) -> Result<StratifiedInput> {
    if summaries.is_empty() {
        return Err(Error::EmptyStrata);
    }
    let mut strata = Vec::with_capacity(summaries.len());
    for (s, cells) in summaries.iter().enumerate() {
        let mut pair = [None; 2];
        for g in Group::BOTH {
            let cell = cells[g.index()].ok_or(Error::GroupMissing { stratum: s, group: g })?;
            cell.check().map_err(|e| match e {
                Error::InvariantViolation { field, detail } => Error::InvariantViolation {
                    field: format!("strata[{s}].{g}.{field}"),
                    detail,
                },
                other => other,
            })?;
            pair[g.index()] = Some(cell);
        }
        strata.push(Stratum::new(pair[0].unwrap(), pair[1].unwrap()));
    }
    weights.check(strata.len())?;
    Ok(StratifiedInput { strata, weights })
}
