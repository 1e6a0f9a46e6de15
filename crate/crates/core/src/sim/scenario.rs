use serde::{Deserialize, Serialize};

use crate::binary::ZeroCellPolicy;
use crate::error::{Error, Result};
use crate::types::{MethodId, Scale, WeightScheme};

/// Effect measure under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    Rd,
    Rr,
}

impl Metric {
    pub fn scale(self) -> Scale {
        match self {
            Metric::Rd => Scale::Difference,
            Metric::Rr => Scale::Ratio,
        }
    }

    /// No-effect value.
    pub fn null(self) -> f64 {
        match self {
            Metric::Rd => 0.0,
            Metric::Rr => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Rd => "RD",
            Metric::Rr => "RR",
        }
    }
}

/// True treatment effect, in the scenario metric's units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    /// Common effect in every stratum.
    Constant(f64),
    PerStratum(Vec<f64>),
}

/// One simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    /// Control-arm rates `p_s0`.
    pub rates0: Vec<f64>,
    pub effect: Effect,
    /// `(n_s0, n_s1)` per stratum.
    pub sizes: Vec<(u64, u64)>,
    pub scheme: WeightScheme,
    pub methods: Vec<MethodId>,
    pub level: f64,
    pub metric: Metric,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default)]
    pub policy: ZeroCellPolicy,
}

impl Scenario {
    fn effect_at(&self, s: usize) -> f64 {
        match &self.effect {
            Effect::Constant(e) => *e,
            Effect::PerStratum(es) => es[s],
        }
    }

    /// Treated-arm rates `p_s1` implied by the effect.
    pub fn rates1(&self) -> Vec<f64> {
        (0..self.rates0.len())
            .map(|s| match self.metric {
                Metric::Rd => self.rates0[s] + self.effect_at(s),
                Metric::Rr => self.rates0[s] * self.effect_at(s),
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.rates0.len();
        if s == 0 {
            return Err(Error::EmptyStrata);
        }
        if self.sizes.len() != s {
            return Err(Error::DimensionMismatch(format!("{} size pairs for {s} strata", self.sizes.len())));
        }
        if let Effect::PerStratum(es) = &self.effect {
            if es.len() != s {
                return Err(Error::DimensionMismatch(format!("{} stratum effects for {s} strata", es.len())));
            }
        }
        if let Some((i, _)) = self.sizes.iter().enumerate().find(|(_, (a, b))| *a == 0 || *b == 0) {
            return Err(Error::invariant(format!("sizes[{i}]"), "group sizes must be positive"));
        }
        for (i, p) in self.rates0.iter().chain(&self.rates1()).enumerate() {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::invariant(format!("rate[{}]", i % s), format!("{p} outside [0, 1]")));
            }
        }
        if !(self.level > 0.0 && self.level <= 1.0) {
            return Err(Error::invariant("level", format!("{} is not in (0, 1]", self.level)));
        }
        if self.replicates == 0 {
            return Err(Error::invariant("replicates", "must be positive"));
        }
        Ok(())
    }

    /// MH weights implied by the design sizes.
    pub fn design_mh_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = self.sizes.iter().map(|&(a, b)| (a * b) as f64 / (a + b) as f64).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    }

    /// Coverage target: the common effect, or under heterogeneity the
    /// MH-pooled difference / ratio of MH-pooled proportions.
    pub fn target(&self) -> f64 {
        match &self.effect {
            Effect::Constant(e) => *e,
            Effect::PerStratum(es) => {
                let w = self.design_mh_weights();
                match self.metric {
                    Metric::Rd => w.iter().zip(es).map(|(w, e)| w * e).sum(),
                    Metric::Rr => {
                        let p1: f64 = w.iter().zip(self.rates1()).map(|(w, p)| w * p).sum();
                        let p0: f64 = w.iter().zip(&self.rates0).map(|(w, p)| w * p).sum();
                        p1 / p0
                    }
                }
            }
        }
    }
}

/// Methods compared on each metric in the coverage studies.
pub fn default_methods(metric: Metric, scheme: &WeightScheme) -> Vec<MethodId> {
    use MethodId::*;
    let mut m = match metric {
        Metric::Rd => vec![Dc, Wald, Av, Ys, Ac, Ac2],
        Metric::Rr => vec![Dc, Asy, Av, Avl, Ac, Ac2, Acl],
    };
    if !matches!(scheme, WeightScheme::Mh) {
        m.retain(|x| *x != Dc);
    }
    m
}

fn policy_for(metric: Metric) -> ZeroCellPolicy {
    match metric {
        Metric::Rd => ZeroCellPolicy::HalfEvent,
        Metric::Rr => ZeroCellPolicy::None,
    }
}

struct Grid {
    example: u32,
    replicates: u64,
    seed: u64,
    out: Vec<Scenario>,
}

impl Grid {
    fn push(&mut self, tag: String, rates0: Vec<f64>, effect: Effect, sizes: Vec<(u64, u64)>, scheme: WeightScheme, metric: Metric) {
        let methods = if self.example == 6 {
            vec![MethodId::Wald, MethodId::Ys, MethodId::Av, MethodId::Ac, MethodId::Ac2]
        } else {
            default_methods(metric, &scheme)
        };
        let idx = self.out.len() as u64;
        self.out.push(Scenario {
            id: format!("ex{}-{}-{}-{}", self.example, metric.as_str().to_lowercase(), scheme.to_string().to_lowercase(), tag),
            rates0,
            effect,
            sizes,
            scheme,
            methods,
            level: 0.95,
            metric,
            replicates: self.replicates,
            seed: self.seed.wrapping_add(idx.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            policy: policy_for(metric),
        });
    }
}

fn fmt_rates(r: &[f64]) -> String {
    r.iter().map(|p| format!("{p:.2}")).collect::<Vec<_>>().join("_")
}

/// Built-in simulation design grids.
///
/// * 3: two strata, `p_s0 = 0.12 k`, `k = 1..5`; balanced (24,24,16,16) or
///   unbalanced (12,36,8,24); RD in {0, 0.3} (MH and MR), RR in {1, 1.5} (MH).
/// * 4: three strata, `k in {1, 3, 5}`; (20,20,16,16,12,12) or (10,30,8,24,6,18).
/// * 5: example 3's rates and layouts with stratum effects RD (0, 0.3) or
///   RR (1, 1.5), total size 80 or 8000.
/// * 6: `p_s0 = (0.1, 0.6)`, RD in {0, 0.05}, equal `n_sg` in
///   {50, 100, 200, 500, 10000}, MH/INV/MR.
pub fn scenario_grid(example: u32, replicates: u64, seed: u64) -> Result<Vec<Scenario>> {
    let mut g = Grid { example, replicates, seed, out: Vec::new() };
    let two_strata: Vec<Vec<f64>> = (1..=5)
        .flat_map(|a| (1..=5).map(move |b| vec![0.12 * a as f64, 0.12 * b as f64]))
        .collect();
    let layouts2 = [("bal", vec![(24, 24), (16, 16)]), ("unbal", vec![(12, 36), (8, 24)])];
    match example {
        3 | 4 => {
            let (rates, layouts): (Vec<Vec<f64>>, Vec<(&str, Vec<(u64, u64)>)>) = if example == 3 {
                (two_strata, layouts2.to_vec())
            } else {
                let ks = [1.0, 3.0, 5.0];
                let mut rates = Vec::new();
                for a in ks {
                    for b in ks {
                        for c in ks {
                            rates.push(vec![0.12 * a, 0.12 * b, 0.12 * c]);
                        }
                    }
                }
                (rates, vec![("bal", vec![(20, 20), (16, 16), (12, 12)]), ("unbal", vec![(10, 30), (8, 24), (6, 18)])])
            };
            for (metric, effects, schemes) in [
                (Metric::Rd, [0.0, 0.3], vec![WeightScheme::Mh, WeightScheme::Mr]),
                (Metric::Rr, [1.0, 1.5], vec![WeightScheme::Mh]),
            ] {
                for scheme in schemes {
                    for (lay, sizes) in &layouts {
                        for &e in &effects {
                            for r in &rates {
                                let tag = format!("{lay}-e{e}-p{}", fmt_rates(r));
                                g.push(tag, r.clone(), Effect::Constant(e), sizes.clone(), scheme.clone(), metric);
                            }
                        }
                    }
                }
            }
        }
        5 => {
            for (metric, effects, schemes) in [
                (Metric::Rd, vec![0.0, 0.3], vec![WeightScheme::Mh, WeightScheme::Mr]),
                (Metric::Rr, vec![1.0, 1.5], vec![WeightScheme::Mh]),
            ] {
                for scheme in schemes {
                    for mult in [1u64, 100] {
                        for (lay, sizes) in &layouts2 {
                            let sizes: Vec<(u64, u64)> = sizes.iter().map(|&(a, b)| (a * mult, b * mult)).collect();
                            for r in &two_strata {
                                let tag = format!("n{}-{lay}-p{}", 80 * mult, fmt_rates(r));
                                g.push(tag, r.clone(), Effect::PerStratum(effects.clone()), sizes.clone(), scheme.clone(), metric);
                            }
                        }
                    }
                }
            }
        }
        6 => {
            for scheme in [WeightScheme::Mh, WeightScheme::Inv, WeightScheme::Mr] {
                for rd in [0.0, 0.05] {
                    for n in [50u64, 100, 200, 500, 10000] {
                        g.push(format!("n{n}-rd{rd}"), vec![0.1, 0.6], Effect::Constant(rd), vec![(n, n); 2], scheme.clone(), Metric::Rd);
                    }
                }
            }
        }
        other => return Err(Error::UnknownExample(other)),
    }
    Ok(g.out)
}
