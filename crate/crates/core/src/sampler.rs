//! Powerset sampling by thinned Poisson occupancy.
//!
//! Under the product measure with weight z^n per atom of size n (or
//! z2 * z1^n in the size/length bivariate version), each atom enters a
//! subset independently with probability w/(1+w) where w is its weight. The
//! sampler realizes that measure without enumerating atoms: it draws a
//! Poisson number of candidates whose total rate sums the structure's
//! *bound* against the weights, assigns each candidate a level from the
//! law matching the bound's shape, thins it by the count-to-bound ratio
//! times ln(1+w)/w, picks a uniform atom of that level, and collapses
//! duplicates into a set. Surviving insertions at an atom form a Poisson
//! process with rate ln(1+w), so the atom is present with probability
//! 1 - 1/(1+w) = w/(1+w), exactly and independently across atoms.
//!
//! The only structure queries used are `count` and the bound at the levels
//! actually drawn, so cost scales with the candidate rate, not with the
//! (possibly infinite) number of atoms.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dist::{bernoulli_draw, geom_dot_draw, geometric_draw, poisson_draw, uniform_rank_draw};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::structure::{BoundDescriptor, CombStructure, PartLabel};

/// Slack on the count-to-bound ratio before a bound violation is reported,
/// absorbing float rounding in bound evaluation.
const RATIO_SLACK: f64 = 1e-12;

/// Weight threshold below which ln(1+w)/w switches to its series expansion.
const LOG_RATIO_SERIES_CUTOFF: f64 = 1e-8;

/// Parameters of the product measure: one weight argument per tracked
/// statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoltzmannParams {
    /// Atom of size n carries weight z^n; controls expected total size.
    Univariate { z: f64 },
    /// Atom of size n carries weight z2 * z1^n; z1 controls size and z2
    /// the number of parts. Only supported on constant-bound structures.
    Bivariate { z1: f64, z2: f64 },
}

impl BoltzmannParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            BoltzmannParams::Univariate { z } => {
                if !(0.0..1.0).contains(&z) {
                    return Err(Error::ParamDomain {
                        what: "univariate z",
                        value: z,
                    });
                }
            }
            BoltzmannParams::Bivariate { z1, z2 } => {
                if !(z1 > 0.0 && z1 < 1.0) {
                    return Err(Error::ParamDomain {
                        what: "bivariate z1",
                        value: z1,
                    });
                }
                if !(z2 > 0.0) || !z2.is_finite() {
                    return Err(Error::ParamDomain {
                        what: "bivariate z2",
                        value: z2,
                    });
                }
            }
        }
        Ok(())
    }

    /// Validates the parameters against the bound they will drive. The
    /// bivariate dominating rate is only defined for constant bounds.
    pub fn validate_for(&self, bound: BoundDescriptor) -> Result<()> {
        self.validate()?;
        if matches!(self, BoltzmannParams::Bivariate { .. })
            && !matches!(bound, BoundDescriptor::Constant { .. })
        {
            return Err(Error::InvalidInput {
                what: "bivariate parameters require a constant-bound structure".into(),
            });
        }
        Ok(())
    }

    /// The per-size-unit factor: z, or z1 in the bivariate case.
    pub fn geometric_argument(&self) -> f64 {
        match *self {
            BoltzmannParams::Univariate { z } => z,
            BoltzmannParams::Bivariate { z1, .. } => z1,
        }
    }

    /// The level-independent factor: 1, or z2 in the bivariate case.
    pub fn frequency_scale(&self) -> f64 {
        match *self {
            BoltzmannParams::Univariate { .. } => 1.0,
            BoltzmannParams::Bivariate { z2, .. } => z2,
        }
    }
}

/// Weight of one atom of the given size under the measure (0^0 = 1, so a
/// size-zero atom has weight 1, or z2).
pub fn level_weight(params: &BoltzmannParams, level: u64) -> f64 {
    params.frequency_scale() * params.geometric_argument().powf(level as f64)
}

/// Probability that one particular atom of the given size is included.
pub fn marginal_inclusion_prob(params: &BoltzmannParams, level: u64) -> f64 {
    let w = level_weight(params, level);
    if w.is_infinite() {
        return 1.0;
    }
    w / (1.0 + w)
}

/// Dominating candidate law for one bound shape: the total candidate rate
/// at a weight argument (before the frequency scale) and the matching level
/// distribution, P(level = n) proportional to bound(n) * z^n.
pub trait DominatingLaw: Send + Sync {
    fn name(&self) -> &'static str;
    /// Sum over levels of bound(n) * z^n. Fails if the series diverges.
    fn total_rate(&self, z: f64) -> Result<f64>;
    /// Draws a level with probability bound(n) * z^n / total_rate(z).
    fn draw_level(&self, z: f64, rng: &mut RandomStream) -> Result<u64>;
    /// The bound's value at one level.
    fn bound_at(&self, level: u64) -> f64;
}

/// Law for constant bounds: rate a_bar/(1-z), geometric levels.
pub struct ConstantLaw {
    pub a_bar: f64,
}

impl DominatingLaw for ConstantLaw {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn total_rate(&self, z: f64) -> Result<f64> {
        Ok(self.a_bar / (1.0 - z))
    }

    fn draw_level(&self, z: f64, rng: &mut RandomStream) -> Result<u64> {
        geometric_draw(z, rng)
    }

    fn bound_at(&self, _level: u64) -> f64 {
        self.a_bar
    }
}

/// Law for exponential bounds b * c^n: rate b/(1-cz), geometric levels in
/// the tilted argument cz. Requires cz < 1.
pub struct ExponentialLaw {
    pub b: f64,
    pub c: f64,
}

impl DominatingLaw for ExponentialLaw {
    fn name(&self) -> &'static str {
        "exponential"
    }

    fn total_rate(&self, z: f64) -> Result<f64> {
        let cz = self.c * z;
        if cz >= 1.0 {
            return Err(Error::DivergentRate { cz });
        }
        Ok(self.b / (1.0 - cz))
    }

    fn draw_level(&self, z: f64, rng: &mut RandomStream) -> Result<u64> {
        geometric_draw(self.c * z, rng)
    }

    fn bound_at(&self, level: u64) -> f64 {
        self.b * self.c.powi(level.min(i32::MAX as u64) as i32)
    }
}

/// Law for linear bounds b * n: rate b*z/(1-z)^2, size-biased geometric
/// levels (never zero, matching bound(0) = 0).
pub struct LinearLaw {
    pub b: f64,
}

impl DominatingLaw for LinearLaw {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn total_rate(&self, z: f64) -> Result<f64> {
        let q = 1.0 - z;
        Ok(self.b * z / (q * q))
    }

    fn draw_level(&self, z: f64, rng: &mut RandomStream) -> Result<u64> {
        geom_dot_draw(z, rng)
    }

    fn bound_at(&self, level: u64) -> f64 {
        self.b * level as f64
    }
}

impl BoundDescriptor {
    /// The dominating law matching this bound's shape.
    pub fn law(&self) -> Box<dyn DominatingLaw> {
        match *self {
            BoundDescriptor::Constant { a_bar } => Box::new(ConstantLaw { a_bar }),
            BoundDescriptor::Exponential { b, c } => Box::new(ExponentialLaw { b, c }),
            BoundDescriptor::Linear { b } => Box::new(LinearLaw { b }),
        }
    }
}

/// Total candidate rate for a structure/parameter pairing: the frequency
/// scale times the bound's rate series at the weight argument.
pub fn dominating_rate_total(structure: &CombStructure, params: &BoltzmannParams) -> Result<f64> {
    params.validate_for(structure.bound())?;
    let rate = params.frequency_scale()
        * structure
            .bound()
            .law()
            .total_rate(params.geometric_argument())?;
    if !rate.is_finite() {
        return Err(Error::ParamDomain {
            what: "dominating rate",
            value: rate,
        });
    }
    Ok(rate)
}

/// Draws one candidate level from the dominating law of the structure's
/// bound.
pub fn dominating_level_draw(
    structure: &CombStructure,
    params: &BoltzmannParams,
    rng: &mut RandomStream,
) -> Result<u64> {
    params.validate_for(structure.bound())?;
    structure
        .bound()
        .law()
        .draw_level(params.geometric_argument(), rng)
}

/// Thinning probability for one candidate: the count-to-bound ratio times
/// ln(1+w)/w. Zero when the level holds no atoms; an error when the count
/// exceeds the bound, since the dominating rate is then too small and no
/// thinning probability can repair it.
pub(crate) fn thinning_prob(count: u128, bound: f64, omega: f64, level: u64) -> Result<f64> {
    if count == 0 {
        return Ok(0.0);
    }
    if !(bound > 0.0) {
        return Err(Error::BoundViolation {
            level,
            ratio: f64::INFINITY,
        });
    }
    let ratio = count as f64 / bound;
    if ratio > 1.0 + RATIO_SLACK {
        return Err(Error::BoundViolation { level, ratio });
    }
    let log_ratio = if omega == 0.0 {
        1.0
    } else if omega < LOG_RATIO_SERIES_CUTOFF {
        1.0 - omega / 2.0 + omega * omega / 3.0
    } else {
        omega.ln_1p() / omega
    };
    Ok((ratio * log_ratio).min(1.0))
}

/// Probability that a candidate at the given level survives thinning.
pub fn acceptance_prob(
    structure: &CombStructure,
    params: &BoltzmannParams,
    level: u64,
) -> Result<f64> {
    params.validate_for(structure.bound())?;
    let count = structure.count(level)?;
    let omega = level_weight(params, level);
    thinning_prob(count, structure.bound().value_at(level), omega, level)
}

/// One sampled subset: sorted distinct parts with their total size and
/// count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowersetSample {
    /// Parts in ascending (level, rank) order, no duplicates.
    pub parts: Vec<PartLabel>,
    /// Sum of the part levels.
    pub size: u64,
    /// Number of parts.
    pub length: u64,
}

/// A validated structure/parameter pairing ready to draw subsets.
pub struct Sampler {
    structure: CombStructure,
    params: BoltzmannParams,
    law: Box<dyn DominatingLaw>,
    z_geo: f64,
    weight_scale: f64,
    lambda_bar: f64,
    acceptance_bias: f64,
}

impl Sampler {
    pub fn new(structure: CombStructure, params: BoltzmannParams) -> Result<Self> {
        params.validate_for(structure.bound())?;
        structure.bound().validate()?;
        let law = structure.bound().law();
        let z_geo = params.geometric_argument();
        let weight_scale = params.frequency_scale();
        let lambda_bar = weight_scale * law.total_rate(z_geo)?;
        if !lambda_bar.is_finite() {
            return Err(Error::ParamDomain {
                what: "dominating rate",
                value: lambda_bar,
            });
        }
        Ok(Sampler {
            structure,
            params,
            law,
            z_geo,
            weight_scale,
            lambda_bar,
            acceptance_bias: 1.0,
        })
    }

    /// Scales every thinning probability by `bias`. Fault-injection hook
    /// for verification tests; anything other than 1.0 deliberately breaks
    /// the sampled distribution.
    #[doc(hidden)]
    pub fn with_acceptance_bias(mut self, bias: f64) -> Result<Self> {
        if !(bias >= 0.0) || !bias.is_finite() {
            return Err(Error::ParamDomain {
                what: "acceptance bias",
                value: bias,
            });
        }
        self.acceptance_bias = bias;
        Ok(self)
    }

    pub fn structure(&self) -> &CombStructure {
        &self.structure
    }

    pub fn params(&self) -> BoltzmannParams {
        self.params
    }

    /// Expected number of candidates per draw.
    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    /// Weight of one atom of the given size under this sampler's measure.
    pub fn level_weight(&self, level: u64) -> f64 {
        self.weight_scale * self.z_geo.powf(level as f64)
    }

    /// Draws one subset.
    pub fn sample(&self, rng: &mut RandomStream) -> Result<PowersetSample> {
        let mut parts: BTreeSet<PartLabel> = BTreeSet::new();
        if self.lambda_bar > 0.0 {
            let candidates = poisson_draw(self.lambda_bar, rng)?;
            for _ in 0..candidates {
                let level = self.law.draw_level(self.z_geo, rng)?;
                let count = self.structure.count(level)?;
                let omega = self.level_weight(level);
                let base = thinning_prob(count, self.law.bound_at(level), omega, level)?;
                let p = (base * self.acceptance_bias).min(1.0);
                if !bernoulli_draw(p, rng)? {
                    continue;
                }
                let rank = uniform_rank_draw(count, rng)?;
                parts.insert(PartLabel { level, rank });
            }
        }
        let mut size = 0u64;
        for part in &parts {
            size = size
                .checked_add(part.level)
                .ok_or_else(|| Error::Capacity {
                    what: "sample size exceeds u64".into(),
                })?;
        }
        let length = parts.len() as u64;
        Ok(PowersetSample {
            parts: parts.into_iter().collect(),
            size,
            length,
        })
    }
}

/// One-shot convenience: validate, sample once, discard the sampler.
pub fn sample_free(
    structure: &CombStructure,
    params: BoltzmannParams,
    rng: &mut RandomStream,
) -> Result<PowersetSample> {
    Sampler::new(structure.clone(), params)?.sample(rng)
}
