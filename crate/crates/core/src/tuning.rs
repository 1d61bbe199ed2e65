//! Parameter calibration and rejection control.
//!
//! Calibration picks weight arguments so the sampled subsets hit a target
//! expected size (and, jointly, a target expected number of parts where a
//! closed form exists). Two closed forms cover the common cases; the
//! numeric fallback bisects on the exact expected-size series, which is
//! evaluated with a certified truncation bound derived from the structure's
//! growth bound. Rejection control then turns free samples into exact- or
//! windowed-size samples by resampling.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::sampler::{BoltzmannParams, PowersetSample, Sampler};
use crate::structure::{BoundDescriptor, CombStructure};

/// Relative truncation tolerance for the expected-size series.
const SERIES_REL_TOL: f64 = 1e-12;

/// Hard cap on the number of series terms before giving up.
const SERIES_MAX_TERMS: u64 = 50_000_000;

/// Levels between re-anchoring the running weight to a fresh power, which
/// stops multiplicative rounding drift from accumulating over long sums.
const WEIGHT_RESYNC_EVERY: u64 = 4096;

/// Bisection iteration cap for numeric calibration.
const BISECTION_MAX_STEPS: u64 = 200;

/// Largest weight argument numeric calibration will consider.
const Z_CEILING: f64 = 1.0 - 1e-12;

/// Leading constant in the closed-form partition calibration: 12/pi^2.
const PARTITION_CALIBRATION: f64 = 12.0 / (PI * PI);

/// Gamma(3/2) = sqrt(pi)/2, used by the joint size/length calibration.
const GAMMA_THREE_HALVES: f64 = 0.886_226_925_452_758_0;

/// Absolute slack when mapping a relative size window to integer bounds, so
/// window edges that are exact integers do not fall out of the window
/// through float rounding.
const WINDOW_SNAP: f64 = 1e-9;

/// What calibration should aim for: an expected total size, optionally
/// joined by an expected number of parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTarget {
    pub expected_size: f64,
    pub expected_length: Option<f64>,
}

impl CalibrationTarget {
    pub fn size(expected_size: f64) -> Self {
        CalibrationTarget {
            expected_size,
            expected_length: None,
        }
    }

    pub fn size_and_length(expected_size: f64, expected_length: f64) -> Self {
        CalibrationTarget {
            expected_size,
            expected_length: Some(expected_length),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expected_size > 0.0) || !self.expected_size.is_finite() {
            return Err(Error::ParamDomain {
                what: "calibration target size",
                value: self.expected_size,
            });
        }
        if let Some(len) = self.expected_length {
            if !(len >= 1.0) || !len.is_finite() {
                return Err(Error::ParamDomain {
                    what: "calibration target length",
                    value: len,
                });
            }
        }
        Ok(())
    }
}

/// Acceptance policy for drawn samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RejectionMode {
    /// Accept every sample.
    Free,
    /// Accept sizes within a relative window around the target:
    /// ceil((1-epsilon) * target) ..= floor((1+epsilon) * target).
    Approximate { target: u64, epsilon: f64 },
    /// Accept only exact-size samples.
    Exact { target: u64 },
}

/// A rejection mode plus its retry budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RejectionConfig {
    pub mode: RejectionMode,
    pub max_attempts: u64,
}

impl RejectionConfig {
    pub fn free() -> Self {
        RejectionConfig {
            mode: RejectionMode::Free,
            max_attempts: 1,
        }
    }

    /// Windowed acceptance with the default retry budget of 10^4.
    pub fn approximate(target: u64, epsilon: f64) -> Self {
        RejectionConfig {
            mode: RejectionMode::Approximate { target, epsilon },
            max_attempts: 10_000,
        }
    }

    /// Exact-size acceptance with the default retry budget of 10^6.
    pub fn exact(target: u64) -> Self {
        RejectionConfig {
            mode: RejectionMode::Exact { target },
            max_attempts: 1_000_000,
        }
    }

    pub fn with_max_attempts(mut self, max_attempts: u64) -> Self {
        self.max_attempts = max_attempts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_attempts == 0 {
            return Err(Error::InvalidInput {
                what: "max_attempts must be at least 1".into(),
            });
        }
        match self.mode {
            RejectionMode::Free => Ok(()),
            RejectionMode::Approximate { target, epsilon } => {
                if target == 0 {
                    return Err(Error::InvalidInput {
                        what: "approximate rejection target must be at least 1".into(),
                    });
                }
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(Error::ParamDomain {
                        what: "rejection epsilon",
                        value: epsilon,
                    });
                }
                Ok(())
            }
            RejectionMode::Exact { target } => {
                if target == 0 {
                    return Err(Error::InvalidInput {
                        what: "exact rejection target must be at least 1".into(),
                    });
                }
                Ok(())
            }
        }
    }
}

/// Integer acceptance window for a relative epsilon around a target size.
pub fn acceptance_window(target: u64, epsilon: f64) -> (u64, u64) {
    let t = target as f64;
    let lo = ((1.0 - epsilon) * t - WINDOW_SNAP).ceil().max(0.0) as u64;
    let hi = ((1.0 + epsilon) * t + WINDOW_SNAP).floor() as u64;
    (lo, hi)
}

/// Closed-form weight argument for structures with one atom per level:
/// z = exp(-1 / sqrt(c * target)) with c = 12/pi^2, which matches the
/// asymptotic expected size (pi^2/12) / ln(1/z)^2. Accurate to O(1)
/// absolute error in the realized expectation.
pub fn calibrate_partitions(target_size: f64) -> Result<f64> {
    if !(target_size >= 1.0) || !target_size.is_finite() {
        return Err(Error::ParamDomain {
            what: "calibration target size",
            value: target_size,
        });
    }
    Ok((-1.0 / (PARTITION_CALIBRATION * target_size).sqrt()).exp())
}

/// Closed-form joint calibration for the squares structure (one atom per
/// perfect square): z1 = exp(-L / 2S) steers the expected size toward S and
/// z2 = sqrt(kappa/2) / Gamma(3/2) with kappa = L^3/S steers the expected
/// number of parts toward L, from the Gaussian-integral asymptotics of the
/// square-indexed series.
pub fn calibrate_squares(target_size: f64, target_length: f64) -> Result<(f64, f64)> {
    if !(target_size > 0.0) || !target_size.is_finite() {
        return Err(Error::ParamDomain {
            what: "calibration target size",
            value: target_size,
        });
    }
    if !(target_length >= 1.0) || !target_length.is_finite() {
        return Err(Error::ParamDomain {
            what: "calibration target length",
            value: target_length,
        });
    }
    let z1 = (-target_length / (2.0 * target_size)).exp();
    let kappa = target_length.powi(3) / target_size;
    let z2 = (kappa / 2.0).sqrt() / GAMMA_THREE_HALVES;
    BoltzmannParams::Bivariate { z1, z2 }.validate()?;
    Ok((z1, z2))
}

/// Exact expected total size under the given parameters: the series over
/// levels of n * count(n) * w/(1+w) with w the level weight, truncated once
/// a closed-form bound on the remaining tail drops below [`SERIES_REL_TOL`]
/// relative to the partial sum.
pub fn expected_size(structure: &CombStructure, params: &BoltzmannParams) -> Result<f64> {
    expected_size_capped(structure, params, f64::INFINITY)
}

/// [`expected_size`] with an early exit: once the partial sum alone exceeds
/// `stop_above`, that partial sum is returned. Callers comparing against a
/// threshold at or below `stop_above` get the comparison answer without
/// paying for full convergence.
fn expected_size_capped(
    structure: &CombStructure,
    params: &BoltzmannParams,
    stop_above: f64,
) -> Result<f64> {
    params.validate_for(structure.bound())?;
    let z = params.geometric_argument();
    let scale = params.frequency_scale();
    if z == 0.0 {
        return Ok(0.0);
    }
    // Fails fast when the bound's rate series diverges at this argument.
    structure.bound().law().total_rate(z)?;

    let bound = structure.bound();
    let mut partial = 0.0f64;
    let mut weight = scale;
    for level in 1..=SERIES_MAX_TERMS {
        weight *= z;
        if level % WEIGHT_RESYNC_EVERY == 0 {
            weight = scale * z.powf(level as f64);
        }
        let count = structure.count(level)?;
        if count > 0 {
            partial += level as f64 * count as f64 * weight / (1.0 + weight);
        }
        if partial > stop_above {
            return Ok(partial);
        }
        if tail_bound(bound, scale, z, level) <= SERIES_REL_TOL * partial.max(1e-300) {
            return Ok(partial);
        }
    }
    Err(Error::NonConvergence {
        steps: SERIES_MAX_TERMS,
    })
}

/// Upper bound on the series tail beyond `level`, using w/(1+w) <= w and
/// count(n) <= bound(n): a weighted geometric tail with a closed form per
/// bound shape.
fn tail_bound(bound: BoundDescriptor, scale: f64, z: f64, level: u64) -> f64 {
    match bound {
        BoundDescriptor::Constant { a_bar } => scale * a_bar * linear_tail(z, level),
        // Exponential bounds only pair with univariate parameters, so the
        // scale is 1 and the tail is geometric in q = c * z.
        BoundDescriptor::Exponential { b, c } => b * linear_tail(c * z, level),
        BoundDescriptor::Linear { b } => scale * b * quadratic_tail(z, level),
    }
}

/// Sum of m * q^m over m > t.
fn linear_tail(q: f64, t: u64) -> f64 {
    let one_minus = 1.0 - q;
    let lead = q.powi((t + 1).min(i32::MAX as u64) as i32);
    lead * ((t + 1) as f64 * one_minus + q) / (one_minus * one_minus)
}

/// Sum of m^2 * q^m over m > t.
fn quadratic_tail(q: f64, t: u64) -> f64 {
    let one_minus = 1.0 - q;
    let lead = q.powi((t + 1).min(i32::MAX as u64) as i32);
    let t1 = (t + 1) as f64;
    lead * (t1 * t1 / one_minus
        + 2.0 * t1 * q / (one_minus * one_minus)
        + q * (1.0 + q) / (one_minus * one_minus * one_minus))
}

/// Closed-form expected size of the *bound* at argument z: sum over n of
/// n * bound(n) * z^n. An upper bound on any structure's expected size at
/// the same argument.
fn bound_expected_size(bound: BoundDescriptor, z: f64) -> f64 {
    match bound {
        BoundDescriptor::Constant { a_bar } => {
            let q = 1.0 - z;
            a_bar * z / (q * q)
        }
        BoundDescriptor::Exponential { b, c } => {
            let cz = c * z;
            let q = 1.0 - cz;
            b * cz / (q * q)
        }
        BoundDescriptor::Linear { b } => {
            let q = 1.0 - z;
            b * z * (1.0 + z) / (q * q * q)
        }
    }
}

/// Bisects the weight argument until the exact expected size is within
/// `rel_tol` (relatively) of `target_size`. The search interval is
/// (0, z_max) where z_max keeps the dominating rate finite; targets above
/// the bound's expected size at z_max are reported as unreachable rather
/// than searched for.
pub fn calibrate_numeric(structure: &CombStructure, target_size: f64, rel_tol: f64) -> Result<f64> {
    if !(target_size > 0.0) || !target_size.is_finite() {
        return Err(Error::ParamDomain {
            what: "calibration target size",
            value: target_size,
        });
    }
    if !(rel_tol > 0.0 && rel_tol < 0.5) {
        return Err(Error::ParamDomain {
            what: "calibration tolerance",
            value: rel_tol,
        });
    }
    let z_max = match structure.bound() {
        BoundDescriptor::Exponential { c, .. } if c > 1.0 => Z_CEILING / c,
        _ => Z_CEILING,
    };
    let max_expected = bound_expected_size(structure.bound(), z_max);
    if target_size > max_expected {
        return Err(Error::UnreachableTarget {
            target: target_size,
            max_expected,
        });
    }

    let accept = rel_tol * target_size;
    let stop_above = target_size + accept;
    let (mut lo, mut hi) = (0.0f64, z_max);
    for _ in 0..BISECTION_MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        let params = BoltzmannParams::Univariate { z: mid };
        let e = expected_size_capped(structure, &params, stop_above)?;
        if (e - target_size).abs() <= accept {
            return Ok(mid);
        }
        if e < target_size {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        steps: BISECTION_MAX_STEPS,
    })
}

/// Draws samples until one satisfies the rejection mode, returning the
/// accepted sample and the number of draws it took. Free mode accepts the
/// first draw; the windowed and exact modes retry up to
/// `config.max_attempts` times before reporting exhaustion.
pub fn sample_with_rejection(
    sampler: &Sampler,
    config: &RejectionConfig,
    rng: &mut RandomStream,
) -> Result<(PowersetSample, u64)> {
    config.validate()?;
    let accepts: Box<dyn Fn(&PowersetSample) -> bool> = match config.mode {
        RejectionMode::Free => return Ok((sampler.sample(rng)?, 1)),
        RejectionMode::Approximate { target, epsilon } => {
            let (lo, hi) = acceptance_window(target, epsilon);
            Box::new(move |s: &PowersetSample| s.size >= lo && s.size <= hi)
        }
        RejectionMode::Exact { target } => Box::new(move |s: &PowersetSample| s.size == target),
    };
    for attempt in 1..=config.max_attempts {
        let sample = sampler.sample(rng)?;
        if accepts(&sample) {
            return Ok((sample, attempt));
        }
    }
    Err(Error::RetriesExhausted {
        attempts: config.max_attempts,
    })
}
