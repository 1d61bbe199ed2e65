//! Diagram geometry, exact small-case distributions, and statistical
//! verification helpers.
//!
//! A sampled subset's multiset of part sizes draws a staircase profile (a
//! Young-diagram boundary); after rescaling, profiles of large samples
//! concentrate around deterministic limit curves, and the sup distance to
//! those curves is the geometric check. For small atom sets the subset
//! distribution can be enumerated exactly and compared against empirical
//! counts with a chi-square test; a checked DP counts fixed-size subsets
//! for size-conditioned checks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{marginal_inclusion_prob, BoltzmannParams, PowersetSample};
use crate::special::{chi_square_survival, reg_gamma_upper};
use crate::structure::{CombStructure, PartLabel};

/// Most atoms an exact enumeration will expand (2^24 subset probabilities).
const ORACLE_MAX_ATOMS: u64 = 24;

/// Largest subset size the distinct-subset counting DP accepts.
const DISTINCT_COUNT_MAX_SIZE: u64 = 1000;

/// Smallest expected count a chi-square cell may carry; cells below it are
/// pooled before the statistic is formed.
const MIN_EXPECTED_PER_CELL: f64 = 5.0;

/// Slack on the total probability mass passed to the chi-square test.
const PROBABILITY_MASS_SLACK: f64 = 1e-9;

/// sqrt(12)/pi, the scale of the staircase limit curve.
fn vershik_scale() -> f64 {
    12.0f64.sqrt() / std::f64::consts::PI
}

// ---------------------------------------------------------------------
// Young diagrams
// ---------------------------------------------------------------------

/// Staircase profile of one sample: for x > 0 the profile height Y(x) is
/// the number of parts with level >= x. Stored as the ascending list of
/// present levels with their suffix counts, plus the number of level-zero
/// parts (rows of width zero, visible only as a drop at x = 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct YoungDiagram {
    breakpoints: Vec<(u64, u64)>,
    zero_parts: u64,
    total_size: u64,
    total_length: u64,
}

impl YoungDiagram {
    pub fn from_sample(sample: &PowersetSample) -> Self {
        let mut multiplicity: std::collections::BTreeMap<u64, u64> = Default::default();
        for part in &sample.parts {
            *multiplicity.entry(part.level).or_insert(0) += 1;
        }
        let zero_parts = multiplicity.get(&0).copied().unwrap_or(0);
        let positive: Vec<(u64, u64)> = multiplicity
            .into_iter()
            .filter(|&(level, _)| level > 0)
            .collect();
        let mut breakpoints = Vec::with_capacity(positive.len());
        let mut suffix = 0u64;
        for &(level, count) in positive.iter().rev() {
            suffix += count;
            breakpoints.push((level, suffix));
        }
        breakpoints.reverse();
        YoungDiagram {
            breakpoints,
            zero_parts,
            total_size: sample.size,
            total_length: sample.length,
        }
    }

    /// Present levels with the number of parts at or above each, ascending.
    pub fn breakpoints(&self) -> &[(u64, u64)] {
        &self.breakpoints
    }

    pub fn total_size(&self) -> u64 {
        self.total_size
    }

    pub fn total_length(&self) -> u64 {
        self.total_length
    }

    /// Profile height at x: the number of parts with level >= x for x > 0,
    /// and the total number of parts at or left of zero.
    pub fn y_at(&self, x: f64) -> u64 {
        if x <= 0.0 {
            return self.total_length;
        }
        let threshold = x.ceil() as u64;
        match self
            .breakpoints
            .binary_search_by_key(&threshold, |&(level, _)| level)
        {
            Ok(i) => self.breakpoints[i].1,
            Err(i) => self.breakpoints.get(i).map_or(0, |&(_, suffix)| suffix),
        }
    }

    /// The profile as a polyline of corner points, tracing each horizontal
    /// run and the drop at its end, starting from (0, length).
    pub fn corners(&self) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(2 * self.breakpoints.len() + 2);
        pts.push((0.0, self.total_length as f64));
        if self.zero_parts > 0 {
            pts.push((0.0, (self.total_length - self.zero_parts) as f64));
        }
        for (i, &(level, suffix)) in self.breakpoints.iter().enumerate() {
            // The drop at this level lands on the next level's suffix count.
            let next = self.breakpoints.get(i + 1).map_or(0, |&(_, s)| s);
            pts.push((level as f64, suffix as f64));
            pts.push((level as f64, next as f64));
        }
        pts
    }
}

/// How to map a diagram's corner points into normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RescaleScheme {
    /// Both axes divided by sqrt(total size); the natural scaling when
    /// sizes and lengths grow together.
    SqrtSize,
    /// x scaled by expected_length / (2 * expected_size), y by
    /// 1 / expected_length; the scaling for size/length-steered samples
    /// whose parts grow much faster than their count.
    Bivariate {
        expected_size: f64,
        expected_length: f64,
    },
}

/// Applies a rescale scheme to the diagram's corner points.
pub fn rescale_diagram(diagram: &YoungDiagram, scheme: RescaleScheme) -> Result<Vec<(f64, f64)>> {
    let (sx, sy) = match scheme {
        RescaleScheme::SqrtSize => {
            if diagram.total_size() == 0 {
                return Err(Error::EmptyDiagram);
            }
            let root = (diagram.total_size() as f64).sqrt();
            (1.0 / root, 1.0 / root)
        }
        RescaleScheme::Bivariate {
            expected_size,
            expected_length,
        } => {
            if !(expected_size > 0.0) || !expected_size.is_finite() {
                return Err(Error::ParamDomain {
                    what: "rescale expected size",
                    value: expected_size,
                });
            }
            if !(expected_length > 0.0) || !expected_length.is_finite() {
                return Err(Error::ParamDomain {
                    what: "rescale expected length",
                    value: expected_length,
                });
            }
            (
                expected_length / (2.0 * expected_size),
                1.0 / expected_length,
            )
        }
    };
    Ok(diagram
        .corners()
        .iter()
        .map(|&(x, y)| (x * sx, y * sy))
        .collect())
}

// ---------------------------------------------------------------------
// Limit curves
// ---------------------------------------------------------------------

/// Deterministic curves that rescaled profiles concentrate around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitCurveKind {
    /// y(x) = (sqrt(12)/pi) * ln(1 + exp(-pi x / sqrt(12))), the staircase
    /// limit for unit-count structures under sqrt-size rescaling; satisfies
    /// exp(c y) - exp(-c x) = 1 with c = pi/sqrt(12).
    Vershik,
    /// y(x) = Q(1/2, x), the upper regularized gamma survival at shape 1/2,
    /// the profile limit for square-indexed parts under the bivariate
    /// rescaling.
    GammaSurvival,
}

/// Evaluates a limit curve at x.
pub fn limit_shape(kind: LimitCurveKind, x: f64) -> f64 {
    match kind {
        LimitCurveKind::Vershik => {
            let scale = vershik_scale();
            scale * (-x / scale).exp().ln_1p()
        }
        LimitCurveKind::GammaSurvival => {
            if x <= 0.0 {
                1.0
            } else {
                reg_gamma_upper(0.5, x).expect("shape 1/2 and positive x are in domain")
            }
        }
    }
}

/// Largest vertical distance from the points to the curve.
pub fn sup_distance(points: &[(f64, f64)], kind: LimitCurveKind) -> f64 {
    points
        .iter()
        .map(|&(x, y)| (y - limit_shape(kind, x)).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------
// Exact enumeration
// ---------------------------------------------------------------------

/// Exact subset distribution over a finite atom set: `probs[mask]` is the
/// probability that the sample's restriction to `atoms` equals the subset
/// selected by `mask` (bit i picks `atoms[i]`).
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub atoms: Vec<PartLabel>,
    pub probs: Vec<f64>,
}

impl ExactDistribution {
    /// Mask index of a part set, or None if any part is outside the
    /// enumerated atoms.
    pub fn index_of(&self, parts: &[PartLabel]) -> Option<usize> {
        let mut mask = 0usize;
        for part in parts {
            let i = self.atoms.binary_search(part).ok()?;
            mask |= 1 << i;
        }
        Some(mask)
    }
}

/// Enumerates every atom with level at most `level_cap` and the exact
/// probability of each subset of them. Atom inclusions are independent, so
/// the distribution doubles once per atom; more than [`ORACLE_MAX_ATOMS`]
/// atoms is reported as a capacity error.
pub fn enumerate_oracle(
    structure: &CombStructure,
    params: &BoltzmannParams,
    level_cap: u64,
) -> Result<ExactDistribution> {
    params.validate_for(structure.bound())?;
    let mut atoms = Vec::new();
    let mut total: u64 = 0;
    for level in 0..=level_cap {
        let count = structure.count(level)?;
        total = total.saturating_add(u64::try_from(count).unwrap_or(u64::MAX));
        if total > ORACLE_MAX_ATOMS {
            return Err(Error::Capacity {
                what: format!(
                    "{} atoms at levels 0..={level_cap} exceed the enumeration limit of {}",
                    structure.name(),
                    ORACLE_MAX_ATOMS
                ),
            });
        }
        for rank in 0..count {
            atoms.push(PartLabel { level, rank });
        }
    }
    let mut probs = vec![1.0f64];
    for atom in &atoms {
        let p = marginal_inclusion_prob(params, atom.level);
        let len = probs.len();
        let mut next = vec![0.0; 2 * len];
        for (mask, &q) in probs.iter().enumerate() {
            next[mask] = q * (1.0 - p);
            next[mask + len] = q * p;
        }
        probs = next;
    }
    Ok(ExactDistribution { atoms, probs })
}

// ---------------------------------------------------------------------
// Distinct-subset counting
// ---------------------------------------------------------------------

/// Number of subsets of the structure's atoms with total size exactly `n`,
/// by a per-level DP: level k with a atoms contributes a factor of
/// sum over j of C(a, j) x^(jk), and level-zero atoms double the count
/// without changing the size. All arithmetic is overflow-checked.
pub fn distinct_subset_count(structure: &CombStructure, n: u64) -> Result<u128> {
    if n > DISTINCT_COUNT_MAX_SIZE {
        return Err(Error::InvalidInput {
            what: format!(
                "subset-count size {n} exceeds the supported horizon {DISTINCT_COUNT_MAX_SIZE}"
            ),
        });
    }
    let overflow = || Error::Capacity {
        what: format!(
            "subset count of {} at size {n} exceeds u128",
            structure.name()
        ),
    };

    let zero_atoms = structure.count(0)?;
    if zero_atoms > 127 {
        return Err(overflow());
    }
    let zero_factor = 1u128 << zero_atoms;

    let size = n as usize;
    let mut ways = vec![0u128; size + 1];
    ways[0] = zero_factor;
    for level in 1..=n {
        let atoms = structure.count(level)?;
        if atoms == 0 {
            continue;
        }
        // Binomial row C(atoms, j) for j * level <= n, built incrementally:
        // C(a, j) = C(a, j-1) * (a - j + 1) / j, exact at each step.
        let j_max = (n / level).min(u64::try_from(atoms).unwrap_or(u64::MAX));
        let mut binom = vec![1u128];
        let mut c = 1u128;
        for j in 1..=j_max {
            let factor = atoms - (j as u128 - 1);
            c = c.checked_mul(factor).ok_or_else(overflow)? / j as u128;
            binom.push(c);
        }
        let mut next = vec![0u128; size + 1];
        for (m, &w) in ways.iter().enumerate() {
            if w == 0 {
                continue;
            }
            for (j, &b) in binom.iter().enumerate() {
                let target = m + (j as u64 * level) as usize;
                if target > size {
                    break;
                }
                let add = b.checked_mul(w).ok_or_else(overflow)?;
                next[target] = next[target].checked_add(add).ok_or_else(overflow)?;
            }
        }
        ways = next;
    }
    Ok(ways[size])
}

// ---------------------------------------------------------------------
// Chi-square goodness of fit
// ---------------------------------------------------------------------

/// One (possibly pooled) cell of a chi-square comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub observed: u64,
    pub expected: f64,
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    pub cells: Vec<ReportCell>,
}

/// Pearson chi-square of observed counts against cell probabilities.
///
/// Cells whose expected count falls below [`MIN_EXPECTED_PER_CELL`] are
/// pooled, smallest expected first, until each pooled cell clears the
/// minimum; a trailing under-filled pool is folded into the previous cell.
/// The probabilities must be positive and sum to one.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> Result<VerificationReport> {
    if observed.len() != expected_probs.len() {
        return Err(Error::InvalidInput {
            what: format!(
                "observed and expected lengths differ: {} vs {}",
                observed.len(),
                expected_probs.len()
            ),
        });
    }
    if observed.is_empty() {
        return Err(Error::InvalidInput {
            what: "chi-square needs at least one cell".into(),
        });
    }
    for &p in expected_probs {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::ParamDomain {
                what: "cell probability",
                value: p,
            });
        }
    }
    let mass: f64 = expected_probs.iter().sum();
    if (mass - 1.0).abs() > PROBABILITY_MASS_SLACK {
        return Err(Error::InvalidInput {
            what: format!("cell probabilities sum to {mass}, not 1"),
        });
    }
    let mut total: u64 = 0;
    for &o in observed {
        total = total.checked_add(o).ok_or_else(|| Error::Capacity {
            what: "observed total exceeds u64".into(),
        })?;
    }
    if total == 0 {
        return Err(Error::InvalidInput {
            what: "no observations".into(),
        });
    }

    let total_f = total as f64;
    let mut order: Vec<usize> = (0..observed.len()).collect();
    order.sort_by(|&a, &b| expected_probs[a].total_cmp(&expected_probs[b]));
    let mut cells: Vec<ReportCell> = Vec::new();
    let mut pool = ReportCell {
        observed: 0,
        expected: 0.0,
    };
    for &i in &order {
        pool.observed += observed[i];
        pool.expected += expected_probs[i] * total_f;
        if pool.expected >= MIN_EXPECTED_PER_CELL {
            cells.push(pool);
            pool = ReportCell {
                observed: 0,
                expected: 0.0,
            };
        }
    }
    if pool.expected > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.observed += pool.observed;
                last.expected += pool.expected;
            }
            None => cells.push(pool),
        }
    }
    if cells.len() < 2 {
        return Err(Error::InvalidInput {
            what: format!(
                "only {} cell(s) reach the expected-count minimum of {MIN_EXPECTED_PER_CELL}; \
                 draw more samples or merge cells",
                cells.len()
            ),
        });
    }

    let statistic = cells
        .iter()
        .map(|c| {
            let d = c.observed as f64 - c.expected;
            d * d / c.expected
        })
        .sum();
    let dof = (cells.len() - 1) as u64;
    let p_value = chi_square_survival(statistic, dof)?;
    Ok(VerificationReport {
        statistic,
        dof,
        p_value,
        cells,
    })
}

// ---------------------------------------------------------------------
// Covariance
// ---------------------------------------------------------------------

/// Population covariance of two equal-length series and the standard error
/// of that estimate (standard deviation of the centered products divided by
/// sqrt n).
pub fn empirical_covariance(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput {
            what: format!("series lengths differ: {} vs {}", xs.len(), ys.len()),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InvalidInput {
            what: "covariance needs at least two observations".into(),
        });
    }
    let nf = n as f64;
    let xm = xs.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let p = (x - xm) * (y - ym);
        sum += p;
        sumsq += p * p;
    }
    let cov = sum / nf;
    let var_p = (sumsq / nf - cov * cov).max(0.0);
    Ok((cov, (var_p / nf).sqrt()))
}
