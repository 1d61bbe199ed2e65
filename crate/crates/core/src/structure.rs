//! Combinatorial structures: per-level atom counts with growth bounds.
//!
//! A structure is a graded family of distinct atoms: level n holds
//! `count(n)` atoms, each addressed by a rank below that count and rendered
//! to a human-readable label by `unrank`. Sampling only ever touches counts
//! and ranks; labels exist for output. Every structure carries a
//! [`BoundDescriptor`] that must dominate its counting sequence — samplers
//! rely on the bound and report a violation if a level exceeds it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies one atom: its size class (`level`) and its rank within that
/// class, `0 <= rank < count(level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartLabel {
    pub level: u64,
    pub rank: u128,
}

/// Dominating shape for a counting sequence. `value_at(n)` must be at least
/// `count(n)` for every level of the structure it is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundDescriptor {
    /// count(n) <= a_bar for all n.
    Constant { a_bar: f64 },
    /// count(n) <= b * c^n for all n.
    Exponential { b: f64, c: f64 },
    /// count(n) <= b * n for all n. Forces count(0) = 0.
    Linear { b: f64 },
}

impl BoundDescriptor {
    /// Checks the descriptor's own parameters (positivity and finiteness).
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &'static str, value: f64| Err(Error::ParamDomain { what, value });
        match *self {
            BoundDescriptor::Constant { a_bar } => {
                if !(a_bar > 0.0) || !a_bar.is_finite() {
                    return bad("constant bound a_bar", a_bar);
                }
            }
            BoundDescriptor::Exponential { b, c } => {
                if !(b > 0.0) || !b.is_finite() {
                    return bad("exponential bound b", b);
                }
                if !(c > 0.0) || !c.is_finite() {
                    return bad("exponential bound c", c);
                }
            }
            BoundDescriptor::Linear { b } => {
                if !(b > 0.0) || !b.is_finite() {
                    return bad("linear bound b", b);
                }
            }
        }
        Ok(())
    }

    /// The bound's value at one level.
    pub fn value_at(&self, level: u64) -> f64 {
        match *self {
            BoundDescriptor::Constant { a_bar } => a_bar,
            BoundDescriptor::Exponential { b, c } => b * c.powi(level.min(i32::MAX as u64) as i32),
            BoundDescriptor::Linear { b } => b * level as f64,
        }
    }
}

/// Counting interface a structure implements: how many atoms a level holds
/// and what each one is called.
pub trait CountingClass: Send + Sync {
    /// Number of atoms at `level`.
    fn count(&self, level: u64) -> Result<u128>;
    /// Label of the atom `(level, rank)`. Must be injective per level and
    /// fail for ranks at or beyond `count(level)`.
    fn unrank(&self, level: u64, rank: u128) -> Result<String>;
}

/// A named structure: counting class plus the bound that dominates it.
#[derive(Clone)]
pub struct CombStructure {
    name: String,
    bound: BoundDescriptor,
    class: Arc<dyn CountingClass>,
}

impl fmt::Debug for CombStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CombStructure")
            .field("name", &self.name)
            .field("bound", &self.bound)
            .finish_non_exhaustive()
    }
}

/// One level where a structure's count exceeds its declared bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundViolationAt {
    pub level: u64,
    pub count: u128,
    pub bound: f64,
}

/// How far [`CombStructure::from_fns`] sweeps the counting closure against
/// the declared bound at construction.
pub const DEFAULT_BOUND_SWEEP: u64 = 10_000;

impl CombStructure {
    /// Builds a structure from counting closures. Validates the bound
    /// parameters, then sweeps levels `0..=`[`DEFAULT_BOUND_SWEEP`] and
    /// rejects the structure if any swept count exceeds the bound. The
    /// sweep is a prefix check, not a proof; sampling still rechecks each
    /// level it touches. Use [`from_fns_unchecked`] when the sweep is too
    /// expensive or the counting closure cannot evaluate that far.
    ///
    /// [`from_fns_unchecked`]: CombStructure::from_fns_unchecked
    pub fn from_fns<C, U>(
        name: impl Into<String>,
        bound: BoundDescriptor,
        count: C,
        unrank: U,
    ) -> Result<Self>
    where
        C: Fn(u64) -> Result<u128> + Send + Sync + 'static,
        U: Fn(u64, u128) -> Result<String> + Send + Sync + 'static,
    {
        let structure = Self::from_fns_unchecked(name, bound, count, unrank)?;
        let violations = structure.validate_bound(DEFAULT_BOUND_SWEEP)?;
        if let Some(v) = violations.first() {
            return Err(Error::BoundViolation {
                level: v.level,
                ratio: v.count as f64 / v.bound,
            });
        }
        Ok(structure)
    }

    /// [`from_fns`](CombStructure::from_fns) without the construction-time
    /// bound sweep. The declared bound is trusted until sampling touches a
    /// level that contradicts it.
    pub fn from_fns_unchecked<C, U>(
        name: impl Into<String>,
        bound: BoundDescriptor,
        count: C,
        unrank: U,
    ) -> Result<Self>
    where
        C: Fn(u64) -> Result<u128> + Send + Sync + 'static,
        U: Fn(u64, u128) -> Result<String> + Send + Sync + 'static,
    {
        bound.validate()?;
        struct FnClass<C, U> {
            count: C,
            unrank: U,
        }
        impl<C, U> CountingClass for FnClass<C, U>
        where
            C: Fn(u64) -> Result<u128> + Send + Sync,
            U: Fn(u64, u128) -> Result<String> + Send + Sync,
        {
            fn count(&self, level: u64) -> Result<u128> {
                (self.count)(level)
            }
            fn unrank(&self, level: u64, rank: u128) -> Result<String> {
                (self.unrank)(level, rank)
            }
        }
        Ok(CombStructure {
            name: name.into(),
            bound,
            class: Arc::new(FnClass { count, unrank }),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn bound(&self) -> BoundDescriptor {
        self.bound
    }

    pub fn count(&self, level: u64) -> Result<u128> {
        self.class.count(level)
    }

    pub fn unrank(&self, level: u64, rank: u128) -> Result<String> {
        self.class.unrank(level, rank)
    }

    /// Renders an atom to its label.
    pub fn label(&self, part: PartLabel) -> Result<String> {
        self.unrank(part.level, part.rank)
    }

    /// Sweeps levels `0..=max_level` and reports every one whose count
    /// exceeds the declared bound. Empty means the bound holds on the swept
    /// range; counts that overflow propagate as errors.
    pub fn validate_bound(&self, max_level: u64) -> Result<Vec<BoundViolationAt>> {
        let mut violations = Vec::new();
        for level in 0..=max_level {
            let count = self.count(level)?;
            let bound = self.bound.value_at(level);
            if count as f64 > bound * (1.0 + 1e-12) {
                violations.push(BoundViolationAt {
                    level,
                    count,
                    bound,
                });
            }
        }
        Ok(violations)
    }

    /// One atom per positive integer: count(n) = 1 for n >= 1.
    pub fn naturals() -> Self {
        CombStructure {
            name: "naturals".into(),
            bound: BoundDescriptor::Constant { a_bar: 1.0 },
            class: Arc::new(NaturalsClass {
                include_zero: false,
            }),
        }
    }

    /// Naturals extended with a single size-zero atom: count(0) = 1 too.
    pub fn naturals_with_empty() -> Self {
        CombStructure {
            name: "naturals0".into(),
            bound: BoundDescriptor::Constant { a_bar: 1.0 },
            class: Arc::new(NaturalsClass { include_zero: true }),
        }
    }

    /// One atom per perfect square: count(n) = 1 when n = k^2, k >= 1.
    pub fn squares() -> Self {
        CombStructure {
            name: "squares".into(),
            bound: BoundDescriptor::Constant { a_bar: 1.0 },
            class: Arc::new(SquaresClass),
        }
    }

    /// All words over an alphabet of `k` symbols: count(n) = k^n, including
    /// the empty word at level 0. Alphabet size is limited to 36 so labels
    /// can use digits and lowercase letters.
    pub fn words(k: u32) -> Result<Self> {
        if !(2..=36).contains(&k) {
            return Err(Error::InvalidInput {
                what: format!("words alphabet size must be in 2..=36, got {k}"),
            });
        }
        Ok(CombStructure {
            name: format!("words:{k}"),
            bound: BoundDescriptor::Exponential {
                b: 1.0,
                c: k as f64,
            },
            class: Arc::new(WordsClass { k }),
        })
    }

    /// Positive integers with one of n marked positions each:
    /// count(n) = n for n >= 1.
    pub fn pointed_naturals() -> Self {
        CombStructure {
            name: "pointed".into(),
            bound: BoundDescriptor::Linear { b: 1.0 },
            class: Arc::new(PointedClass),
        }
    }

    /// Looks a builtin up by name. `words:<k>` takes the alphabet size
    /// inline, e.g. `words:2`.
    pub fn from_name(spec: &str) -> Result<Self> {
        match spec {
            "naturals" => Ok(Self::naturals()),
            "naturals0" => Ok(Self::naturals_with_empty()),
            "squares" => Ok(Self::squares()),
            "pointed" => Ok(Self::pointed_naturals()),
            _ => {
                if let Some(arg) = spec.strip_prefix("words:") {
                    let k = arg.parse::<u32>().map_err(|_| Error::InvalidInput {
                        what: format!("words alphabet size must be an integer, got {arg:?}"),
                    })?;
                    return Self::words(k);
                }
                Err(Error::InvalidInput {
                    what: format!(
                        "unknown structure {spec:?}; expected one of {}",
                        Self::builtin_names().join(", ")
                    ),
                })
            }
        }
    }

    /// Names accepted by [`from_name`](CombStructure::from_name).
    pub fn builtin_names() -> Vec<&'static str> {
        vec!["naturals", "naturals0", "squares", "pointed", "words:<k>"]
    }
}

struct NaturalsClass {
    include_zero: bool,
}

impl CountingClass for NaturalsClass {
    fn count(&self, level: u64) -> Result<u128> {
        if level == 0 {
            Ok(self.include_zero as u128)
        } else {
            Ok(1)
        }
    }

    fn unrank(&self, level: u64, rank: u128) -> Result<String> {
        if rank >= self.count(level)? {
            return Err(rank_out_of_range("naturals", level, rank));
        }
        Ok(level.to_string())
    }
}

struct SquaresClass;

impl CountingClass for SquaresClass {
    fn count(&self, level: u64) -> Result<u128> {
        if level == 0 {
            return Ok(0);
        }
        let r = level.isqrt();
        Ok(u128::from(r * r == level))
    }

    fn unrank(&self, level: u64, rank: u128) -> Result<String> {
        if rank >= self.count(level)? {
            return Err(rank_out_of_range("squares", level, rank));
        }
        Ok(level.to_string())
    }
}

struct WordsClass {
    k: u32,
}

impl CountingClass for WordsClass {
    fn count(&self, level: u64) -> Result<u128> {
        let overflow = || Error::Capacity {
            what: format!("count of words:{} at level {level} exceeds u128", self.k),
        };
        let exp = u32::try_from(level).map_err(|_| overflow())?;
        (self.k as u128).checked_pow(exp).ok_or_else(overflow)
    }

    fn unrank(&self, level: u64, rank: u128) -> Result<String> {
        if rank >= self.count(level)? {
            return Err(rank_out_of_range("words", level, rank));
        }
        // The word is the rank written in base k, padded to `level` digits,
        // most significant first.
        let mut digits = vec!['0'; level as usize];
        let mut r = rank;
        for slot in digits.iter_mut().rev() {
            let d = (r % self.k as u128) as u32;
            *slot = char::from_digit(d, 36).expect("digit below 36");
            r /= self.k as u128;
        }
        Ok(digits.into_iter().collect())
    }
}

struct PointedClass;

impl CountingClass for PointedClass {
    fn count(&self, level: u64) -> Result<u128> {
        Ok(level as u128)
    }

    fn unrank(&self, level: u64, rank: u128) -> Result<String> {
        if rank >= self.count(level)? {
            return Err(rank_out_of_range("pointed", level, rank));
        }
        Ok(format!("{}#{}", level, rank + 1))
    }
}

fn rank_out_of_range(name: &str, level: u64, rank: u128) -> Error {
    Error::InvalidInput {
        what: format!("rank {rank} out of range for {name} at level {level}"),
    }
}
