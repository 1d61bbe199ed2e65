//! Uniform-measure sampling of subsets of graded combinatorial structures.
//!
//! A structure grades its atoms by integer size; under the product measure
//! with weight z^size per atom, every atom joins a sampled subset
//! independently, and subsets of equal total size are equally likely. The
//! sampler draws such subsets in expected time proportional to a candidate
//! rate derived from the structure's growth bound, never enumerating the
//! atom set, so expected sizes in the billions are routine.
//!
//! The crate splits into focused modules: [`structure`] describes atom
//! families and their growth bounds, [`sampler`] draws subsets,
//! [`tuning`] calibrates weights to target sizes and applies rejection
//! policies, [`analysis`] turns samples into staircase profiles and checks
//! them against exact enumerations and limit curves, and [`verify`]
//! bundles the statistical self-checks. [`rng`], [`dist`] and [`special`]
//! are the deterministic numeric substrate underneath.

// Negated float comparisons of the form `!(x > 0.0)` are deliberate: they
// reject NaN where `x <= 0.0` would let it through. Reference constants keep
// their full published digits even past f64 resolution.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod dist;
pub mod error;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod structure;
pub mod tuning;
pub mod verify;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use sampler::{BoltzmannParams, PowersetSample, Sampler};
pub use structure::{BoundDescriptor, CombStructure, PartLabel};
