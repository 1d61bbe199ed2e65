//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors surfaced by structures, samplers, calibration, and analysis.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain.
    #[error("parameter out of domain: {what} = {value}")]
    ParamDomain { what: &'static str, value: f64 },

    /// The dominating rate diverges for the requested parameters.
    #[error("dominating rate diverges: c*z = {cz} is not < 1")]
    DivergentRate { cz: f64 },

    /// A level count exceeded its declared growth bound.
    #[error("bound violated at level {level}: count/bound ratio = {ratio}")]
    BoundViolation { level: u64, ratio: f64 },

    /// Rejection sampling gave up after the configured attempt budget.
    #[error("rejection budget exhausted after {attempts} attempts")]
    RetriesExhausted { attempts: u64 },

    /// The requested expected size cannot be reached inside the parameter domain.
    #[error("target {target} unreachable: expected size is at most {max_expected:e}")]
    UnreachableTarget { target: f64, max_expected: f64 },

    /// An iterative solver failed to converge within its step budget.
    #[error("no convergence after {steps} steps")]
    NonConvergence { steps: u64 },

    /// A computation exceeded a capacity limit (enumeration size, counter width).
    #[error("capacity exceeded: {what}")]
    Capacity { what: String },

    /// A diagram with no mass cannot be rescaled.
    #[error("empty diagram: total size is zero")]
    EmptyDiagram,

    /// Statistical input is malformed (length mismatch, bad probabilities, no data).
    #[error("invalid input: {what}")]
    InvalidInput { what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
