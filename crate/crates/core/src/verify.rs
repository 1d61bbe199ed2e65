//! Self-verification suites for the sampler.
//!
//! Four statistical checks target the properties the sampler promises:
//! per-atom inclusion frequencies, pairwise independence, exact agreement
//! with an enumerated small-case distribution, and uniformity among
//! equal-size subsets under exact-size conditioning. Each suite runs once
//! per configured seed and passes on a strict majority, so a single
//! unlucky seed cannot fail a healthy sampler while a real defect fails
//! every seed. The acceptance-bias knob deliberately mistunes the sampler
//! to prove the suites can catch it.

use serde::Serialize;

use crate::analysis::{chi_square_gof, empirical_covariance, enumerate_oracle};
use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::sampler::{marginal_inclusion_prob, BoltzmannParams, Sampler};
use crate::structure::CombStructure;
use crate::tuning::{calibrate_numeric, sample_with_rejection, RejectionConfig};

/// Weight argument the marginal, covariance and oracle suites run at.
const SUITE_Z: f64 = 0.5;

/// Deviation gate for frequency and covariance checks, in standard errors.
const SIGMA_GATE: f64 = 4.0;

/// Levels whose inclusion frequencies the marginal suite checks.
const MARGINAL_LEVELS: [u64; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

/// Level pairs whose empirical covariance the independence suite checks.
const COVARIANCE_PAIRS: [(u64, u64); 3] = [(1, 2), (1, 3), (2, 5)];

/// Level cap for the exact-enumeration suite (6 atoms, 64 subsets).
const ORACLE_LEVEL_CAP: u64 = 6;

/// Target size for the exact-size uniformity suite; size 8 has six
/// distinct-part subsets.
const UNIFORMITY_SIZE: u64 = 8;

/// Tuning for one verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    /// Seeds each suite is repeated under; a suite passes on a strict
    /// majority of seeds.
    pub seeds: Vec<u64>,
    /// Samples per seed for the marginal and covariance suites.
    pub marginal_samples: u64,
    /// Samples per seed for the exact-enumeration suite.
    pub oracle_samples: u64,
    /// Accepted samples per seed for the uniformity suite.
    pub uniformity_samples: u64,
    /// Chi-square significance level the oracle and uniformity suites
    /// must clear.
    pub significance: f64,
    /// Multiplier on every thinning probability. 1.0 verifies the real
    /// sampler; anything else injects a fault the suites should flag.
    pub acceptance_bias: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seeds: vec![1, 2, 3],
            marginal_samples: 200_000,
            oracle_samples: 1_000_000,
            uniformity_samples: 60_000,
            significance: 1e-3,
            acceptance_bias: 1.0,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput {
                what: "verification needs at least one seed".into(),
            });
        }
        for (what, count) in [
            ("marginal_samples", self.marginal_samples),
            ("oracle_samples", self.oracle_samples),
            ("uniformity_samples", self.uniformity_samples),
        ] {
            if count == 0 {
                return Err(Error::InvalidInput {
                    what: format!("{what} must be at least 1"),
                });
            }
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::ParamDomain {
                what: "verification significance",
                value: self.significance,
            });
        }
        if !(self.acceptance_bias >= 0.0) || !self.acceptance_bias.is_finite() {
            return Err(Error::ParamDomain {
                what: "acceptance bias",
                value: self.acceptance_bias,
            });
        }
        Ok(())
    }
}

/// One suite's result under one seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedCheck {
    pub seed: u64,
    pub passed: bool,
    pub detail: String,
}

/// One suite's verdict across all seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub name: String,
    pub checks: Vec<SeedCheck>,
    pub passed: bool,
}

/// Verdict of a whole verification run: passes only if every suite does.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub suites: Vec<SuiteOutcome>,
    pub passed: bool,
}

fn majority(checks: &[SeedCheck]) -> bool {
    let passes = checks.iter().filter(|c| c.passed).count();
    2 * passes > checks.len()
}

fn suite(name: &str, checks: Vec<SeedCheck>) -> SuiteOutcome {
    let passed = majority(&checks);
    SuiteOutcome {
        name: name.into(),
        checks,
        passed,
    }
}

/// Runs every suite and aggregates the verdict.
pub fn run_all(config: &SuiteConfig) -> Result<VerifySummary> {
    config.validate()?;
    let (marginal, covariance) = marginal_and_covariance_suites(config)?;
    let oracle = oracle_suite(config)?;
    let uniformity = uniformity_suite(config)?;
    let suites = vec![marginal, covariance, oracle, uniformity];
    let passed = suites.iter().all(|s| s.passed);
    Ok(VerifySummary { suites, passed })
}

fn biased_sampler(structure: CombStructure, z: f64, bias: f64) -> Result<Sampler> {
    Sampler::new(structure, BoltzmannParams::Univariate { z })?.with_acceptance_bias(bias)
}

/// Marginal and covariance suites share one sample batch per seed: the
/// former gates each tracked level's inclusion frequency at
/// [`SIGMA_GATE`] standard errors, the latter gates each tracked pair's
/// covariance the same way (independent inclusions have covariance zero).
fn marginal_and_covariance_suites(config: &SuiteConfig) -> Result<(SuiteOutcome, SuiteOutcome)> {
    let params = BoltzmannParams::Univariate { z: SUITE_Z };
    let sampler = biased_sampler(CombStructure::naturals(), SUITE_Z, config.acceptance_bias)?;
    let n = config.marginal_samples;
    let nf = n as f64;

    let mut marginal_checks = Vec::new();
    let mut covariance_checks = Vec::new();
    for &seed in &config.seeds {
        let mut rng = RandomStream::new(seed);
        let mut hits = [0u64; MARGINAL_LEVELS.len()];
        let mut indicators: Vec<Vec<f64>> = MARGINAL_LEVELS
            .iter()
            .map(|_| Vec::with_capacity(n as usize))
            .collect();
        for _ in 0..n {
            let sample = sampler.sample(&mut rng)?;
            for (i, &level) in MARGINAL_LEVELS.iter().enumerate() {
                let included = sample.parts.iter().any(|p| p.level == level);
                hits[i] += included as u64;
                indicators[i].push(included as u64 as f64);
            }
        }

        let mut worst_sigma = 0.0f64;
        for (i, &level) in MARGINAL_LEVELS.iter().enumerate() {
            let expect = marginal_inclusion_prob(&params, level);
            let se = (expect * (1.0 - expect) / nf).sqrt();
            let sigma = (hits[i] as f64 / nf - expect).abs() / se;
            worst_sigma = worst_sigma.max(sigma);
        }
        marginal_checks.push(SeedCheck {
            seed,
            passed: worst_sigma < SIGMA_GATE,
            detail: format!(
                "worst marginal deviation {worst_sigma:.2} SE over levels 1..={}",
                MARGINAL_LEVELS.len()
            ),
        });

        let index_of_level = |level: u64| {
            MARGINAL_LEVELS
                .iter()
                .position(|&l| l == level)
                .expect("tracked level")
        };
        let mut worst_ratio = 0.0f64;
        let mut degenerate = false;
        for &(a, b) in &COVARIANCE_PAIRS {
            let (cov, se) = empirical_covariance(
                &indicators[index_of_level(a)],
                &indicators[index_of_level(b)],
            )?;
            if se == 0.0 {
                degenerate = true;
                continue;
            }
            worst_ratio = worst_ratio.max(cov.abs() / se);
        }
        covariance_checks.push(SeedCheck {
            seed,
            passed: !degenerate && worst_ratio < SIGMA_GATE,
            detail: format!("worst pair covariance {worst_ratio:.2} SE over {COVARIANCE_PAIRS:?}"),
        });
    }
    Ok((
        suite("marginals", marginal_checks),
        suite("covariance", covariance_checks),
    ))
}

/// Draws from the full structure, keeps samples confined to the first few
/// levels (independence makes that restriction distribution-exact), and
/// chi-squares the subset counts against the enumerated distribution.
fn oracle_suite(config: &SuiteConfig) -> Result<SuiteOutcome> {
    let params = BoltzmannParams::Univariate { z: SUITE_Z };
    let oracle = enumerate_oracle(&CombStructure::naturals(), &params, ORACLE_LEVEL_CAP)?;
    let sampler = biased_sampler(CombStructure::naturals(), SUITE_Z, config.acceptance_bias)?;

    let mut checks = Vec::new();
    for &seed in &config.seeds {
        let mut rng = RandomStream::new(seed.wrapping_add(1_000));
        let mut counts = vec![0u64; oracle.probs.len()];
        let mut kept = 0u64;
        for _ in 0..config.oracle_samples {
            let sample = sampler.sample(&mut rng)?;
            if let Some(mask) = oracle.index_of(&sample.parts) {
                counts[mask] += 1;
                kept += 1;
            }
        }
        let report = chi_square_gof(&counts, &oracle.probs)?;
        checks.push(SeedCheck {
            seed,
            passed: report.p_value > config.significance,
            detail: format!(
                "kept {kept}/{} samples, chi-square {:.2} (dof {}), p {:.3e}",
                config.oracle_samples, report.statistic, report.dof, report.p_value
            ),
        });
    }
    Ok(suite("oracle", checks))
}

/// All subsets of a given size carry equal probability; conditioning on
/// size [`UNIFORMITY_SIZE`] by exact rejection must land uniformly on the
/// six distinct-part subsets of 8.
fn uniformity_suite(config: &SuiteConfig) -> Result<SuiteOutcome> {
    const CELLS: [&[u64]; 6] = [&[8], &[1, 7], &[2, 6], &[3, 5], &[1, 2, 5], &[1, 3, 4]];

    let z = calibrate_numeric(&CombStructure::naturals(), UNIFORMITY_SIZE as f64, 1e-3)?;
    let sampler = biased_sampler(CombStructure::naturals(), z, config.acceptance_bias)?;
    let rejection = RejectionConfig::exact(UNIFORMITY_SIZE);

    let mut checks = Vec::new();
    for &seed in &config.seeds {
        let mut rng = RandomStream::new(seed.wrapping_add(2_000));
        let mut counts = [0u64; CELLS.len()];
        for _ in 0..config.uniformity_samples {
            let (sample, _) = sample_with_rejection(&sampler, &rejection, &mut rng)?;
            let levels: Vec<u64> = sample.parts.iter().map(|p| p.level).collect();
            let cell = CELLS
                .iter()
                .position(|&c| c == levels.as_slice())
                .unwrap_or_else(|| panic!("impossible size-8 subset {levels:?}"));
            counts[cell] += 1;
        }
        let probs = [1.0 / CELLS.len() as f64; CELLS.len()];
        let report = chi_square_gof(&counts, &probs)?;
        checks.push(SeedCheck {
            seed,
            passed: report.p_value > config.significance,
            detail: format!(
                "chi-square {:.2} (dof {}), p {:.3e}",
                report.statistic, report.dof, report.p_value
            ),
        });
    }
    Ok(suite("uniformity", checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> SuiteConfig {
        SuiteConfig {
            seeds: vec![1, 2, 3],
            marginal_samples: 20_000,
            oracle_samples: 100_000,
            uniformity_samples: 5_000,
            significance: 1e-3,
            acceptance_bias: 1.0,
        }
    }

    #[test]
    fn config_validation() {
        assert!(SuiteConfig::default().validate().is_ok());
        assert!(SuiteConfig {
            seeds: vec![],
            ..SuiteConfig::default()
        }
        .validate()
        .is_err());
        assert!(SuiteConfig {
            marginal_samples: 0,
            ..SuiteConfig::default()
        }
        .validate()
        .is_err());
        assert!(SuiteConfig {
            significance: 0.0,
            ..SuiteConfig::default()
        }
        .validate()
        .is_err());
        assert!(SuiteConfig {
            significance: 1.0,
            ..SuiteConfig::default()
        }
        .validate()
        .is_err());
        assert!(SuiteConfig {
            acceptance_bias: -0.5,
            ..SuiteConfig::default()
        }
        .validate()
        .is_err());
        assert!(SuiteConfig {
            acceptance_bias: f64::NAN,
            ..SuiteConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn healthy_sampler_passes_all_suites() {
        let summary = run_all(&quick_config()).unwrap();
        for suite in &summary.suites {
            assert!(
                suite.passed,
                "suite {} failed: {:?}",
                suite.name, suite.checks
            );
        }
        assert!(summary.passed);
        assert_eq!(summary.suites.len(), 4);
    }

    #[test]
    fn biased_sampler_is_flagged() {
        let summary = run_all(&SuiteConfig {
            acceptance_bias: 0.8,
            ..quick_config()
        })
        .unwrap();
        assert!(!summary.passed);
        // The blunt instruments: marginals shift by many standard errors.
        let marginals = summary
            .suites
            .iter()
            .find(|s| s.name == "marginals")
            .unwrap();
        assert!(!marginals.passed, "{:?}", marginals.checks);
        let oracle = summary.suites.iter().find(|s| s.name == "oracle").unwrap();
        assert!(!oracle.passed, "{:?}", oracle.checks);
    }

    #[test]
    fn summary_serializes() {
        let summary = run_all(&SuiteConfig {
            seeds: vec![7],
            marginal_samples: 5_000,
            oracle_samples: 20_000,
            uniformity_samples: 1_000,
            significance: 1e-4,
            acceptance_bias: 1.0,
        })
        .unwrap();
        let json = serde_json::to_string(&summary).unwrap();
        assert!(json.contains("\"suites\""));
        assert!(json.contains("\"passed\""));
    }
}
