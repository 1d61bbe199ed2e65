//! Subcommand argument sets and implementations.

use std::collections::hash_map::RandomState;
use std::fs::File;
use std::hash::{BuildHasher, Hasher};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::Serialize;

use pset_core::analysis::{
    limit_shape, rescale_diagram, LimitCurveKind, RescaleScheme, YoungDiagram,
};
use pset_core::rng::RandomStream;
use pset_core::sampler::{dominating_rate_total, BoltzmannParams, Sampler};
use pset_core::structure::{CombStructure, PartLabel};
use pset_core::tuning::{
    calibrate_numeric, calibrate_squares, expected_size, sample_with_rejection, RejectionConfig,
};
use pset_core::verify::{run_all, SuiteConfig};

use crate::{CliError, TUNING_REL_TOL};

const SHAPE_GRID_POINTS: usize = 512;
const BENCH_WARMUP: u64 = 3;
const FREE_BENCH_TARGETS: [f64; 3] = [1e3, 1e6, 1e9];
const EXACT_BENCH_TARGETS: [f64; 3] = [1e2, 1e3, 1e4];

/// Parses a nonnegative whole number, accepting scientific notation up to
/// 2^53 (the range where every integer is exact in an f64).
fn parse_whole(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() || !(0.0..=9_007_199_254_740_992.0).contains(&v) {
        return Err(format!("`{s}` is outside the supported whole-number range"));
    }
    if v.fract() != 0.0 {
        return Err(format!("`{s}` is not a whole number"));
    }
    Ok(v as u64)
}

/// Parses a strictly positive real, accepting scientific notation.
fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("`{s}` is not a positive number"))
    }
}

/// Parses a seed: a u64, or `random` for one drawn from OS entropy.
fn parse_seed(s: &str) -> Result<u64, String> {
    if s == "random" {
        return Ok(RandomState::new().build_hasher().finish());
    }
    s.parse()
        .map_err(|_| format!("`{s}` is not a seed (u64 or `random`)"))
}

/// Where the measure parameters come from: an explicit argument or
/// expected-size/length targets, exactly one source.
#[derive(Args, Debug)]
pub struct MeasureArgs {
    /// Structure name: naturals | naturals0 | squares | words:<k> | pointed.
    #[arg(long, default_value = "naturals")]
    structure: String,

    /// Explicit argument of the univariate measure.
    #[arg(long, conflicts_with_all = ["z1", "z2", "target_size", "target_length"])]
    z: Option<f64>,

    /// Explicit size argument of the bivariate measure (needs --z2).
    #[arg(long, requires = "z2", conflicts_with_all = ["target_size", "target_length"])]
    z1: Option<f64>,

    /// Explicit length argument of the bivariate measure (needs --z1).
    #[arg(long, requires = "z1")]
    z2: Option<f64>,

    /// Expected-size target; z is tuned by numeric inversion.
    #[arg(long, value_parser = parse_positive)]
    target_size: Option<f64>,

    /// Expected-length target, joint with --target-size (squares only).
    #[arg(long, value_parser = parse_positive, requires = "target_size")]
    target_length: Option<f64>,
}

impl MeasureArgs {
    fn structure(&self) -> Result<CombStructure, CliError> {
        Ok(CombStructure::from_name(&self.structure)?)
    }

    /// Resolves the measure, tuning to targets where asked. With no source
    /// given, tunes z to `fallback_size` when one applies.
    fn resolve(
        &self,
        structure: &CombStructure,
        fallback_size: Option<f64>,
    ) -> Result<BoltzmannParams, CliError> {
        if let Some(z) = self.z {
            return Ok(BoltzmannParams::Univariate { z });
        }
        if let (Some(z1), Some(z2)) = (self.z1, self.z2) {
            return Ok(BoltzmannParams::Bivariate { z1, z2 });
        }
        let target = match self.target_size.or(fallback_size) {
            Some(t) => t,
            None => {
                return Err(CliError::Config(
                    "supply --z, --z1/--z2, or --target-size".into(),
                ))
            }
        };
        match self.target_length {
            None => Ok(BoltzmannParams::Univariate {
                z: calibrate_numeric(structure, target, TUNING_REL_TOL)?,
            }),
            Some(length) => {
                if structure.name() != "squares" {
                    return Err(CliError::Config(format!(
                        "joint size/length calibration is only catalogued for squares, not {}",
                        structure.name()
                    )));
                }
                let (z1, z2) = calibrate_squares(target, length)?;
                Ok(BoltzmannParams::Bivariate { z1, z2 })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Free,
    Approx,
    Exact,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Free => "free",
            Mode::Approx => "approx",
            Mode::Exact => "exact",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn rejection_config(
    mode: Mode,
    n: Option<u64>,
    epsilon: f64,
    max_attempts: Option<u64>,
) -> Result<RejectionConfig, CliError> {
    let config = match mode {
        Mode::Free => RejectionConfig::free(),
        Mode::Approx => {
            let n = n.ok_or_else(|| CliError::Config("--mode approx needs --n".into()))?;
            RejectionConfig::approximate(n, epsilon)
        }
        Mode::Exact => {
            let n = n.ok_or_else(|| CliError::Config("--mode exact needs --n".into()))?;
            RejectionConfig::exact(n)
        }
    };
    Ok(match max_attempts {
        Some(cap) => config.with_max_attempts(cap),
        None => config,
    })
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    measure: MeasureArgs,

    /// Rejection mode applied to every draw.
    #[arg(long, value_enum, default_value_t = Mode::Free)]
    mode: Mode,

    /// Size target for exact and approximate rejection; also the tuning
    /// target when no measure source is given.
    #[arg(long, value_parser = parse_whole)]
    n: Option<u64>,

    /// Relative half-width of the approximate acceptance window.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,

    /// Number of samples to draw.
    #[arg(long, default_value = "1", value_parser = parse_whole)]
    count: u64,

    /// PRNG seed (u64 or `random`); echoed in the output header.
    #[arg(long, default_value = "42", value_parser = parse_seed)]
    seed: u64,

    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Record format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    /// Cap on rejection attempts per accepted sample.
    #[arg(long, hide = true, value_parser = parse_whole)]
    max_attempts: Option<u64>,
}

#[derive(Serialize)]
struct SampleRecord {
    parts: Vec<PartLabel>,
    size: u64,
    length: u64,
    attempts: u64,
}

pub fn run_sample(args: &SampleArgs) -> Result<u8, CliError> {
    let structure = args.measure.structure()?;
    let fallback = match args.mode {
        Mode::Free => None,
        Mode::Approx | Mode::Exact => args.n.map(|n| n as f64),
    };
    let params = args.measure.resolve(&structure, fallback)?;
    let config = rejection_config(args.mode, args.n, args.epsilon, args.max_attempts)?;
    let sampler = Sampler::new(structure, params)?;
    let mut rng = RandomStream::new(args.seed);
    let mut sink = open_sink(args.out.as_deref())?;
    match args.format {
        OutputFormat::Json => {
            let header = serde_json::json!({
                "structure": sampler.structure().name(),
                "params": sampler.params(),
                "mode": config,
                "seed": args.seed,
                "count": args.count,
            });
            writeln!(sink, "{header}")?;
            for _ in 0..args.count {
                let (sample, attempts) = sample_with_rejection(&sampler, &config, &mut rng)?;
                let record = SampleRecord {
                    parts: sample.parts,
                    size: sample.size,
                    length: sample.length,
                    attempts,
                };
                writeln!(sink, "{}", serde_json::to_string(&record)?)?;
            }
        }
        OutputFormat::Csv => {
            writeln!(
                sink,
                "# structure={} params={} mode={} seed={} count={}",
                sampler.structure().name(),
                serde_json::to_string(&sampler.params())?,
                serde_json::to_string(&config)?,
                args.seed,
                args.count
            )?;
            writeln!(sink, "size,length,attempts")?;
            for _ in 0..args.count {
                let (sample, attempts) = sample_with_rejection(&sampler, &config, &mut rng)?;
                writeln!(sink, "{},{},{}", sample.size, sample.length, attempts)?;
            }
        }
    }
    sink.flush()?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    measure: MeasureArgs,

    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_calibrate(args: &CalibrateArgs) -> Result<u8, CliError> {
    let structure = args.measure.structure()?;
    let params = args.measure.resolve(&structure, None)?;
    let lambda_bar = dominating_rate_total(&structure, &params)?;
    // The size series may legitimately exceed its term budget when the
    // weight argument sits within ~1e-8 of 1; report null instead.
    let expected = expected_size(&structure, &params).ok();
    let report = serde_json::json!({
        "structure": structure.name(),
        "params": params,
        "target_size": args.measure.target_size,
        "target_length": args.measure.target_length,
        "expected_size": expected,
        "lambda_bar": lambda_bar,
    });
    let mut sink = open_sink(args.out.as_deref())?;
    writeln!(sink, "{}", serde_json::to_string_pretty(&report)?)?;
    sink.flush()?;
    Ok(0)
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Samples per seed for the marginal and covariance suites.
    #[arg(long, value_parser = parse_whole)]
    count: Option<u64>,

    /// Samples per seed for the oracle-equivalence suite.
    #[arg(long, hide = true, value_parser = parse_whole)]
    oracle_samples: Option<u64>,

    /// Accepted draws per seed for the conditional-uniformity suite.
    #[arg(long, hide = true, value_parser = parse_whole)]
    uniformity_samples: Option<u64>,

    /// Multiplies every thinning acceptance probability; a fault-injection
    /// hook for checking that the suites detect a broken sampler.
    #[arg(long, hide = true, default_value_t = 1.0)]
    acceptance_bias: f64,

    /// Output file for the JSON summary; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run_verify(args: &VerifyArgs) -> Result<u8, CliError> {
    let defaults = SuiteConfig::default();
    let config = SuiteConfig {
        marginal_samples: args.count.unwrap_or(defaults.marginal_samples),
        oracle_samples: args.oracle_samples.unwrap_or(defaults.oracle_samples),
        uniformity_samples: args
            .uniformity_samples
            .unwrap_or(defaults.uniformity_samples),
        acceptance_bias: args.acceptance_bias,
        ..defaults
    };
    let summary = run_all(&config)?;
    let mut sink = open_sink(args.out.as_deref())?;
    writeln!(sink, "{}", serde_json::to_string_pretty(&summary)?)?;
    sink.flush()?;
    Ok(if summary.passed { 0 } else { 1 })
}

#[derive(Args, Debug)]
pub struct ShapeArgs {
    #[command(flatten)]
    measure: MeasureArgs,

    /// PRNG seed (u64 or `random`).
    #[arg(long, default_value = "42", value_parser = parse_seed)]
    seed: u64,

    /// Base path for the emitted files: <out>.diagram.csv and <out>.limit.csv.
    #[arg(long)]
    out: PathBuf,
}

pub fn run_shape(args: &ShapeArgs) -> Result<u8, CliError> {
    let structure = args.measure.structure()?;
    let params = args.measure.resolve(&structure, None)?;
    let (scheme, kind) = match params {
        BoltzmannParams::Univariate { .. } => {
            if !matches!(structure.name(), "naturals" | "naturals0") {
                return Err(CliError::Config(format!(
                    "no limit curve catalogued for {} under square-root rescaling",
                    structure.name()
                )));
            }
            (RescaleScheme::SqrtSize, LimitCurveKind::Vershik)
        }
        BoltzmannParams::Bivariate { .. } => {
            let (size, length) = match (args.measure.target_size, args.measure.target_length) {
                (Some(size), Some(length)) => (size, length),
                _ => {
                    return Err(CliError::Config(
                        "shape with a bivariate measure requires --target-size and \
                         --target-length"
                            .into(),
                    ))
                }
            };
            (
                RescaleScheme::Bivariate {
                    expected_size: size,
                    expected_length: length,
                },
                LimitCurveKind::GammaSurvival,
            )
        }
    };
    let sampler = Sampler::new(structure, params)?;
    let mut rng = RandomStream::new(args.seed);
    let sample = sampler.sample(&mut rng)?;
    let diagram = YoungDiagram::from_sample(&sample);
    let points = rescale_diagram(&diagram, scheme)?;
    let x_max = points.iter().map(|&(x, _)| x).fold(0.0, f64::max);
    let (x_scale, y_scale) = match scheme {
        RescaleScheme::SqrtSize => {
            let root = (diagram.total_size() as f64).sqrt();
            (root, 1.0 / root)
        }
        RescaleScheme::Bivariate {
            expected_size,
            expected_length,
        } => (2.0 * expected_size / expected_length, 1.0 / expected_length),
    };
    let mut diagram_csv = open_sink(Some(&suffixed(&args.out, ".diagram.csv")))?;
    let mut limit_csv = open_sink(Some(&suffixed(&args.out, ".limit.csv")))?;
    writeln!(diagram_csv, "x,y")?;
    writeln!(limit_csv, "x,y")?;
    let mut sup = 0.0f64;
    for i in 0..SHAPE_GRID_POINTS {
        let x = x_max * i as f64 / (SHAPE_GRID_POINTS - 1) as f64;
        let y = diagram.y_at(x * x_scale) as f64 * y_scale;
        let limit = limit_shape(kind, x);
        sup = sup.max((y - limit).abs());
        writeln!(diagram_csv, "{x:.11e},{y:.11e}")?;
        writeln!(limit_csv, "{x:.11e},{limit:.11e}")?;
    }
    diagram_csv.flush()?;
    limit_csv.flush()?;
    println!("sup distance: {sup:.6}");
    Ok(0)
}

fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Structure name: naturals | naturals0 | squares | words:<k> | pointed.
    #[arg(long, default_value = "naturals")]
    structure: String,

    /// Rejection mode timed at each target.
    #[arg(long, value_enum, default_value_t = Mode::Free)]
    mode: Mode,

    /// Comma-separated size targets; defaults to 1e3,1e6,1e9 (free) or
    /// 1e2,1e3,1e4 (exact/approx).
    #[arg(long, value_delimiter = ',', value_parser = parse_positive)]
    targets: Option<Vec<f64>>,

    /// Expected-length target fixed across rows (squares, free mode).
    #[arg(long, value_parser = parse_positive)]
    target_length: Option<f64>,

    /// Relative half-width of the approximate acceptance window.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,

    /// Timed repetitions per target, after warmup.
    #[arg(long, default_value = "100", value_parser = parse_whole)]
    reps: u64,

    /// PRNG seed (u64 or `random`).
    #[arg(long, default_value = "42", value_parser = parse_seed)]
    seed: u64,

    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct TimeStats {
    mean: f64,
    stddev: f64,
    p10: f64,
    p90: f64,
}

fn summarize(times_ms: &[f64]) -> TimeStats {
    let n = times_ms.len() as f64;
    let mean = times_ms.iter().sum::<f64>() / n;
    let var = if times_ms.len() > 1 {
        times_ms
            .iter()
            .map(|t| (t - mean) * (t - mean))
            .sum::<f64>()
            / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = times_ms.to_vec();
    sorted.sort_by(f64::total_cmp);
    TimeStats {
        mean,
        stddev: var.sqrt(),
        p10: percentile(&sorted, 0.10),
        p90: percentile(&sorted, 0.90),
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let ix = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[ix]
}

pub fn run_bench(args: &BenchArgs) -> Result<u8, CliError> {
    let structure = CombStructure::from_name(&args.structure)?;
    if args.reps == 0 {
        return Err(CliError::Config("--reps must be positive".into()));
    }
    let targets = args.targets.clone().unwrap_or_else(|| match args.mode {
        Mode::Free => FREE_BENCH_TARGETS.to_vec(),
        Mode::Approx | Mode::Exact => EXACT_BENCH_TARGETS.to_vec(),
    });
    let mut tuned = Vec::with_capacity(targets.len());
    for &target in &targets {
        let params = match args.target_length {
            Some(length) => {
                if structure.name() != "squares" {
                    return Err(CliError::Config(format!(
                        "joint size/length calibration is only catalogued for squares, not {}",
                        structure.name()
                    )));
                }
                if args.mode != Mode::Free {
                    return Err(CliError::Config(
                        "--target-length benchmarks run in free mode".into(),
                    ));
                }
                let (z1, z2) = calibrate_squares(target, length)?;
                BoltzmannParams::Bivariate { z1, z2 }
            }
            None => BoltzmannParams::Univariate {
                z: calibrate_numeric(&structure, target, TUNING_REL_TOL)?,
            },
        };
        tuned.push((target, params));
    }
    let mut rng = RandomStream::new(args.seed);
    let mut sink = open_sink(args.out.as_deref())?;
    writeln!(
        sink,
        "# structure={} mode={} reps={} seed={}",
        structure.name(),
        args.mode.name(),
        args.reps,
        args.seed
    )?;
    for (target, params) in &tuned {
        writeln!(
            sink,
            "# target={target} params={}",
            serde_json::to_string(params)?
        )?;
    }
    writeln!(sink, "target,mean_ms,stddev_ms,p10_ms,p90_ms,mean_attempts")?;
    for (target, params) in tuned {
        let sampler = Sampler::new(structure.clone(), params)?;
        let config = rejection_config(args.mode, Some(target.round() as u64), args.epsilon, None)?;
        for _ in 0..BENCH_WARMUP {
            sample_with_rejection(&sampler, &config, &mut rng)?;
        }
        let mut times_ms = Vec::with_capacity(args.reps as usize);
        let mut attempts_total = 0u64;
        for _ in 0..args.reps {
            let started = Instant::now();
            let (_, attempts) = sample_with_rejection(&sampler, &config, &mut rng)?;
            times_ms.push(started.elapsed().as_secs_f64() * 1e3);
            attempts_total += attempts;
        }
        let stats = summarize(&times_ms);
        writeln!(
            sink,
            "{target},{:.6},{:.6},{:.6},{:.6},{:.2}",
            stats.mean,
            stats.stddev,
            stats.p10,
            stats.p90,
            attempts_total as f64 / args.reps as f64
        )?;
    }
    sink.flush()?;
    Ok(0)
}
