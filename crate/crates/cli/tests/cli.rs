//! End-to-end tests for the `pset` binary.
//!
//! Every test spawns the compiled binary through `CARGO_BIN_EXE_pset` and
//! checks exit codes, stream contents, and output files. Seeds are fixed so
//! the runs are reproducible.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde::{Deserialize, Serialize};
use serde_json::Value;

fn pset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pset"))
        .args(args)
        .output()
        .expect("failed to spawn the pset binary")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process was killed by a signal")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is utf-8")
}

fn stdout_lines(out: &Output) -> Vec<String> {
    stdout_str(out)
        .lines()
        .filter(|line| !line.is_empty())
        .map(str::to_owned)
        .collect()
}

/// A scratch path under the system temp directory, unique per test.
fn temp_path(tag: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("pset-cli-{}-{tag}", std::process::id()));
    path
}

/// Mirror of the JSON record emitted per sample; used to round-trip lines.
#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Record {
    parts: Vec<Part>,
    size: u64,
    length: u64,
    attempts: u64,
}

#[derive(Debug, PartialEq, Serialize, Deserialize)]
struct Part {
    level: u64,
    rank: u128,
}

fn parse_records(lines: &[String]) -> Vec<Record> {
    lines
        .iter()
        .map(|line| serde_json::from_str(line).expect("record line parses"))
        .collect()
}

#[test]
fn sample_z_zero_yields_empty_sets() {
    let out = pset(&["sample", "--z", "0", "--count", "3", "--seed", "1"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 4, "one header line plus three records");
    for record in parse_records(&lines[1..]) {
        assert!(record.parts.is_empty());
        assert_eq!(record.size, 0);
        assert_eq!(record.length, 0);
        assert_eq!(record.attempts, 1);
    }
}

#[test]
fn sample_json_records_round_trip() {
    let out = pset(&["sample", "--z", "0.5", "--count", "1000", "--seed", "9"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 1001);

    let header: Value = serde_json::from_str(&lines[0]).expect("header parses");
    assert_eq!(header["structure"], "naturals");
    assert_eq!(header["seed"], 9);
    assert_eq!(header["count"], 1000);
    assert_eq!(header["params"]["z"], 0.5);

    for line in &lines[1..] {
        let value: Value = serde_json::from_str(line).expect("record line parses");
        let record: Record = serde_json::from_str(line).expect("record deserializes");
        let echoed = serde_json::to_value(&record).expect("record reserializes");
        assert_eq!(echoed, value, "round-trip changed the record");

        let size: u64 = record.parts.iter().map(|p| p.level).sum();
        assert_eq!(record.size, size, "size must equal the sum of part levels");
        assert_eq!(record.length, record.parts.len() as u64);
        assert_eq!(record.attempts, 1, "free mode never rejects");
        for part in &record.parts {
            assert_eq!(part.rank, 0, "naturals has one part per level");
        }
    }
}

#[test]
fn sample_tuned_to_target_size_lands_near_it() {
    let out = pset(&[
        "sample",
        "--target-size",
        "1e6",
        "--count",
        "1",
        "--seed",
        "5",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    let records = parse_records(&lines[1..]);
    assert_eq!(records.len(), 1);
    let size = records[0].size as f64;
    assert!(
        (5e5..=2e6).contains(&size),
        "size {size} is far from the tuned target 1e6"
    );
}

#[test]
fn sample_bivariate_squares_controls_length() {
    let out = pset(&[
        "sample",
        "--structure",
        "squares",
        "--target-size",
        "1e9",
        "--target-length",
        "50",
        "--count",
        "1",
        "--seed",
        "6",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    let records = parse_records(&lines[1..]);
    assert_eq!(records.len(), 1);
    let record = &records[0];
    assert!(
        (25..=75).contains(&record.length),
        "length {} is far from the tuned target 50",
        record.length
    );
    let size = record.size as f64;
    assert!(
        (1e8..=1e10).contains(&size),
        "size {size} is far from the tuned target 1e9"
    );
    for part in &record.parts {
        let root = (part.level as f64).sqrt().round() as u64;
        assert_eq!(
            root * root,
            part.level,
            "part level must be a perfect square"
        );
    }
}

#[test]
fn sample_seeds_are_deterministic() {
    let args = ["sample", "--z", "0.5", "--count", "50", "--seed", "77"];
    let first = pset(&args);
    let second = pset(&args);
    assert_eq!(exit_code(&first), 0);
    assert_eq!(exit_code(&second), 0);
    assert_eq!(
        first.stdout, second.stdout,
        "same seed must replay the same stream"
    );
}

#[test]
fn sample_csv_has_size_length_attempts_rows() {
    let out = pset(&[
        "sample", "--z", "0.5", "--count", "10", "--seed", "2", "--format", "csv",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    assert_eq!(lines.len(), 12, "comment, header, ten rows");
    assert!(lines[0].starts_with('#'), "first line is a run comment");
    assert_eq!(lines[1], "size,length,attempts");
    for row in &lines[2..] {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 3, "row {row:?}");
        for field in fields {
            field.parse::<u64>().expect("csv fields are integers");
        }
    }
}

#[test]
fn sample_out_flag_writes_the_stream_to_a_file() {
    let path = temp_path("sample-out.jsonl");
    let out = pset(&[
        "sample",
        "--z",
        "0.5",
        "--count",
        "5",
        "--seed",
        "13",
        "--out",
        path.to_str().expect("temp path is utf-8"),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    assert!(
        out.stdout.is_empty(),
        "records must go to the file, not stdout"
    );
    let body = std::fs::read_to_string(&path).expect("output file exists");
    let lines: Vec<String> = body.lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 6, "one header line plus five records");
    parse_records(&lines[1..]);
    std::fs::remove_file(&path).ok();
}

#[test]
fn sample_ranks_stay_below_the_level_count() {
    let out = pset(&[
        "sample",
        "--structure",
        "words:3",
        "--z",
        "0.2",
        "--count",
        "200",
        "--seed",
        "12",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    let records = parse_records(&lines[1..]);
    assert_eq!(records.len(), 200);
    let mut seen_positive_rank = false;
    for record in &records {
        for part in &record.parts {
            seen_positive_rank |= part.rank > 0;
            if let Some(count) = 3u128.checked_pow(u32::try_from(part.level).unwrap()) {
                assert!(
                    part.rank < count,
                    "rank {} at level {}",
                    part.rank,
                    part.level
                );
            }
        }
    }
    assert!(seen_positive_rank, "words must use more than rank zero");
}

#[test]
fn approx_mode_keeps_sizes_in_the_window() {
    let out = pset(&[
        "sample",
        "--mode",
        "approx",
        "--n",
        "100",
        "--epsilon",
        "0.1",
        "--count",
        "20",
        "--seed",
        "8",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    let records = parse_records(&lines[1..]);
    assert_eq!(records.len(), 20);
    for record in &records {
        assert!(
            (90..=110).contains(&record.size),
            "size {} escaped the accepted window",
            record.size
        );
        assert!(record.attempts >= 1);
    }
}

#[test]
fn exact_mode_exhausts_on_an_unreachable_size() {
    let out = pset(&[
        "sample",
        "--structure",
        "squares",
        "--z",
        "0.1",
        "--mode",
        "exact",
        "--n",
        "3",
        "--max-attempts",
        "500",
        "--seed",
        "1",
    ]);
    assert_eq!(exit_code(&out), 3, "stderr: {}", stderr_str(&out));
    assert!(
        stderr_str(&out).contains("budget exhausted"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn sample_requires_a_measure() {
    let out = pset(&["sample"]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_str(&out).contains("supply --z"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn sample_rejects_conflicting_measure_flags() {
    let out = pset(&["sample", "--z", "0.5", "--target-size", "10"]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_str(&out).contains("cannot be used with"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn divergent_weight_is_a_usage_error() {
    let out = pset(&["sample", "--structure", "words:2", "--z", "0.6"]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_str(&out).contains("diverges"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn calibrate_matches_the_closed_form_weight() {
    let out = pset(&["calibrate", "--target-size", "1e3"]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let report: Value = serde_json::from_str(&stdout_str(&out)).expect("report parses");

    // exp(-1 / sqrt(c * 1000)) with c = 12 / pi^2.
    let closed_form = 0.971_728_644_281_284;
    let z = report["params"]["z"].as_f64().expect("z is a number");
    assert!(
        (z - closed_form).abs() < 1e-3,
        "numeric weight {z} strays from the closed form {closed_form}"
    );

    let expected = report["expected_size"]
        .as_f64()
        .expect("expected_size is a number");
    assert!(
        (expected - 1000.0).abs() / 1000.0 < 2e-3,
        "expected size {expected} misses the target"
    );

    let lambda_bar = report["lambda_bar"]
        .as_f64()
        .expect("lambda_bar is a number");
    assert!(lambda_bar.is_finite() && lambda_bar > 0.0);
}

#[test]
fn verify_passes_on_defaults_scaled_down() {
    let out = pset(&[
        "verify",
        "--count",
        "20000",
        "--oracle-samples",
        "60000",
        "--uniformity-samples",
        "2000",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let report: Value = serde_json::from_str(&stdout_str(&out)).expect("report parses");
    assert_eq!(report["passed"], Value::Bool(true));
}

#[test]
fn verify_flags_biased_acceptance() {
    let out = pset(&[
        "verify",
        "--count",
        "20000",
        "--oracle-samples",
        "60000",
        "--uniformity-samples",
        "2000",
        "--acceptance-bias",
        "0.9",
    ]);
    assert_eq!(exit_code(&out), 1, "stderr: {}", stderr_str(&out));
    let report: Value = serde_json::from_str(&stdout_str(&out)).expect("report parses");
    assert_eq!(report["passed"], Value::Bool(false));
    let suites = report["suites"].as_array().expect("suites is an array");
    let marginals = suites
        .iter()
        .find(|s| s["name"] == "marginals")
        .expect("marginals suite is present");
    assert_eq!(
        marginals["passed"],
        Value::Bool(false),
        "a 10% acceptance bias must not slip past the marginal checks"
    );
}

#[test]
fn verify_rejects_a_zero_count() {
    let out = pset(&["verify", "--count", "0"]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_str(&out).contains("invalid input"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn shape_writes_diagram_and_limit_curves() {
    let base = temp_path("shape-run");
    let out = pset(&[
        "shape",
        "--target-size",
        "1e6",
        "--seed",
        "3",
        "--out",
        base.to_str().expect("temp path is utf-8"),
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));

    let stdout = stdout_str(&out);
    let sup_line = stdout
        .lines()
        .find(|line| line.starts_with("sup distance:"))
        .expect("sup distance line is printed");
    let sup: f64 = sup_line
        .trim_start_matches("sup distance:")
        .trim()
        .parse()
        .expect("sup distance is a number");
    assert!(
        sup < 0.1,
        "rescaled diagram strays from the limit curve: {sup}"
    );

    let diagram_path = base.with_extension("diagram.csv");
    let limit_path = base.with_extension("limit.csv");
    let diagram = std::fs::read_to_string(&diagram_path).expect("diagram csv exists");
    let limit = std::fs::read_to_string(&limit_path).expect("limit csv exists");
    assert!(diagram.starts_with("x,y\n"));
    assert!(limit.starts_with("x,y\n"));

    let first_row = limit.lines().nth(1).expect("limit csv has data rows");
    let fields: Vec<&str> = first_row.split(',').collect();
    let x: f64 = fields[0].parse().expect("x parses");
    let y: f64 = fields[1].parse().expect("y parses");
    assert_eq!(x, 0.0);
    // sqrt(12)/pi * ln(2), the limit curve's value at the origin.
    assert!(
        (y - 0.764_304_138_845_688).abs() < 1e-9,
        "limit curve starts at {y}"
    );

    std::fs::remove_file(&diagram_path).ok();
    std::fs::remove_file(&limit_path).ok();
}

#[test]
fn shape_of_an_empty_sample_is_an_error() {
    let base = temp_path("shape-empty");
    let out = pset(&[
        "shape",
        "--z",
        "0",
        "--out",
        base.to_str().expect("temp path is utf-8"),
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(
        stderr_str(&out).contains("empty diagram"),
        "stderr: {}",
        stderr_str(&out)
    );
}

#[test]
fn bench_emits_a_parseable_table() {
    let out = pset(&[
        "bench",
        "--mode",
        "exact",
        "--targets",
        "1e2",
        "--reps",
        "20",
        "--seed",
        "4",
    ]);
    assert_eq!(exit_code(&out), 0, "stderr: {}", stderr_str(&out));
    let lines = stdout_lines(&out);
    let mut rows = lines.iter().filter(|line| !line.starts_with('#'));
    let header = rows.next().expect("table has a header");
    assert_eq!(
        header,
        "target,mean_ms,stddev_ms,p10_ms,p90_ms,mean_attempts"
    );
    let data: Vec<&String> = rows.collect();
    assert_eq!(data.len(), 1, "one row per target");
    let fields: Vec<&str> = data[0].split(',').collect();
    assert_eq!(fields.len(), 6);
    assert_eq!(fields[0], "100");
    for field in &fields[1..] {
        let value: f64 = field.parse().expect("numeric field");
        assert!(value.is_finite() && value >= 0.0);
    }
    let mean_attempts: f64 = fields[5].parse().unwrap();
    assert!(
        mean_attempts >= 1.0,
        "exact mode rejects at least once on average"
    );
}
