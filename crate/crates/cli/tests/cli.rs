//! End-to-end tests driving the compiled binary.

use std::path::Path;
use std::process::{Command, Output};

use serde::Deserialize;
use serde_json::Value;

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varimax"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("running the varimax binary")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    let body = std::fs::read_to_string(path).expect("reading JSON output");
    serde_json::from_str(&body).expect("parsing JSON output")
}

/// Mirror of the solve record schema; deserializing into it pins the field
/// names and types the binary promises.
#[derive(Deserialize)]
struct RecordMirror {
    problem: String,
    solver: String,
    converged: bool,
    a_star: Vec<f64>,
    tf: f64,
    cost: f64,
    residual_norm: f64,
    iterations: u64,
    classification: String,
    conditions: Vec<ConditionMirror>,
    trajectory: TableMirror,
    tool_version: String,
    config: ConfigMirror,
    timestamp: String,
}

#[derive(Deserialize)]
struct ConditionMirror {
    name: String,
    value: f64,
    threshold: f64,
    passed: bool,
}

#[derive(Deserialize)]
struct TableMirror {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct ConfigMirror {
    n_nodes: usize,
    newton_tol: f64,
    newton_max_iter: usize,
    guess_a: Vec<f64>,
}

#[test]
fn solve_writes_a_faithful_record() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["solve", "--problem", "ex1"]);
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let text = stdout_of(&output);
    assert!(text.contains("converged"), "summary line missing: {text}");
    assert!(text.contains("min-max"), "classification missing: {text}");

    let body = std::fs::read_to_string(dir.path().join("ex1.json")).unwrap();
    let record: RecordMirror = serde_json::from_str(&body).expect("record schema");
    assert_eq!(record.problem, "ex1");
    assert_eq!(record.solver, "el");
    assert!(record.converged);
    assert_eq!(record.a_star.len(), 1);
    assert!((record.a_star[0] - (1.0 - std::f64::consts::E) / 2.0).abs() < 1e-9);
    assert!((record.cost - (std::f64::consts::E - 1.0)).abs() < 1e-8);
    assert!((record.tf - 1.0).abs() < 1e-14);
    assert_eq!(record.classification, "min-max");
    assert!(record.residual_norm < 1e-10);
    assert!(record.iterations >= 1);
    assert!(!record.tool_version.is_empty());
    assert!(
        record.timestamp.contains('T'),
        "RFC 3339 timestamp expected"
    );
    assert_eq!(record.config.n_nodes, 1001);
    assert!(record.config.newton_tol > 0.0);
    assert!(record.config.newton_max_iter > 0);
    assert_eq!(record.config.guess_a.len(), 1);

    assert!(
        record.conditions.len() >= 4,
        "expected residual, pointwise, stationarity, and boundary conditions"
    );
    for condition in &record.conditions {
        assert!(
            condition.passed,
            "{} failed: {}",
            condition.name, condition.value
        );
        assert!(condition.threshold > 0.0);
    }

    assert_eq!(record.trajectory.columns, ["t", "x", "xdot"]);
    assert_eq!(record.trajectory.rows.len(), 1001);
    for pair in record.trajectory.rows.windows(2) {
        assert!(
            pair[1][0] > pair[0][0],
            "time column must increase strictly"
        );
    }
    assert_eq!(record.trajectory.rows[0].len(), 3);
}

#[test]
fn guess_overrides_reach_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "solve",
            "--problem",
            "ex3",
            "--guess",
            "a=1.5,tf=0.5,xdot0=-1",
        ],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let record = read_json(&dir.path().join("ex3.json"));
    let tf = record["tf"].as_f64().unwrap();
    let a = record["a_star"][0].as_f64().unwrap();
    let cost = record["cost"].as_f64().unwrap();
    assert!((tf - 1.0 / 3.0).abs() < 1e-6, "tf = {tf}");
    assert!((a - 2.0).abs() < 1e-6, "a = {a}");
    assert!((cost - 4.0 / 3.0).abs() < 1e-5, "cost = {cost}");
    assert_eq!(record["config"]["guess_tf"].as_f64(), Some(0.5));
    assert_eq!(record["config"]["guess_xdot0"][0].as_f64(), Some(-1.0));
}

#[test]
fn unknown_problems_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["solve", "--problem", "no-such"]);
    assert_eq!(output.status.code(), Some(1));
    let text = stderr_of(&output);
    assert!(text.contains("known problems"), "stderr: {text}");
    assert!(
        text.contains("ex5"),
        "stderr should list registry names: {text}"
    );
}

#[test]
fn identical_requests_produce_identical_records() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["one.json", "two.json"] {
        let output = run_in(dir.path(), &["solve", "--problem", "ex1", "--out", name]);
        assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    }
    let strip_timestamp = |path: &Path| -> String {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|line| !line.contains("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let one = strip_timestamp(&dir.path().join("one.json"));
    let two = strip_timestamp(&dir.path().join("two.json"));
    assert_eq!(
        one, two,
        "records must be byte-identical apart from the timestamp"
    );
}

#[test]
fn csv_format_writes_the_trajectory_table() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "solve",
            "--problem",
            "ex2",
            "--format",
            "csv",
            "--n-nodes",
            "101",
        ],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let body = std::fs::read_to_string(dir.path().join("ex2.csv")).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], "t,x,xdot");
    assert_eq!(lines.len(), 102, "header plus one row per node");
    let last: Vec<f64> = lines[101].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[0] - 1.0).abs() < 1e-12, "final time");
}

#[test]
fn node_count_precedence_is_flag_env_default() {
    let dir = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_varimax"))
        .current_dir(dir.path())
        .env("VARIMAX_N_NODES", "501")
        .args(["solve", "--problem", "ex1", "--out", "env.json"])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let record = read_json(&dir.path().join("env.json"));
    assert_eq!(record["config"]["n_nodes"].as_u64(), Some(501));
    assert_eq!(record["trajectory"]["rows"].as_array().unwrap().len(), 501);

    let output = Command::new(env!("CARGO_BIN_EXE_varimax"))
        .current_dir(dir.path())
        .env("VARIMAX_N_NODES", "501")
        .args([
            "solve",
            "--problem",
            "ex1",
            "--n-nodes",
            "301",
            "--out",
            "flag.json",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let record = read_json(&dir.path().join("flag.json"));
    assert_eq!(record["config"]["n_nodes"].as_u64(), Some(301));
}

fn read_scan_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let body = std::fs::read_to_string(path).unwrap();
    let mut lines = body.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|line| line.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn scan_ranks_the_upper_endpoint_control_first() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "scan",
            "--problem",
            "ex5",
            "--a-min",
            "-0.5",
            "--a-max",
            "0.5",
            "--steps",
            "101",
        ],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));

    let (header, rows) = read_scan_csv(&dir.path().join("ex5-scan.csv"));
    assert_eq!(header, ["a", "J_u", "J_u1", "J_u2"]);
    assert_eq!(rows.len(), 101);
    assert!((rows[0][0] + 0.5).abs() < 1e-14);
    assert!((rows[100][0] - 0.5).abs() < 1e-14);

    let column_max = |k: usize| rows.iter().map(|r| r[k]).fold(f64::NEG_INFINITY, f64::max);
    let expected = [
        4.515_564_970_990_201,
        7.582_158_361_584_138,
        4.378_959_032_373_164,
    ];
    for (k, want) in expected.iter().enumerate() {
        let got = column_max(k + 1);
        assert!(
            (got - want).abs() < 1e-5,
            "column {k} worst case {got} vs {want}"
        );
    }
    assert!(column_max(3) < column_max(1) && column_max(3) < column_max(2));

    let summary = read_json(&dir.path().join("ex5-scan.summary.json"));
    assert_eq!(summary["winner_label"].as_str(), Some("u2"));
    assert_eq!(summary["winner"].as_u64(), Some(2));
    assert_eq!(summary["labels"].as_array().unwrap().len(), 3);
    assert_eq!(summary["interior_in_box"].as_bool(), Some(false));
    let worst: Vec<f64> = summary["worst_case"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (got, want) in worst.iter().zip(&expected) {
        assert!((got - want).abs() < 1e-5);
    }
}

#[test]
fn scan_honors_step_count_and_degenerate_ranges() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "scan",
            "--problem",
            "ex5",
            "--a-min",
            "-0.5",
            "--a-max",
            "0.5",
            "--steps",
            "2",
            "--out",
            "two.csv",
        ],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let (_, rows) = read_scan_csv(&dir.path().join("two.csv"));
    assert_eq!(rows.len(), 2);
    assert!((rows[0][0] + 0.5).abs() < 1e-14 && (rows[1][0] - 0.5).abs() < 1e-14);

    let output = run_in(
        dir.path(),
        &[
            "scan",
            "--problem",
            "ex5",
            "--a-min",
            "0.5",
            "--a-max",
            "0.5",
            "--out",
            "point.csv",
        ],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let (header, rows) = read_scan_csv(&dir.path().join("point.csv"));
    assert_eq!(
        header,
        ["a", "J_u"],
        "unbounded problem has no vertex candidates"
    );
    assert_eq!(rows.len(), 1);
    assert!((rows[0][0] - 0.5).abs() < 1e-14);
    assert!((rows[0][1] - 4.515_564_970_990_2).abs() < 1e-6);
}

#[test]
fn scan_argument_validation() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["scan", "--problem", "ex5", "--a-min", "-0.5"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("--a-max"));

    let output = run_in(dir.path(), &["scan", "--problem", "ex1"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_of(&output).contains("variational"));

    // No range and no bounds on the problem itself: nothing to sweep.
    let output = run_in(dir.path(), &["scan", "--problem", "ex5"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn scan_defaults_to_the_problems_own_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "scan",
            "--problem",
            "ex5-bounded",
            "--steps",
            "3",
            "--out",
            "b.csv",
        ],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let (header, rows) = read_scan_csv(&dir.path().join("b.csv"));
    assert_eq!(header.len(), 4, "interior plus two vertex candidates");
    assert_eq!(rows.len(), 3);
    assert!((rows[0][0] + 0.5).abs() < 1e-14 && (rows[2][0] - 0.5).abs() < 1e-14);
}

#[test]
fn verify_passes_a_certified_saddle_and_fails_a_flipped_one() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["verify", "--problem", "ex1"]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        stderr_of(&output)
    );
    let text = stdout_of(&output);
    assert!(text.contains("verification: PASS"), "stdout: {text}");
    assert!(text.contains("saddle probe"), "stdout: {text}");

    let output = run_in(dir.path(), &["verify", "--problem", "ex1-neg"]);
    assert_eq!(output.status.code(), Some(3));
    let text = stdout_of(&output);
    assert!(text.contains("verification: FAIL"), "stdout: {text}");
    assert!(text.contains("FAIL"), "stdout: {text}");
}

#[test]
fn verify_covers_optimal_control_problems() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &["verify", "--problem", "lq2", "--n-nodes", "501"],
    );
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        stderr_of(&output)
    );
    let text = stdout_of(&output);
    assert!(text.contains("verification: PASS"), "stdout: {text}");
    assert!(text.contains("H_u"), "stdout: {text}");
}

#[test]
fn list_names_every_registry_entry() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["list"]);
    assert!(output.status.success());
    let text = stdout_of(&output);
    for name in [
        "ex1",
        "ex1-neg",
        "ex2",
        "ex3",
        "ex4",
        "ex5",
        "ex5-bounded",
        "lq1",
        "lq2",
    ] {
        assert!(text.contains(name), "missing {name} in: {text}");
    }
}

#[test]
fn shifted_solver_route_can_be_forced() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(
        dir.path(),
        &[
            "solve",
            "--problem",
            "lq2",
            "--solver",
            "oc-initial-uncertainty",
            "--n-nodes",
            "501",
        ],
    );
    assert!(output.status.success(), "stderr: {}", stderr_of(&output));
    let record = read_json(&dir.path().join("lq2.json"));
    assert_eq!(record["solver"].as_str(), Some("oc-initial-uncertainty"));
    assert_eq!(record["classification"].as_str(), Some("min-max"));

    // Forcing the shifted route on a dynamics-channel problem is an error.
    let output = run_in(
        dir.path(),
        &[
            "solve",
            "--problem",
            "ex5",
            "--solver",
            "oc-initial-uncertainty",
        ],
    );
    assert_eq!(output.status.code(), Some(1));
}
