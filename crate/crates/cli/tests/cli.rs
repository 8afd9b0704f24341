use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use commute_core::io::{embedding_from_csv, matrix_from_csv};
use serde_json::Value;
use tempfile::TempDir;

const TRIANGLE: &str =
    r#"{"labels": ["x", "y", "z"], "P": [[0, 0.75, 0.25], [0.25, 0, 0.75], [0.75, 0.25, 0]]}"#;
const COUNTEREXAMPLE: &str = r#"{"T": [[0, 7, 7, 7, 13], [7, 0, 12, 12, 7], [7, 12, 0, 12, 7], [7, 12, 12, 0, 7], [13, 7, 7, 7, 0]]}"#;
const GRID: &str = r#"{"P": [[0.5, 0.25, 0.25, 0], [0.25, 0.5, 0, 0.25], [0.25, 0, 0.5, 0.25], [0, 0.25, 0.25, 0.5]]}"#;
const DIRECTED_CYCLE: &str =
    r#"{"P": [[0.5, 0.5, 0, 0], [0, 0.5, 0.5, 0], [0, 0, 0.5, 0.5], [0.5, 0, 0, 0.5]]}"#;

struct Sandbox(TempDir);

impl Sandbox {
    fn new() -> Self {
        Sandbox(tempfile::tempdir().unwrap())
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.0.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }
}

fn run(args: &[&str], input: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_commute-embed"))
        .args(args)
        .arg("--input")
        .arg(input)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap()
}

fn error(out: &Output) -> (i32, Value) {
    let err = String::from_utf8_lossy(&out.stderr);
    let line = err.lines().last().expect("error line on stderr");
    (
        out.status.code().unwrap(),
        serde_json::from_str(line).unwrap(),
    )
}

#[test]
fn commute_table_is_symmetric_with_zero_diagonal() {
    let sb = Sandbox::new();
    let m = matrix_from_csv(&stdout(&run(&["commute"], &sb.file("t.json", TRIANGLE)))).unwrap();
    assert_eq!(m.labels, ["x", "y", "z"]);
    for i in 0..3 {
        assert_eq!(m.rows[i][i], 0.0);
        for j in 0..3 {
            assert_eq!(m.rows[i][j], m.rows[j][i]);
        }
    }
    // Each pair of the rotating triangle commutes in 48/13 steps.
    assert!((m.rows[0][1] - 48.0 / 13.0).abs() < 1e-12);
}

#[test]
fn counterexample_is_not_realizable() {
    let sb = Sandbox::new();
    let report = json(&run(
        &["realizability"],
        &sb.file("cx.json", COUNTEREXAMPLE),
    ));
    assert_eq!(report["realizable"], false);
    let min = report["min_eigenvalue"].as_f64().unwrap();
    assert!((min + 0.434597).abs() < 1e-6);
    assert_eq!(report["gram"][3][3], 13.0);
}

#[test]
fn chains_are_realizable() {
    let sb = Sandbox::new();
    let report = json(&run(
        &["realizability", "--ref", "z"],
        &sb.file("t.json", TRIANGLE),
    ));
    assert_eq!(report["realizable"], true);
    assert_eq!(report["ref_state"], "z");
}

#[test]
fn empty_and_malformed_inputs_are_parse_errors() {
    let sb = Sandbox::new();
    for (name, text) in [
        ("empty.json", ""),
        ("braces.json", "{}"),
        ("bad.json", "{\"P\": [[0.5,\n0.5], [x]]}"),
    ] {
        let (code, err) = error(&run(&["validate"], &sb.file(name, text)));
        assert_eq!(code, 1, "{name}");
        assert_eq!(err["code"], "parse_error", "{name}");
        assert!(err["line"].as_u64().is_some());
    }
}

#[test]
fn validation_errors_exit_1() {
    let sb = Sandbox::new();
    let (code, err) = error(&run(&["validate"], Path::new("/nonexistent/chain.json")));
    assert_eq!((code, err["code"].as_str()), (1, Some("file_not_found")));

    let periodic = sb.file("p.json", r#"{"P": [[0, 1], [1, 0]]}"#);
    let (code, err) = error(&run(&["validate"], &periodic));
    assert_eq!((code, err["code"].as_str()), (1, Some("periodic")));

    let tri = sb.file("t.json", TRIANGLE);
    let (code, err) = error(&run(&["embed", "--ref", "w"], &tri));
    assert_eq!((code, err["code"].as_str()), (1, Some("unknown_state")));

    let (code, err) = error(&run(&["embed", "--tol-psd", "-1"], &tri));
    assert_eq!((code, err["code"].as_str()), (1, Some("invalid_config")));

    let (code, err) = error(&run(
        &["embed", "--tol-psd", "1e-12"],
        &sb.file("cx.json", COUNTEREXAMPLE),
    ));
    assert_eq!((code, err["code"].as_str()), (1, Some("not_realizable")));

    let (code, err) = error(&run(&["embed", "--format", "png"], &tri));
    assert_eq!((code, err["code"].as_str()), (1, Some("usage_error")));

    let (code, err) = error(&run(&["hitting", "--format", "svg"], &tri));
    assert_eq!((code, err["code"].as_str()), (1, Some("invalid_config")));
}

#[test]
fn ill_conditioned_chain_is_a_numerical_failure() {
    let sb = Sandbox::new();
    let input = sb.file(
        "stiff.json",
        r#"{"P": [[0.999999999999999, 1e-15], [1e-15, 0.999999999999999]]}"#,
    );
    let (code, err) = error(&run(&["commute"], &input));
    assert_eq!(code, 2, "{err}");
    assert_eq!(err["code"], "solver_failure");
}

#[test]
fn embedding_round_trip_reproduces_commute_times() {
    let sb = Sandbox::new();
    let input = sb.file("grid.json", GRID);
    let t = matrix_from_csv(&stdout(&run(&["commute"], &input))).unwrap();
    let coords_path = sb.0.path().join("coords.csv");
    let out = run(
        &[
            "embed",
            "--ref",
            "2",
            "--output",
            coords_path.to_str().unwrap(),
        ],
        &input,
    );
    assert!(stdout(&out).is_empty());
    let (labels, coords) =
        embedding_from_csv(&std::fs::read_to_string(&coords_path).unwrap()).unwrap();
    assert_eq!(labels, t.labels);
    let max_t = t.rows.iter().flatten().fold(0.0f64, |m, &x| m.max(x));
    for a in 0..4 {
        for b in 0..4 {
            let d2 = (coords.row(a) - coords.row(b)).norm_squared();
            assert!((d2 - t.rows[a][b]).abs() <= 1e-8 * max_t);
        }
    }
    let svg = stdout(&run(&["embed", "--format", "svg"], &input));
    assert!(svg.starts_with("<svg") && svg.contains("eigenvalue"));
}

#[test]
fn bare_csv_input() {
    let sb = Sandbox::new();
    let input = sb.file("two.csv", "0.5,0.5\n0.5,0.5\n");
    let m = matrix_from_csv(&stdout(&run(&["commute"], &input))).unwrap();
    assert_eq!(m.labels, ["s0", "s1"]);
    assert!((m.rows[0][1] - 4.0).abs() < 1e-12);
    let w = json(&run(&["stationary"], &input));
    assert_eq!(w["w"][0], 0.5);
}

#[test]
fn cross_potential_diagonal_is_commute_time() {
    let sb = Sandbox::new();
    let report = json(&run(
        &["cross-potential", "--pairs", "x,y;y,z"],
        &sb.file("t.json", TRIANGLE),
    ));
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    assert!((entries[0]["N"].as_f64().unwrap() - 48.0 / 13.0).abs() < 1e-12);
}

#[test]
fn reversibility_report() {
    let sb = Sandbox::new();
    let tri = json(&run(&["reversibility"], &sb.file("t.json", TRIANGLE)));
    assert_eq!(tri["reversible"], false);
    assert_eq!(tri["criteria_agree"], true);
    let grid = json(&run(
        &["reversibility", "--ref", "0"],
        &sb.file("g.json", GRID),
    ));
    assert_eq!(grid["reversible"], true);
    assert_eq!(grid["obstruction_vanishes"], true);
}

#[test]
fn minimax_check_passes() {
    let sb = Sandbox::new();
    let report = json(&run(
        &["minimax-check", "--trials", "20"],
        &sb.file("t.json", TRIANGLE),
    ));
    let pairs = report["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), 3);
    assert!(pairs.iter().all(|p| p["passed"] == true));
    let grid = json(&run(
        &["minimax-check", "--pairs", "0,3"],
        &sb.file("g.json", GRID),
    ));
    assert!(grid["pairs"][0]["dirichlet"].is_object());
}

#[test]
fn monotonicity_check_exit_status() {
    let sb = Sandbox::new();
    let report = json(&run(
        &["monotonicity-check", "--trials", "50"],
        &sb.file("g.json", GRID),
    ));
    assert_eq!(report["violations"], 0);

    // Counterexamples are loud: the report still goes to stdout.
    let out = run(
        &["monotonicity-check", "--trials", "50"],
        &sb.file("c.json", DIRECTED_CYCLE),
    );
    let (code, err) = error(&out);
    assert_eq!(
        (code, err["code"].as_str()),
        (3, Some("property_violation"))
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["violations"].as_u64().unwrap() > 0);
}

#[test]
fn simulate_is_deterministic() {
    let sb = Sandbox::new();
    let input = sb.file("t.json", TRIANGLE);
    let args = [
        "simulate",
        "--steps",
        "20000",
        "--episodes",
        "500",
        "--seed",
        "7",
        "--pairs",
        "x,y",
    ];
    let first = stdout(&run(&args, &input));
    assert_eq!(first, stdout(&run(&args, &input)));
    let report: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(report["trajectory"]["rng_algorithm"], "chacha8");
    assert_eq!(report["trajectory"]["rng_seed"], 7);
    let paint = &report["estimates"][0]["commute"]["paint"];
    assert!(paint["renewals"].as_u64().unwrap() > 1000);
}

#[test]
fn matrix_outputs_in_json() {
    let sb = Sandbox::new();
    let input = sb.file("t.json", TRIANGLE);
    let m = json(&run(&["hitting", "--format", "json"], &input));
    assert_eq!(m["M"][0][0], 0.0);
    let z = json(&run(&["fundamental", "--format", "json"], &input));
    assert!(z["condition"].as_f64().unwrap() >= 1.0);
}
