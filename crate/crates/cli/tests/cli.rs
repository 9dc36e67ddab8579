use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn starq(args: &[&str]) -> (i32, Value, Output) {
    let out = Command::new(env!("CARGO_BIN_EXE_starq")).args(args).output().expect("binary runs");
    let code = out.status.code().expect("exit code");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json, out)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn corrected_coordinates_pass_and_bare_ones_report_the_first_failure() {
    let (code, j, _) = starq(&["check-sdarboux", "--chart", "double-shear", "--order", "5"]);
    assert_eq!(code, 0);
    assert_eq!(j["pass"], true);
    assert_eq!(j["bare_defect_order"], 3);

    let (code, j, _) = starq(&["check-sdarboux", "--chart", "double-shear", "--order", "5", "--bare"]);
    assert_eq!(code, 1);
    assert_eq!(j["first_violation"]["invariant"], "sdarboux_commutator");
    assert_eq!(j["first_violation"]["order"], 3);
    assert_eq!(j["first_violation"]["index"], serde_json::json!([1, 2]));
}

#[test]
fn chart_file_with_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let chart = write(
        dir.path(),
        "shear.json",
        r#"{"M":1,"forward":["x1","p1 + x1^2"],"inverse":["z1","z2 - z1^2"]}"#,
    );
    let (code, j, _) = starq(&["check-sdarboux", "--chart", &chart, "--order", "5"]);
    assert_eq!(code, 0, "{j}");
    let (code, _, _) = starq(&["check-magic", "--chart", &chart]);
    assert_eq!(code, 0);

    let bad = write(dir.path(), "bad.json", r#"{"M":1,"forward":["x1","2*p1"],"inverse":["z1","z2/2"]}"#);
    let (code, j, _) = starq(&["check-chart", "--chart", &bad]);
    assert_eq!(code, 1);
    assert_eq!(j["first_violation"]["invariant"], "darboux_bracket");
    let (code, j, _) = starq(&["build-number", "--chart", &bad]);
    assert_eq!(code, 1);
    assert_eq!(j["first_violation"]["invariant"], "darboux_chart");
}

#[test]
fn ebk_table_for_square_of_action() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("levels.csv");
    let (code, j, _) = starq(&[
        "ebk",
        "--H",
        "((x1^2+p1^2)/2)^2",
        "--hbar",
        "1",
        "--n",
        "0..5",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{j}");
    assert_eq!(j["rule"]["F2"][0], "1/4");
    let e0 = j["rows"][0]["e_ebk"][0].as_f64().unwrap();
    assert!((e0 - 0.5).abs() < 1e-15);
    assert_eq!(j["rows"].as_array().unwrap().len(), 6);
    let text = std::fs::read_to_string(csv).unwrap();
    assert!(text.starts_with("hbar,n,E_ebk,E_oracle,abs_diff"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn oracle_comparison_and_fit() {
    let (code, j, _) = starq(&[
        "oracle-compare", "--H", "I1^3", "--hbars", "0.2,0.1,0.05,0.025", "--D", "64", "--fit", "--min-slope", "3.5",
    ]);
    assert_eq!(code, 0, "{j}");
    assert_eq!(j["roundoff_limited"], true);
    assert!(j["max_abs_diff"].as_f64().unwrap() < 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("m.bin");
    let (code, j, _) = starq(&[
        "oracle-compare",
        "--H",
        "I1^4",
        "--hbars",
        "0.2,0.1,0.05,0.025",
        "--D",
        "64",
        "--fit",
        "--min-slope",
        "3.5",
        "--dump-matrix",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{j}");
    let slope = j["fit"]["slope"].as_f64().unwrap();
    assert!((slope - 4.0).abs() < 0.05, "slope {slope}");
    let m = starq::io::read_matrix_dump(std::fs::File::open(dump).unwrap()).unwrap();
    assert_eq!(m.dim(), 64);

    let (code, j, _) = starq(&["oracle-compare", "--H", "I1^4", "--hbars", "0.2", "--D", "64", "--tol", "1e-12"]);
    assert_eq!(code, 1);
    assert_eq!(j["first_violation"]["invariant"], "oracle_difference");
}

#[test]
fn exact_paths_reject_decimals_and_bad_syntax() {
    let (code, j, out) = starq(&["ebk", "--H", "0.5*x1^2 + p1^2/2"]);
    assert_eq!(code, 2);
    assert!(j["message"].as_str().unwrap().contains("rational"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 0"));

    let (code, j, _) = starq(&["ebk", "--H", "x1^(1/2)"]);
    assert_eq!(code, 2);
    assert!(j["message"].as_str().unwrap().contains("fractional"));

    let (code, _, _) = starq(&["fedosov-check", "--c-R", "0.25"]);
    assert_eq!(code, 2);
    let (code, _, _) = starq(&["check-chart", "--no-such-flag"]);
    assert_eq!(code, 2);
}

#[test]
fn fedosov_curvature_coefficient_discriminates() {
    let dir = tempfile::tempdir().unwrap();
    let conn = write(
        dir.path(),
        "gamma.json",
        r#"{"M":1,"gamma":[{"index":[1,1,1],"poly":"1"},{"index":[2,2,2],"poly":"1"}]}"#,
    );
    let (code, j, _) = starq(&["fedosov-check", "--connection", &conn, "--c-R", "1"]);
    assert_eq!(code, 0, "{j}");
    assert_eq!(j["flat"], false);
    let (code, j, _) = starq(&["fedosov-check", "--connection", &conn, "--c-R", "1/4"]);
    assert_eq!(code, 1);
    assert_eq!(j["first_violation"]["order"], 3);
    let (code, _, _) = starq(&["check-gmagic", "--connection", &conn]);
    assert_eq!(code, 0);
}

#[test]
fn config_file_and_stable_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.json", r#"{"T":5,"chart":"double-shear"}"#);
    let (code, first, a) = starq(&["--config", &cfg, "build-number"]);
    assert_eq!(code, 0, "{first}");
    assert_eq!(first["dirac_defect_order"], 5);
    let (_, _, b) = starq(&["--config", &cfg, "build-number"]);
    assert_eq!(a.stdout, b.stdout);

    let bad = write(dir.path(), "bad.json", r#"{"D":0}"#);
    let (code, _, _) = starq(&["--config", &bad, "check-chart"]);
    assert_eq!(code, 2);
}
