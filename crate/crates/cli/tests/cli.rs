use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn kpratio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpratio")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = kpratio(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_rows(args: &[&str]) -> (Vec<String>, Vec<Vec<String>>) {
    let out = kpratio(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|x| x.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| kpratio::ext::parse(&r[i]).unwrap()).collect()
}

fn temp(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("kpratio-cli-{}-{name}", std::process::id()))
}

#[test]
fn analyze_presets() {
    let d = json(&["analyze", "--preset", "diamond"]);
    assert_eq!(d["m"], 1.0);
    assert_eq!(d["left_angular"], true);
    assert_eq!(d["right_angular"], true);

    let s = json(&["analyze", "--preset", "square"]);
    assert_eq!(s["left_angular"], false);
    assert_eq!(s["right_angular"], false);
    assert_eq!(s["m"], "inf");

    let disc = json(&["analyze", "--preset", "disc", "--n", "512"]);
    let cot = 1.0 / (std::f64::consts::PI / 512.0).tan();
    assert!((disc["m"].as_f64().unwrap() - cot).abs() < 1e-9);
}

#[test]
fn domain_files_round_trip() {
    let path = temp("domain.json");
    std::fs::write(&path, r#"{"vertices": [[0, 0], [4, 0], [3, 3]]}"#).unwrap();
    let a = json(&["analyze", "--domain", path.to_str().unwrap()]);
    std::fs::write(&path, "[[0, 0], [4, 0], [3, 3]]").unwrap();
    let b = json(&["analyze", "--domain", path.to_str().unwrap()]);
    assert_eq!(a, b);
    let k = json(&["bounds", "--domain", path.to_str().unwrap(), "--p", "1"]);
    assert_eq!(k["k1_upper"], 1.5);
    std::fs::remove_file(path).ok();
}

#[test]
fn bounds_on_the_diamond() {
    let b = json(&["bounds", "--preset", "diamond", "--p", "2"]);
    let k = b["K_p_upper"].as_f64().unwrap();
    assert!((k - (1.0 + 2.0 / std::f64::consts::PI)).abs() < 2e-3, "{k}");
    let sq = json(&["bounds", "--preset", "square", "--p", "2"]);
    assert_eq!(sq["K_p_upper"], "inf");
}

#[test]
fn estimate_on_the_disc() {
    let e = json(&["estimate", "--preset", "disc", "--n", "512", "--p", "1", "--budget", "200"]);
    assert!(e["best_ratio"].as_f64().unwrap() >= 1.99);
    assert!(e["best_ratio"].as_f64().unwrap() <= e["upper_bound"].as_f64().unwrap() + 1e-9);
    // the witness is a replayable function description
    let w = serde_json::to_string(&e["witness"]).unwrap();
    let spec = kpratio::concave::FunctionSpec::from_json(&w).unwrap();
    assert_eq!(serde_json::to_value(&spec).unwrap(), e["witness"]);
}

#[test]
fn estimate_is_byte_identical_across_runs() {
    let args = ["estimate", "--preset", "triangle", "--p", "2", "--budget", "40", "--seed", "7", "--trace"];
    let a = kpratio(&args);
    let b = kpratio(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn poincare_value() {
    let c = json(&["poincare", "--p", "2"]);
    assert!((c["C_p"].as_f64().unwrap() - 0.10132).abs() < 1e-4);
}

#[test]
fn family_tables() {
    let (h, rows) = csv_rows(&[
        "families",
        "--preset",
        "disc",
        "--n",
        "512",
        "--family",
        "u-phi-eps",
        "--p",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(h, ["parameter", "norm_h1", "norm_h2", "ratio"]);
    let r = column(&h, &rows, "ratio");
    assert!(r.windows(2).all(|w| w[1] > w[0]), "{r:?}");

    let (h, rows) =
        csv_rows(&["families", "--preset", "diamond", "--family", "u-omega", "--p", "inf", "--format", "csv"]);
    let r = column(&h, &rows, "ratio");
    assert!((r.last().unwrap() - 1.0).abs() < 0.05);

    let (h, rows) =
        csv_rows(&["families", "--preset", "square", "--family", "u-omega-vertical", "--p", "inf", "--format", "csv"]);
    let omega = column(&h, &rows, "parameter");
    let ux = column(&h, &rows, "norm_h1");
    let r = column(&h, &rows, "ratio");
    for ((w, a), q) in omega.iter().zip(&ux).zip(&r) {
        assert!((a * w - 1.0).abs() < 1e-9);
        // ‖u_y‖_∞ = 2: the top and bottom facets fall by 1 over half the side
        assert!((q * 2.0 * w - 1.0).abs() < 1e-9);
    }
}

#[test]
fn inapplicable_family_is_an_input_error() {
    let out = kpratio(&["families", "--preset", "diamond", "--family", "u-phi-eps", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "not-applicable");
}

#[test]
fn verify_suites_pass() {
    let r = json(&["verify", "--suite", "theorem1", "--cases", "200", "--seed", "42"]);
    assert_eq!(r["passed"], true);
    let (h, rows) = csv_rows(&["verify", "--suite", "lemma-tan", "--cases", "200", "--format", "csv"]);
    assert_eq!(h, ["suite", "cases", "violations", "passed"]);
    assert_eq!(rows, [["tangent-slope", "200", "0", "true"]]);
    let r = json(&["verify", "--suite", "oracle-l1", "--tol", "1e-3", "--cases", "40"]);
    assert_eq!(r["passed"], true);
}

#[test]
fn failing_case_replays() {
    let path = temp("counterexample.json");
    let p = path.to_str().unwrap();
    let out = kpratio(&["verify", "--suite", "oracle-l1", "--tol=-1", "--cases", "3", "--counterexample", p]);
    assert_eq!(out.status.code(), Some(1));
    let replay = kpratio(&["verify", "--replay", p]);
    assert_eq!(replay.status.code(), Some(1));
    assert_eq!(replay.stdout, kpratio(&["verify", "--replay", p]).stdout);

    // with a sane tolerance the same instance passes
    let mut c: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    c["tol"] = 1e-3.into();
    std::fs::write(&path, c.to_string()).unwrap();
    assert_eq!(kpratio(&["verify", "--replay", p]).status.code(), Some(0));
    std::fs::remove_file(path).ok();
}

#[test]
fn sweep_csv_header() {
    let (h, rows) = csv_rows(&["sweep", "--preset", "square", "--n-angles", "4", "--budget", "16", "--format", "csv"]);
    assert_eq!(h, ["label", "h1_deg", "h2_deg", "best_ratio", "upper_bound", "gap", "evaluations"]);
    assert_eq!(rows.len(), 6);
    for (b, u) in column(&h, &rows, "best_ratio").iter().zip(column(&h, &rows, "upper_bound")) {
        assert!(*b <= u + 1e-9);
    }
}

#[test]
fn input_errors_exit_with_two() {
    let out = kpratio(&["analyze", "--preset", "nonagon"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "invalid-argument");

    let path = temp("bad.json");
    std::fs::write(&path, "{\"vertices\": [[0, 0],\n [1, 0]").unwrap();
    let out = kpratio(&["analyze", "--domain", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    std::fs::remove_file(path).ok();

    assert_eq!(kpratio(&["bounds", "--preset", "square", "--p", "0.5"]).status.code(), Some(2));
    assert_eq!(kpratio(&["analyze"]).status.code(), Some(2));
    assert_eq!(kpratio(&["verify", "--suite", "nonexistent"]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_a_file() {
    let path = temp("out.csv");
    let out = kpratio(&["poincare", "--p", "inf", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = kpratio(&["poincare", "--p", "3", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success() && out.stdout.is_empty());
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("p,cells,C_p\n3,2000,"));
    std::fs::remove_file(path).ok();
}
