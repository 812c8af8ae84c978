use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    root.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qubit-corr")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn check_minimal_protocol() {
    let f = fixture("minimal_protocol.pm.json");
    let pvm = run(&["check", &f, "--mode", "pvm"]);
    assert_eq!(pvm.status.code(), Some(1));
    assert_eq!(json(&pvm)["feasible"], false);
    let povm = run(&["check", &f, "--mode", "povm"]);
    assert_eq!(povm.status.code(), Some(0));
    let w = &json(&povm)["parties"][0]["pairs"][0]["report"]["witness_params"];
    assert_eq!((w["r_i"].as_f64(), w["r_j"].as_f64()), (Some(1.0), Some(0.0)));
}

#[test]
fn check_bell_scenario() {
    let out = run(&["check", &fixture("pi12.bell.json"), "--scenario", "bell", "--mode", "pvm"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["parties"].as_array().unwrap().len(), 2);
}

#[test]
fn input_errors_exit_2() {
    let out = run(&["check", &fixture("malformed.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));
    assert_eq!(run(&["check", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["check", &fixture("pi12.bell.json")]).status.code(), Some(2));
    assert_eq!(run(&["--grid", "3", "check", &fixture("minimal_protocol.pm.json")]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn infer_reports() {
    let out = run(&["infer", &fixture("pi12_conditionals.pm.json")]);
    assert_eq!(out.status.code(), Some(0));
    let pair = &json(&out)[0]["pairs"][0];
    assert_eq!(pair["unique"], true);
    let c = &pair["c"];
    let want = (std::f64::consts::PI / 12.0).cos();
    assert!((c["lo"].as_f64().unwrap() - want).abs() < 1e-6 && (c["hi"].as_f64().unwrap() - want).abs() < 1e-6);

    let out = run(&["infer", &fixture("minimal_protocol.pm.json")]);
    let pair = &json(&out)[0]["pairs"][0];
    assert_eq!(pair["unique"], true);
    assert_eq!(pair["r"], serde_json::json!([1.0, 0.0]));

    let out = run(&["infer", &fixture("zero_records.pm.json"), "--grid", "21", "-v"]);
    let pair = &json(&out)[0]["pairs"][0];
    assert_eq!(pair["unique"], false);
    assert_eq!(pair["cells"].as_array().unwrap().len(), 121);
}

#[test]
fn entangle_verdicts() {
    let out = run(&["entangle", &fixture("pi12.bell.json")]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "entangled");
    let out = run(&["entangle", &fixture("white_noise.bell.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "separable-feasible");
    let out = run(&["entangle", &fixture("signaling.bell.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn witness_command() {
    let out = run(&["witness", &fixture("pi12.bell.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v[0]["witness"], "svw");
    assert_eq!(v[1]["witness"], "npa");
    let out = run(&["witness", &fixture("pi12_conditionals.pm.json"), "--scenario", "pm"]);
    assert_eq!(json(&out)[0]["witness"], "bqb");
}

#[test]
fn boundary_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("curve.csv");
    let status = run(&["boundary", "--family", "qbell", "--mode", "pvm", "--points", "11", "--format", "csv", "--out", out.to_str().unwrap()]);
    assert_eq!(status.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y_star,margin"));
    let row: Vec<f64> = text.lines().find(|l| l.starts_with("0.7,")).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(row[1].abs() < 0.01);
    let sm = std::fs::read_to_string(dir.path().join("curve.sm.csv")).unwrap();
    assert!(sm.starts_with("theta,x,y,r\n"));
    let overlay = std::fs::read_to_string(dir.path().join("curve.overlay.csv")).unwrap();
    for name in ["sm", "svw", "npa", "bqb"] {
        assert!(overlay.lines().any(|l| l.starts_with(&format!("{name},"))), "{name}");
    }
    for l in overlay.lines().filter(|l| l.starts_with("bqb,")) {
        let v: Vec<f64> = l.split(',').skip(1).map(|s| s.parse().unwrap()).collect();
        let (x, y) = (v[0], v[1]);
        assert!(((2.0 * x * y - 2.0 * x * y * y + 2.0 * x * x).abs() - (1.0 - y * y).powi(2)).abs() < 1e-6);
    }
}

#[test]
fn outputs_are_deterministic() {
    let args = ["sample", "--family", "qpm", "--samples", "8", "--seed", "7"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let args = ["entangle", &fixture("pi12.bell.json")];
    let args: Vec<&str> = args.iter().map(|s| s.as_ref()).collect();
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
