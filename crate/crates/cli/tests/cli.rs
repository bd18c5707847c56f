use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn wlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wlab"))
        .args(args)
        .env_remove("WLAB_SEED")
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

/// Value of `column` in the first row.
fn first(doc: &Value, column: &str) -> Value {
    let idx = doc["columns"]
        .as_array()
        .unwrap()
        .iter()
        .position(|c| c == column)
        .unwrap();
    doc["rows"][0][idx].clone()
}

#[test]
fn white_noise_bound_at_d_192_is_one() {
    let doc = json_of(&wlab(&[
        "bounds", "--kernel", "fgn:0.5", "--n", "1", "--d", "192", "--format", "json",
    ]));
    assert_eq!(first(&doc, "bound_cl1").as_f64(), Some(1.0));
}

#[test]
fn regime_example() {
    let doc = json_of(&wlab(&[
        "regime", "--H", "0.7", "--n", "10", "--d", "1e5", "--format", "json",
    ]));
    assert_eq!(first(&doc, "case"), "v");
    let phi = first(&doc, "phi").as_f64().unwrap();
    assert!((phi - 10.0).abs() < 1e-9, "{phi}");
}

#[test]
fn kernel_example() {
    let out = wlab(&["kernel", "--kernel", "fgn:0.75", "--k", "1"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.41421356"));
    let doc = json_of(&wlab(&[
        "kernel", "--kernel", "fgn:0.75", "--k", "1", "--format", "json",
    ]));
    assert!((first(&doc, "value").as_f64().unwrap() - 0.41421356).abs() < 1e-8);
}

#[test]
fn csv_has_header_and_rows() {
    let out = wlab(&[
        "regime",
        "--H",
        "0.3,0.5,0.9",
        "--n",
        "2",
        "--d",
        "2^10",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "H,n,d,case,phi,psi");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("0.5,2,1024,ii,"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(wlab(&["bounds", "--kernel", "fgn:1.5"]).status.code(), Some(2));
    assert_eq!(wlab(&["regime", "--H", "0.7", "--d", "0"]).status.code(), Some(2));
    assert_eq!(wlab(&["rosenblatt", "--H", "0.6"]).status.code(), Some(2));
    assert_eq!(wlab(&["tensor", "--p", "6", "--n", "5"]).status.code(), Some(2));
    assert_eq!(wlab(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn failed_verification_exits_1_with_json_diagnostics() {
    // the empirical W2 estimator cannot resolve decay at this budget, so an
    // impossible slope requirement must fail
    let out = wlab(&[
        "decay",
        "--d",
        "16,32,64,128",
        "--replicates",
        "32",
        "--max-slope",
        "-5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let diag: Value = serde_json::from_slice(&out.stderr).expect("JSON diagnostics on stderr");
    assert_eq!(diag["passed"], false);
    assert!(diag["failed"].as_array().unwrap().iter().any(|c| c["name"] == "slope"));
}

#[test]
fn quick_verification_passes() {
    for cmd in ["verify-covariance", "tensor", "rosenblatt", "contraction"] {
        let out = wlab(&[cmd, "--format", "json"]);
        let doc = json_of(&out);
        assert_eq!(doc["passed"], true, "{cmd}");
    }
}

#[test]
fn decay_reports_distance_columns() {
    let doc = json_of(&wlab(&["decay", "--estimator", "energy", "--format", "json"]));
    let cols: Vec<&str> = doc["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(cols, ["n", "d", "H", "estimator", "m", "value", "stderr", "seed"]);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 4);
    assert!(first(&doc, "stderr").as_f64().unwrap() > 0.0);
}

#[test]
fn replay_is_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let p = path.to_str().unwrap();
    let out = wlab(&[
        "tensor",
        "--d",
        "300",
        "--replicates",
        "400",
        "--seed",
        "11",
        "--format",
        "json",
        "-o",
        p,
    ]);
    assert!(out.status.success());
    let replayed = wlab(&["replay", p]);
    assert!(replayed.status.success());
    assert_eq!(replayed.stdout, fs::read(&path).unwrap());
}

#[test]
fn results_do_not_depend_on_threads() {
    let run = |t: &str| {
        wlab(&[
            "verify-covariance",
            "--n",
            "2",
            "--d",
            "16",
            "--threads",
            t,
            "--format",
            "csv",
        ])
        .stdout
    };
    assert_eq!(run("1"), run("3"));
}

#[test]
fn env_seed_overrides_flag() {
    let run = |env: Option<&str>, seed: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_wlab"));
        c.args(["sample", "--n", "2", "--d", "8", "--seed", seed, "--format", "csv"]);
        match env {
            Some(v) => c.env("WLAB_SEED", v),
            None => c.env_remove("WLAB_SEED"),
        };
        c.output().unwrap().stdout
    };
    assert_eq!(run(Some("5"), "9"), run(None, "5"));
    assert_ne!(run(None, "9"), run(None, "5"));
}

#[test]
fn sample_formats_and_dump() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("x.bin");
    let out = wlab(&[
        "sample",
        "--ensemble",
        "wishart",
        "--kernel",
        "fgn:0.3",
        "--n",
        "3",
        "--d",
        "16",
        "--count",
        "2",
        "--format",
        "csv",
        "--dump",
        dump.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert_eq!(text.lines().next(), Some("3"));
    // two records of a 32-byte header and 3 x 16 doubles
    assert_eq!(fs::metadata(&dump).unwrap().len(), 2 * (32 + 3 * 16 * 8));

    let doc = json_of(&wlab(&[
        "sample",
        "--ensemble",
        "rosenblatt",
        "--H",
        "0.8",
        "--n",
        "2",
        "--d",
        "32",
        "--format",
        "json",
    ]));
    let m = &doc["matrices"][0];
    assert_eq!(m["kind"], "rosenblatt_discrete");
    assert_eq!(m["provenance"]["params"]["H"], 0.8);
    assert_eq!(m["values"][0][1], m["values"][1][0]);
}

#[test]
fn svg_comes_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("plot.svg");
    let out = wlab(&["bounds", "--n", "1,2", "--svg", svg.to_str().unwrap()]);
    assert!(out.status.success());
    let body = fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg") && body.contains("<polyline"));
    let csv = fs::read_to_string(svg.with_extension("csv")).unwrap();
    assert!(csv.starts_with("n,d,"));
}
