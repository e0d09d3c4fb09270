use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const P4: &str = r#"{
  "x_labels": ["1", "2", "3", "4"],
  "y_labels": ["0", "1"],
  "eta": [[0.25, 0], [0.25, 0], [0.25, 0], [0.25, 0]],
  "loss": [[0, 1], [1, 0]],
  "predictors": [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
}"#;

const POINT: &str = r#"{
  "x_labels": ["*"],
  "y_labels": ["*"],
  "eta": [[1]],
  "loss": [[0]],
  "predictors": [[0]]
}"#;

const BINARY: &str = r#"{
  "x_labels": ["a", "b"],
  "y_labels": ["0", "1"],
  "eta": [[0.4, 0.4], [0.1, 0.1]],
  "loss": [[0, 1], [1, 0]],
  "predictors": [[0, 0], [0, 1], [1, 0]]
}"#;

struct Scratch(TempDir);

impl Scratch {
    fn new() -> Self {
        Scratch(TempDir::new().unwrap())
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let path = self.0.path().join(name);
        std::fs::write(&path, text).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }
}

fn run(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskspace"))
        .args(args.iter().map(|a| a.as_ref()))
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn distance_of_singleton_indicators_to_a_point() {
    let s = Scratch::new();
    let (a, b) = (s.file("a.json", P4), s.file("b.json", POINT));
    let v = stdout_json(&run(&[&"distance", &a, &b]));
    assert!((v["value"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(v["status"], "exact");
    assert_eq!(v["correspondence"].as_array().unwrap().len(), 4);
    assert_eq!(v["coupling"].as_array().unwrap().len(), 4);

    let v = stdout_json(&run(&[&"distance", &a, &a]));
    assert!(v["value"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn corrupt_pipeline_ledger() {
    let s = Scratch::new();
    let p = s.file("p.json", BINARY);
    let pipe = s.file(
        "pipe.json",
        r#"[{"kind": "bias_density", "f": [[1.25, 1.25], [0, 0]]}, {"kind": "label_noise", "epsilon": 0.1}]"#,
    );
    let result = s.path("result.json");
    let v = stdout_json(&run(&[&"corrupt", &p, &pipe, &"--result", &result]));
    let bounds: Vec<f64> = v["stages"].as_array().unwrap().iter().map(|e| e["bound"].as_f64().unwrap()).collect();
    assert!((bounds[0] - 0.2).abs() < 1e-12 && (bounds[1] - 0.05).abs() < 1e-12, "{bounds:?}");
    assert!((v["cumulative"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!(v["endpoint"]["value"].as_f64().unwrap() <= 0.25 + 1e-9);
    // the corrupted problem is itself a valid input
    stdout_json(&run(&[&"distance", &p, &result]));
}

#[test]
fn emitted_problems_round_trip() {
    let s = Scratch::new();
    let p = s.file("p.json", BINARY);
    let first = s.path("first.json");
    let out = run(&[&"sample", &p, &"--n", &"7", &"--seed", &"3", &"--out", &first]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&first).unwrap();
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["meta"]["seed"], 3);
    assert!(v["meta"]["prng"].as_str().unwrap().contains("chacha8"));

    // re-emitting through a no-op coarsening reproduces every real bit-for-bit
    let second = s.path("second.json");
    let out = run(&[&"coarsen", &first, &"--blocks", &"[[0],[1]]", &"--out", &second]);
    assert!(out.status.success());
    let a: Value = serde_json::from_str(&text).unwrap();
    let b: Value = serde_json::from_str(&std::fs::read_to_string(&second).unwrap()).unwrap();
    assert_eq!(a["eta"], b["eta"]);
    assert_eq!(b["meta"]["coarsening_bound"], 0.0);
    let again = s.path("third.json");
    run(&[&"coarsen", &second, &"--blocks", &"[[0],[1]]", &"--out", &again]);
    assert_eq!(
        std::fs::read_to_string(&second).unwrap(),
        std::fs::read_to_string(&again).unwrap()
    );
}

#[test]
fn validation_and_capacity_exit_codes() {
    let s = Scratch::new();
    let bad = s.file("bad.json", &BINARY.replace("0.4, 0.4", "0.4, 0.9"));
    let good = s.file("good.json", BINARY);
    let out = run(&[&"distance", &bad, &good]);
    assert_eq!(out.status.code(), Some(1));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "invalid");
    assert!(e["field"].as_str().unwrap().starts_with("eta"));

    let out = run(&[&"distance", &good, &good, &"--cap-pairs", &"4", &"--no-fallback"]);
    assert_eq!(out.status.code(), Some(2));
    let e = stderr_json(&out);
    assert_eq!(e["error"], "capacity");
    assert_eq!(e["cap"], "cap_pairs");

    let out = run(&[&"distance", &good, &good, &"--cap-pairs", &"4"]);
    assert_eq!(stdout_json(&out)["status"], "upper_bound");

    let out = run(&[&"teleport"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let missing = Path::new("/nonexistent/p.json");
    let out = run(&[&"distance", &missing, &good]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "io");

    let out = run(&[&"distance", &good, &good, &"--p", &"0.5"]);
    assert_eq!(stderr_json(&out)["field"], "p");
    let out = run(&[&"distance", &good, &good, &"--format", &"csv"]);
    assert_eq!(stderr_json(&out)["field"], "format");
}

#[test]
fn randomized_commands_echo_seed() {
    let s = Scratch::new();
    let p = s.file("p.json", BINARY);
    let v = stdout_json(&run(&[&"convergence", &p, &"--ns", &"10,100", &"--trials", &"3", &"--seed", &"9"]));
    assert_eq!(v["seed"], 9);
    assert!(v["prng"].as_str().unwrap().contains("chacha8"));
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    let out = run(&[&"convergence", &p, &"--ns", &"10", &"--trials", &"2", &"--format", &"csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("n,trial,seed,tv_bound,exact_distance,bound_used,prng"));
    assert_eq!(text.lines().count(), 3);

    let a = s.file("a.json", P4);
    let v = stdout_json(&run(&[&"rademacher", &a, &"--m", &"1", &"--samples", &"2000", &"--seed", &"5"]));
    assert_eq!(v["exact"], 0.5);
    assert_eq!(v["seed"], 5);
    let est = v["monte_carlo"]["estimate"].as_f64().unwrap();
    let se = v["monte_carlo"]["standard_error"].as_f64().unwrap();
    assert!((est - 0.5).abs() <= 3.0 * se);

    let b = s.file("b.json", POINT);
    let v = stdout_json(&run(&[&"rademacher", &a, &"--against", &b, &"--samples", &"0"]));
    assert_eq!(v["stability"]["holds"], true);
    assert_eq!(v["stability"]["gap"], 0.5);

    let v = stdout_json(&run(&[&"distance-lp", &a, &b, &"--seed", &"2"]));
    assert_eq!(v["seed"], 2);
    assert!(v["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn landscape_commands() {
    let s = Scratch::new();
    let path = s.file(
        "path.json",
        r#"{
          "x_labels": ["*"], "y_labels": ["0", "1"],
          "eta": [[1, 0]], "loss": [[0, 1], [1, 0]],
          "predictors": [[0], [1], [0]]
        }"#,
    );
    let v = stdout_json(&run(&[&"reeb", &path]));
    assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(v["local_minima"].as_array().unwrap().len(), 2);
    assert_eq!(v["min_height"], 0.0);
    let out = run(&[&"reeb", &path, &"--format", &"csv"]);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("node_id,height,degree\n"));

    let two = s.file(
        "two.json",
        r#"{
          "x_labels": ["*"], "y_labels": ["0", "1"],
          "eta": [[1, 0]], "loss": [[0, 1], [1, 0]],
          "predictors": [[0], [1]]
        }"#,
    );
    let v = stdout_json(&run(&[&"connected-distance", &path, &two]));
    assert!(v["value"].as_f64().unwrap() > 0.01);
    assert_eq!(v["bayes_gap"], 0.0);
    let plain = stdout_json(&run(&[&"distance", &path, &two]));
    assert!(plain["value"].as_f64().unwrap() < 1e-12);
}

#[test]
fn geodesic_profile_bound_verify() {
    let s = Scratch::new();
    let (a, b) = (s.file("a.json", P4), s.file("b.json", POINT));
    let mid = s.path("mid.json");
    let out = run(&[&"geodesic", &a, &b, &"--t", &"0.5", &"--out", &mid]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&run(&[&"distance", &a, &mid]));
    assert!((v["value"].as_f64().unwrap() - 0.125).abs() < 1e-9);

    let v = stdout_json(&run(&[&"profile", &a, &b]));
    assert_eq!(v["profiles"].as_array().unwrap().len(), 4);
    assert!((v["hausdorff_w1"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((v["lower_bound"].as_f64().unwrap() - 0.25).abs() < 1e-12);

    let p = s.file("p.json", BINARY);
    let v = stdout_json(&run(&[&"bound", &p, &"--mode", &"coarsening", &"--blocks", &"[[0,1]]"]));
    assert_eq!(v["mode"], "coarsening");
    assert!(v["bound"].as_f64().unwrap() > 0.0);
    let out = run(&[&"bound", &p, &"--mode", &"tv"]);
    assert_eq!(stderr_json(&out)["field"], "b");
    let v = stdout_json(&run(&[&"bound", &p, &p, &"--mode", &"loss_swap"]));
    assert_eq!(v["mode"], "shared_eta_H");
    assert_eq!(v["bound"], 0.0);

    let maps = s.file("maps.json", r#"{"f1": [0, 1], "f2": [0, 1], "fwd": [0, 1, 2], "bwd": [0, 1, 2]}"#);
    let v = stdout_json(&run(&[&"verify", &p, &p, &maps]));
    assert_eq!(v["holds"], true);
    let swapped = s.file("swapped.json", r#"{"f1": [1, 0], "f2": [0, 1], "fwd": [0, 1, 2], "bwd": [0, 1, 2]}"#);
    let v = stdout_json(&run(&[&"verify", &p, &p, &swapped]));
    assert_eq!(v["holds"], false);
    assert_eq!(v["violation"]["kind"], "pushforward");
}
