use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_rigidity-lab");

fn lab(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("RIGIDITY_LAB_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn error_record(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr holds one JSON record")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL_TRIAL: &str = r#"{
  "experiment": "detector-trial",
  "spec": { "dimension": 1, "norm": { "kind": "l1" }, "alpha": 2.0 },
  "noise": { "kind": "iid", "variance": 0.25 },
  "deletion": { "kind": "random", "count": 1, "max_shell": 10 },
  "window": { "max_shell": 40 },
  "detector": { "k_max": 3, "tau": 0.5, "edge_margin": 2 },
  "trials": 6,
  "seed": 21
}"#;

#[test]
fn shells_prints_the_table() {
    let out = lab(&[
        "shells",
        "--spec",
        r#"{"dimension":1,"norm":{"kind":"l1"},"alpha":2.0}"#,
        "--max-shell",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "side,shell,value,multiplicity,cumulative");
    assert_eq!(
        &lines[1..],
        [
            "positive,0,0,1,1",
            "positive,1,1,2,3",
            "positive,2,4,2,5",
            "positive,3,9,2,7"
        ]
    );
}

#[test]
fn shells_two_sided_reads_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "spec.json",
        r#"{"dimension":1,"norm":{"kind":"l1"},"alpha":1.0,"domain":{"kind":"two_sided","negative_alpha":2.0}}"#,
    );
    let out = lab(&["shells", "--spec", &spec, "--max-shell", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("negative,2,4,1,3"), "{text}");
    assert!(text.contains("positive,2,2,1,3"), "{text}");
}

#[test]
fn run_writes_a_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", SMALL_TRIAL);
    let run = dir.path().join("run");
    let out = lab(&[
        "run",
        "--config",
        &config,
        "--out",
        run.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "config.json",
        "results.csv",
        "profile.json",
        "manifest.json",
    ] {
        assert!(run.join(f).exists(), "{f}");
    }
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["trial_seeds"].as_array().unwrap().len(), 6);
    assert!(manifest["summary"]["exit_fraction"].as_f64().unwrap() >= 0.0);
    let csv = std::fs::read_to_string(run.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("trial,seed,true_count,k_hat,correct,exited,points,d_0,d_1,d_2,d_3\n"));
}

#[test]
fn overrides_and_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", SMALL_TRIAL);
    let out = Command::new(BIN)
        .args([
            "run", "--config", &config, "--seed", "5", "--trials", "3", "--jobs", "1",
        ])
        .env("RIGIDITY_LAB_OUTPUT_ROOT", dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = dir.path().join("detector-trial-5");
    let snapshot: Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("config.json")).unwrap()).unwrap();
    assert_eq!(snapshot["seed"], 5);
    assert_eq!(snapshot["trials"], 3);
}

#[test]
fn rerun_reproduces_and_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", SMALL_TRIAL);
    let run = dir.path().join("run");
    assert!(
        lab(&["run", "--config", &config, "--out", run.to_str().unwrap()])
            .status
            .success()
    );
    let manifest = run.join("manifest.json");
    let again = dir.path().join("again");
    let ok = lab(&[
        "rerun",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(
        ok.status.success(),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    for f in ["config.json", "results.csv", "profile.json"] {
        assert_eq!(
            std::fs::read(run.join(f)).unwrap(),
            std::fs::read(again.join(f)).unwrap(),
            "{f}"
        );
    }

    let text = std::fs::read_to_string(&manifest).unwrap();
    let mut m: Value = serde_json::from_str(&text).unwrap();
    m["digests"]["results.csv"] = Value::String("0".repeat(64));
    std::fs::write(&manifest, serde_json::to_string(&m).unwrap()).unwrap();
    let bad = lab(&[
        "rerun",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        dir.path().join("third").to_str().unwrap(),
    ]);
    assert_eq!(error_record(&bad)["error"], "reproducibility");
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.json", SMALL_TRIAL);
    let out = lab(&["validate", "--config", &good]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "ok");

    let unknown = write(
        dir.path(),
        "unknown.json",
        &SMALL_TRIAL.replace("\"trials\"", "\"trails\""),
    );
    assert_eq!(
        error_record(&lab(&["validate", "--config", &unknown]))["error"],
        "schema_violation"
    );

    let no_seed = write(
        dir.path(),
        "noseed.json",
        &SMALL_TRIAL.replace("\"seed\": 21", "\"trials_again\": 1"),
    );
    assert_eq!(
        error_record(&lab(&["validate", "--config", &no_seed]))["error"],
        "schema_violation"
    );

    let huge = write(
        dir.path(),
        "huge.json",
        &SMALL_TRIAL
            .replace("\"dimension\": 1", "\"dimension\": 3")
            .replace("\"max_shell\": 40", "\"max_shell\": 200"),
    );
    assert_eq!(
        error_record(&lab(&["validate", "--config", &huge]))["error"],
        "resource_cap"
    );
}

#[test]
fn bad_covariance_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_TRIAL
        .replace(
            r#"{ "kind": "iid", "variance": 0.25 }"#,
            r#"{ "kind": "explicit", "matrix": [[1.0, 2.0], [0.0, 1.0]] }"#,
        )
        .replace("\"max_shell\": 40", "\"max_shell\": 3")
        .replace("\"max_shell\": 10", "\"max_shell\": 1");
    let config = write(dir.path(), "c.json", &text);
    let out = lab(&[
        "run",
        "--config",
        &config,
        "--out",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(error_record(&out)["error"], "invalid_covariance");
}

#[test]
fn schema_is_valid_json() {
    let out = lab(&["schema"]);
    assert!(out.status.success());
    let schema: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        schema["properties"]["experiment"]["enum"]
            .as_array()
            .unwrap()
            .len(),
        6
    );
}
