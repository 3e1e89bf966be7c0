use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quantchar"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn qerr_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let u = write(dir.path(), "u.json", r#"{"kind":"uniform","params":{"a":0,"b":1}}"#);
    let o = run(&["qerr", "--measure", u.to_str().unwrap(), "--grid", "0.5", "--p", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // sqrt(1/12)
    assert!((v["value"].as_f64().unwrap() - (1.0f64 / 12.0).sqrt()).abs() < 1e-12);
    assert_eq!(v["method"], "analytic");
}

#[test]
fn qerr_accepts_planar_grids() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "m.json", r#"{"kind":"discrete","atoms":[[0,0],[3,4]],"weights":[0.5,0.5]}"#);
    let o = run(&["qerr", "--measure", m.to_str().unwrap(), "--grid", "0,0", "--p", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2.5).abs() < 1e-12);
}

#[test]
fn wasserstein_prints_a_number() {
    let dir = tempfile::tempdir().unwrap();
    let u = write(dir.path(), "u.json", r#"{"kind":"uniform","params":{"a":0,"b":1}}"#);
    let d = write(dir.path(), "d.json", r#"{"kind":"dirac","params":{"c":0.5}}"#);
    let o = run(&["wasserstein", "--mu", u.to_str().unwrap(), "--nu", d.to_str().unwrap(), "--p", "2"]);
    assert!(o.status.success());
    let w: f64 = stdout(&o).trim().parse().unwrap();
    assert!((w - (1.0f64 / 12.0).sqrt()).abs() < 1e-9);
}

#[test]
fn covering_is_certified() {
    let o = run(&["covering", "--dim", "2", "--r", "inf", "--samples", "2000"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], true);
    assert!(v["max_min_distance"].as_f64().unwrap() <= 1.0);
}

#[test]
fn cdf_extract_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let u = write(dir.path(), "u.json", r#"{"kind":"uniform","params":{"a":0,"b":1}}"#);
    let o = run(&["cdf-extract", "--measure", u.to_str().unwrap(), "--xs", "-0.5,0.25,0.75"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,F_estimate"));
    let want = [0.0, 0.25, 0.75];
    for (line, w) in lines.zip(want) {
        let f: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((f - w).abs() < 1e-4, "{line}");
    }
}

#[test]
fn mollify_recovers_the_kernel_peak() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "d.json", r#"{"kind":"dirac","params":{"c":0}}"#);
    let o = run(&["mollify", "--measure", d.to_str().unwrap(), "--eps", "0.1", "--xs", "0", "--p", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let v: f64 = text.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((v - 20.0).abs() < 1e-6, "{text}");
}

#[test]
fn counterexample_writes_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ce.csv");
    let o = run(&["counterexample", "--N", "2", "--n-max", "5", "--pitch", "0.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("n,sup_discrepancy_diag,sup_discrepancy_grid,supK_call,w2_to_limit_sq,q22_lower_to_prev"));
    assert_eq!(csv.lines().count(), 6);
    assert!(dir.path().join("ce.json").exists());
}

#[test]
fn run_reads_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq.csv");
    let config = serde_json::json!({
        "experiment": "equivalence",
        "parameters": {"family": "shrinking-dirac", "ns": [1, 2, 4], "pitch": 0.1},
        "seed": 0,
        "output_path": out,
    });
    let cfg = write(dir.path(), "cfg.json", &config.to_string());
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 4);
}

#[test]
fn errors_exit_with_two() {
    let o = run(&["qerr", "--measure", "/nonexistent/m.json", "--grid", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"kind":"normal","params":{"m":0,"s":-1}}"#);
    let o = run(&["qerr", "--measure", bad.to_str().unwrap(), "--grid", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let u = write(dir.path(), "u.json", r#"{"kind":"uniform","params":{"a":0,"b":1}}"#);
    let o = run(&["qerr", "--measure", u.to_str().unwrap(), "--grid", "0", "--p", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
}
