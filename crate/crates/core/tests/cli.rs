use std::path::Path;
use std::process::{Command, Output};

use vortex_spectra::cli::{RunConfig, GridSpec, CONFIG_ENV};
use vortex_spectra::presets::Example;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vortex-spectra"));
    c.env_remove(CONFIG_ENV);
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn spectrum_example1_passes_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["spectrum", "--example", "example1", "--alpha", "0.7", "--nu", "0.05", "--out", out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("nu,khat1,khat2,kind,lambda_re"));
    assert_eq!(lines.len(), 2);
    assert!(lines[1].contains(",real,") && lines[1].contains(",true,"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["fibers"][0]["class"]["tag"], "ReducedSymmetric");
}

#[test]
fn spectrum_reports_the_decoupled_eigenvalue() {
    let o = run(&["spectrum", "--example", "example2", "--khat", "-1,1", "--nu", "0.1", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["fibers"][0]["rows"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["kind"] == "decoupled" && r["lambda"][0] == -0.2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["spectrum", "--example", "example1", "--nu-grid", "0.01:0.1:0.5"])), 2);
    assert_eq!(code(&run(&["nu-star", "--example", "example2"])), 2);
    assert_eq!(code(&run(&["nu-star", "--example", "example1", "--alpha", "0.3"])), 2);
    assert_eq!(code(&run(&["spectrum", "--example", "example4", "--nu", "0.1"])), 2);
    assert_eq!(code(&run(&["spectrum", "--no-such-flag"])), 2);
    assert_eq!(code(&run(&["verify", "--only", "A14"])), 2);
}

#[test]
fn nu_star_example1_passes() {
    let o = run(&["nu-star", "--example", "example1", "--alpha", "0.5", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ns = v["nu_star"].as_f64().unwrap();
    assert!(0.244029 < ns && ns < 0.244949);
}

#[test]
fn verify_only_runs_one_criterion() {
    let o = run(&["verify", "--only", "A2", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcomes"].as_array().unwrap().len(), 1);
    assert_eq!(v["outcomes"][0]["id"], "A2");
}

fn sweep_bytes(dir: &Path) -> (Vec<u8>, Vec<u8>) {
    let o = run(&["sweep", "--example", "example1", "--nu-grid", "1e-1:1e-3:0.1", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    (std::fs::read(dir.join("sweep.csv")).unwrap(), std::fs::read(dir.join("report.json")).unwrap())
}

#[test]
fn sweep_is_deterministic_and_monotone() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (csv1, json1) = sweep_bytes(a.path());
    let (csv2, json2) = sweep_bytes(b.path());
    assert_eq!(csv1, csv2);
    // the echoed config differs only in the output path
    let strip = |j: &[u8]| {
        let mut v: serde_json::Value = serde_json::from_slice(j).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(strip(&json1), strip(&json2));
    let csv = String::from_utf8(csv1).unwrap();
    let nus: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(nus, ["0.1", "0.01", "0.001"]);
    assert_eq!(strip(&json1)["monotone"], true);
}

#[test]
fn single_point_sweep_has_one_row() {
    let o = run(&["sweep", "--example", "example1", "--nu", "0.05", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
}

#[test]
fn config_file_from_environment_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let cfg = RunConfig {
        example: Example::Example1,
        alpha: Some(0.5),
        nu_grid: Some(GridSpec { start: 0.2, stop: 0.2, factor: 0.5 }),
        ..RunConfig::default()
    };
    std::fs::write(&path, cfg.to_json()).unwrap();
    let o = bin().env(CONFIG_ENV, &path).args(["nu-star", "--json"]).output().unwrap();
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["alpha"], 0.5);
    // flags win over the file
    let o = bin().env(CONFIG_ENV, &path).args(["nu-star", "--alpha", "0.95", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["alpha"], 0.95);
    std::fs::write(&path, "{\"alpha\": ").unwrap();
    assert_eq!(code(&bin().env(CONFIG_ENV, &path).args(["nu-star"]).output().unwrap()), 2);
}

#[test]
fn manifold_writes_a_chart() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["manifold", "--nu", "0.05", "--lattice", "4", "--samples", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let chart: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("chart.json")).unwrap()).unwrap();
    assert_eq!(chart["flavor"], "center-stable");
    assert_eq!(chart["samples"].as_array().unwrap().len(), 2);
}
