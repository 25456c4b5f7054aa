use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cpvmp::harness::output::{COMPARISON_COLUMNS, FRONT_COLUMNS};
use cpvmp::instance::{load_instance, load_preferences};

fn cpvmp(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpvmp"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, prefs: usize) {
    let prefs = prefs.to_string();
    let out = cpvmp(&["generate", "--vms", "6", "--pms", "4", "--prefs", &prefs, "--seed", "5"], dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn generate_writes_loadable_files() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 3);
    let inst = load_instance(fs::File::open(dir.path().join("instance.json")).unwrap()).unwrap();
    assert_eq!((inst.n_vms(), inst.m_pms()), (6, 4));
    let scp = load_preferences(fs::File::open(dir.path().join("preferences.json")).unwrap(), &inst).unwrap();
    assert_eq!(scp.annotated_vms().collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn run_writes_front_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 2);
    let (inst, prefs) = (path(dir.path(), "instance.json"), path(dir.path(), "preferences.json"));
    let out_dir = dir.path().join("cp");
    let out = cpvmp(
        &["run", "--instance", &inst, "--prefs", &prefs, "--algorithm", "cpnsga", "--generations", "5", "--pop-size", "12"],
        &out_dir,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(out_dir.join("front.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), FRONT_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.split(',').count() == FRONT_COLUMNS.len()));
    // Two annotated VMs give two semicolon-joined ranks.
    assert!(rows.iter().all(|r| r.rsplit(',').next().unwrap().split(';').count() == 2));

    let metrics: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["algorithm"], "cpnsga");
    assert_eq!(metrics["generations"].as_array().unwrap().len(), 5);
    let timings = fs::read_to_string(out_dir.join("timings.csv")).unwrap();
    assert_eq!(timings.lines().count(), 6);
}

#[test]
fn run_json_format() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 1);
    let inst = path(dir.path(), "instance.json");
    let out = cpvmp(
        &["run", "--instance", &inst, "--algorithm", "nsga2", "--generations", "2", "--pop-size", "6", "--format", "json"],
        dir.path(),
    );
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("front.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 6);
}

#[test]
fn empty_preferences() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 0);
    let (inst, prefs) = (path(dir.path(), "instance.json"), path(dir.path(), "preferences.json"));
    assert_eq!(fs::read_to_string(&prefs).unwrap().trim(), "{}");
    let base = ["run", "--instance", &inst, "--prefs", &prefs, "--generations", "2", "--pop-size", "4", "--algorithm"];
    let nsga: Vec<&str> = base.iter().copied().chain(["nsga2"]).collect();
    assert_eq!(cpvmp(&nsga, dir.path()).status.code(), Some(0));
    let cp: Vec<&str> = base.iter().copied().chain(["cpnsga"]).collect();
    assert_eq!(cpvmp(&cp, dir.path()).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cpvmp(&["generate", "--bogus"], dir.path()).status.code(), Some(1));
    let missing = path(dir.path(), "missing.json");
    let out = cpvmp(&["run", "--instance", &missing, "--algorithm", "nsga2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"pms\": [").unwrap();
    let out = cpvmp(&["run", "--instance", bad.to_str().unwrap(), "--algorithm", "nsga2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // Odd population sizes are rejected at run time.
    generate(dir.path(), 0);
    let inst = path(dir.path(), "instance.json");
    assert_eq!(cpvmp(&["run", "--instance", &inst, "--algorithm", "nsga2", "--pop-size", "3"], dir.path()).status.code(), Some(2));
}

#[test]
fn compare_from_files() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 2);
    let (inst, prefs) = (path(dir.path(), "instance.json"), path(dir.path(), "preferences.json"));
    let out = cpvmp(
        &["compare", "--instance", &inst, "--prefs", &prefs, "--generations", "3,4", "--repetitions", "2", "--pop-size", "10", "--name", "mine"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), COMPARISON_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    // 2 settings x 2 seeds x 2 algorithms.
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.starts_with("mine,")));
    // The instance flag needs its preference file.
    assert_eq!(cpvmp(&["compare", "--instance", &inst], dir.path()).status.code(), Some(1));
}

#[test]
fn builtin_scenarios_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpvmp(&["paper-scenarios", "--generations", "2", "--repetitions", "1", "--pop-size", "10"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("scenario"));
    assert!(stdout.contains("PRF1") && stdout.contains("PRF2"));
    let csv = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
}
