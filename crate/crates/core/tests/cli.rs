use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glauber-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("glauber-lab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn run(task: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg(task).arg("--config").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn report(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

const HARDCORE_P3: &str = r#"{
  "schema": 1,
  "model": {"model": "hardcore", "params": {"lambda": 1.0}},
  "graph": {"kind": "path", "n": 3},
  "trials": 4,
  "iterations": 100,
  "seed": 11
}"#;

#[test]
fn help_exits_zero() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("verify-all"));
}

#[test]
fn unknown_task_is_a_usage_error() {
    let out = bin().args(["nonsense", "--config", "x.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_graph_file_reports_line() {
    let dir = scratch("malformed");
    fs::write(dir.join("g.txt"), "# triangle\n3 3\n0 1\n1 two\n0 2\n").unwrap();
    let cfg = write_config(
        &dir,
        r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}}, "graph": {"kind": "file", "path": "g.txt"}}"#,
    );
    let out = run("enumerate", &cfg, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = scratch("unknown-field");
    let cfg = write_config(
        &dir,
        r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}}, "graph": {"kind": "path", "n": 3}, "lamda": 2}"#,
    );
    let out = run("enumerate", &cfg, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lamda"));
}

#[test]
fn oversized_instance_names_the_cap() {
    let dir = scratch("too-large");
    let cfg = write_config(
        &dir,
        r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}}, "graph": {"kind": "path", "n": 20}}"#,
    );
    let out = run("enumerate", &cfg, &dir.join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("caps.max_sites"));
}

#[test]
fn verify_all_passes_and_reruns_are_identical() {
    let dir = scratch("verify");
    let cfg = write_config(&dir, HARDCORE_P3);
    let (a, b) = (dir.join("a"), dir.join("b"));
    for out in [&a, &b] {
        let o = run("verify-all", &cfg, out, &[]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    let rep = report(&a);
    assert_eq!(rep["passed"], true);
    assert_eq!(rep["seed"], 11);
    let mut files: Vec<String> =
        fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert!(files.contains(&"report.json".to_string()) && files.contains(&"meta.json".to_string()));
    for f in files.iter().filter(|f| *f != "meta.json") {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs between runs");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = scratch("seed");
    let cfg = write_config(&dir, HARDCORE_P3);
    let out = dir.join("out");
    assert_eq!(run("mixing", &cfg, &out, &["--seed", "5"]).status.code(), Some(0));
    assert_eq!(report(&out)["seed"], 5);
}

#[test]
fn lambda_sweep_on_four_cycle() {
    let dir = scratch("lambda-sweep");
    let cfg = write_config(
        &dir,
        r#"{"schema": 1, "model": {"model": "monomer_dimer", "params": {"lambda": 1.0}},
            "graph": {"kind": "cycle", "n": 4},
            "sweep": {"parameter": "lambda", "start": 0.5, "stop": 4.0, "step": 0.5}}"#,
    );
    let out = dir.join("out");
    let o = run("sweep", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "parameter,measured,certified");
    assert_eq!(lines.len(), 9);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] <= v[2] + 1e-9, "{l}");
    }
}

#[test]
fn max_degree_sweep_matches_thresholds() {
    let dir = scratch("degree-sweep");
    let cfg = write_config(
        &dir,
        r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}},
            "graph": {"kind": "path", "n": 2},
            "sweep": {"parameter": "max_degree", "start": 3, "stop": 6, "step": 1}}"#,
    );
    let out = dir.join("out");
    assert_eq!(run("sweep", &cfg, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let row3: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(row3[0], 3.0);
    assert!((row3[1] - 4.0).abs() < 1e-9 && row3[2] == 4.0);
}

#[test]
fn block_size_sweep_is_monotone() {
    let dir = scratch("ell-sweep");
    let cfg = write_config(
        &dir,
        r#"{"schema": 1, "model": {"model": "hardcore", "params": {"lambda": 1.0}},
            "graph": {"kind": "path", "n": 4},
            "sweep": {"parameter": "ell", "start": 1, "stop": 4, "step": 1}}"#,
    );
    let out = dir.join("out");
    assert_eq!(run("sweep", &cfg, &out, &[]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert!((last[1] - 1.0).abs() < 1e-9, "full-block heat bath regenerates in one step");
}

#[test]
fn matching_bounds_on_triangle() {
    let dir = scratch("matching");
    let cfg = write_config(
        &dir,
        r#"{"schema": 1, "model": {"model": "monomer_dimer", "params": {"lambda": 2.0}}, "graph": {"kind": "complete", "n": 3}}"#,
    );
    let out = dir.join("out");
    let o = run("matching-bounds", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(report(&out)["passed"], true);
}
