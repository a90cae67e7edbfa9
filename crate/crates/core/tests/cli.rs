use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn heq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heq"))
        .args(args)
        .env_remove("HEQ_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const HARMONIC_SQUARED: &str = r#"
dimension = 1
theorem = "Thm1"
[set]
kind = "whole_space"
[lower_bifunction]
kind = "zero"
[upper_bifunction]
kind = "operator_vi"
[upper_bifunction.map]
kind = "identity"
[schedules]
r = { kind = "power_law", a = 1.0, p = 2.0 }
lambda = { kind = "constant", value = 1.0 }
gamma = { kind = "constant", value = 0.0 }
alpha = { kind = "constant", value = 0.0 }
beta = { kind = "constant", value = 1.0 }
[solver]
x1 = [1.0]
"#;

// Lower level with no analytic solution set and no hints.
const NO_HINTS: &str = r#"
dimension = 2
[set]
kind = "whole_space"
[lower_bifunction]
kind = "operator_vi"
[lower_bifunction.map]
kind = "linear"
matrix = [[0.0, 1.0], [-1.0, 0.0]]
[upper_bifunction]
kind = "zero"
[schedules]
r = { kind = "constant", value = 1.0 }
lambda = { kind = "constant", value = 1.0 }
gamma = { kind = "constant", value = 0.0 }
alpha = { kind = "constant", value = 0.0 }
beta = { kind = "constant", value = 1.0 }
[solver]
x1 = [1.0, 1.0]
max_iters = 10
"#;

#[test]
fn validate_exit_codes() {
    let o = heq(&["validate", "thm1_weak"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("outcome: pass"));
    for line in out.lines().filter(|l| l.starts_with('[')) {
        assert!(line.starts_with("[Proven]"), "{line}");
    }

    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "h.toml", HARMONIC_SQUARED);
    let o = heq(&["validate", &f]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.contains("\"∑ r_k = ∞\"")).unwrap();
    assert!(line.starts_with("[Fail]"), "{line}");

    let o = heq(&["validate", "thm3_viscosity"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("[Inconsistent] \"lim β_k = 0\""));
    assert!(out.contains("contradicting lim α_k < 1"));
}

#[test]
fn validate_json_is_machine_readable() {
    let o = heq(&["validate", "thm2_strong", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["theorem"], "Thm2");
    assert_eq!(v["outcome"], "pass");
}

#[test]
fn validate_needs_a_theorem() {
    let o = heq(&["validate", "remark3_prox"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stdout(&o).is_empty());
    let o = heq(&["validate", "remark3_prox", "--theorem", "Thm1"]);
    assert_ne!(o.status.code(), Some(64));
}

#[test]
fn run_remark3_reaches_the_origin() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = heq(&["run", "remark3_prox", "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let x: Vec<f64> = serde_json::from_value(v["final_point"].clone()).unwrap();
    assert!(x.iter().map(|c| c * c).sum::<f64>().sqrt() <= 1e-9);

    // Summary numbers are recomputable from the CSV.
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), heq::report::TRAJECTORY_HEADER);
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len() as u64, v["iterations"].as_u64().unwrap());
    let last_dist: f64 = rows.last().unwrap()[4].parse().unwrap();
    assert_eq!(last_dist, v["final_dist_to_solution"].as_f64().unwrap());
}

#[test]
fn usage_errors() {
    assert_eq!(heq(&["run", "thm1_weak", "--max-iters", "0"]).status.code(), Some(64));
    assert_eq!(heq(&["run", "no_such_preset"]).status.code(), Some(64));
    assert_eq!(heq(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(heq(&[]).status.code(), Some(64));
    assert_eq!(heq(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_errors_are_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let bad = NO_HINTS.replace("x1 = [1.0, 1.0]", "x1 = [1.0, 1.0, 3.0]");
    let f = write(dir.path(), "bad.toml", &bad);
    let o = heq(&["run", &f]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stdout(&o).is_empty());
    let line = NO_HINTS.lines().position(|l| l == "[solver]").unwrap() + 1;
    assert!(stderr(&o).contains(&format!("line {line}")), "{}", stderr(&o));

    let f = write(dir.path(), "unknown.toml", &format!("{NO_HINTS}colour = 3\n"));
    let o = heq(&["run", &f]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn certify_needs_hints() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "n.toml", NO_HINTS);
    assert_eq!(heq(&["run", &f]).status.code(), Some(0));
    let o = heq(&["certify", &f]);
    assert_eq!(o.status.code(), Some(65));
    assert!(stdout(&o).is_empty());
    assert_eq!(heq(&["run", "--certify", &f]).status.code(), Some(65));
}

#[test]
fn certify_theorem2_benchmark() {
    let o = heq(&["certify", "thm2_strong"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["certificate_min"].as_f64().unwrap() >= -1e-6);
    assert_eq!(v["certificate_ok"], true);
}

#[test]
fn failed_validation_blocks_run_unless_forced() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "h.toml", &HARMONIC_SQUARED.replace("[solver]\n", "[solver]\nmax_iters = 20\n"));
    let o = heq(&["run", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
    assert_eq!(heq(&["run", &f, "--force"]).status.code(), Some(0));
}

fn compare_columns(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let mut cols = vec![Vec::new(); header.len() - 1];
    for l in lines {
        for (i, c) in l.split(',').skip(1).enumerate() {
            if !c.is_empty() {
                cols[i].push(c.parse().unwrap());
            }
        }
    }
    (header, cols)
}

#[test]
fn compare_proximal_point_with_degenerate_ripsa() {
    let o = heq(&["compare", "remark3_prox", "--variants", "ripsa,proximal_point"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, cols) = compare_columns(&stdout(&o));
    assert_eq!(header, ["k", "ripsa", "proximal_point"]);
    let worst = cols[0].iter().zip(&cols[1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst <= 1e-12);
}

#[test]
fn compare_inertial_and_plain_on_theorem2() {
    let o = heq(&["compare", "thm2_strong", "--variants", "ripsa:gamma=0.2,ripsa:gamma=0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, cols) = compare_columns(&stdout(&o));
    assert_eq!(header[1], "ripsa:gamma=0.2");
    for c in &cols {
        assert_eq!(c.len(), 5000);
        assert!(*c.last().unwrap() < 1e-4);
        let half = c.len() / 2;
        assert!(c[half..].windows(2).all(|w| w[1] <= w[0] + 1e-8));
    }
}

#[test]
fn compare_errors() {
    assert_eq!(heq(&["compare", "thm1_weak", "--variants", ""]).status.code(), Some(64));
    assert_eq!(heq(&["compare", "thm1_weak", "--variants", "mann"]).status.code(), Some(66));
    assert_eq!(heq(&["compare", "thm1_weak", "--variants", "ripsa:gamma=2"]).status.code(), Some(64));
}

#[test]
fn compare_several_problems() {
    let o = heq(&["compare", "remark3_prox", "thm1_weak", "--variants", "ripsa", "--max-iters", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (header, cols) = compare_columns(&stdout(&o));
    assert_eq!(header, ["k", "remark3_prox/ripsa", "thm1_weak/ripsa"]);
    assert!(cols.iter().all(|c| c.len() == 10));
}

#[test]
fn oracle_prints_json() {
    let o = heq(&["oracle", "thm3_viscosity"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["method"], "picard_on_selector");
    let x: Vec<f64> = serde_json::from_value(v["solution"].clone()).unwrap();
    assert!((x[0] - 0.5).abs() < 1e-9 && (x[1] - 0.5).abs() < 1e-9);
}

#[test]
fn seed_override_and_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<String> = (0..3).map(|i| dir.path().join(format!("{i}.csv")).to_str().unwrap().to_string()).collect();
    for p in &paths[..2] {
        assert_eq!(heq(&["run", "fixedpoint_lower", "--out", p]).status.code(), Some(0));
    }
    let o = Command::new(env!("CARGO_BIN_EXE_heq"))
        .args(["run", "fixedpoint_lower", "--out", &paths[2]])
        .env("HEQ_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["seed"], 99);
    let read = |p: &String| std::fs::read(p).unwrap();
    assert_eq!(read(&paths[0]), read(&paths[1]));
}
