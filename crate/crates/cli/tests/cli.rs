use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("out-{cmd}-{}", extra.join("-")));
    let output = Command::new(env!("CARGO_BIN_EXE_pnstokes"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .output()
        .unwrap();
    (output, out)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_data_stays_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 1, "grid": {"d": 2, "n": 16}, "time": {"t_end": 0.05}, "budget": {"c_s": 0.5}}"#;
    let (o, out) = run("simulate", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "v_l2").unwrap();
    let mut rows = 0;
    for line in lines {
        let v: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
        rows += 1;
    }
    assert!(rows > 1);
}

#[test]
fn unforced_orbit_is_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{
        "seed": 2, "grid": {"d": 2, "n": 16},
        "time": {"max_dt": 2e-3, "dt_init": 2e-3},
        "initial": {"kind": "random", "grad_sq": 0.01},
        "forcing": {"modulation": {"kind": "periodic", "period": 0.5, "mean": 1.0, "swing": 0.5}},
        "budget": {"c_s": 0.5}
    }"#;
    let (o, out) = run("periodic", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, v) = pnstokes::spectral::read_snapshot(&out.join("fixed_point.pnss")).unwrap();
    assert!(v.l2_norm() < 1e-9, "fixed point norm {}", v.l2_norm());
    assert_eq!(json(&out.join("orbit.json"))["orbit"]["converged"], Value::Bool(true));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 1, "grid": {"n": 16, "bogus": 1}, "extra_top": true}"#;
    let (o, out) = run("simulate", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("grid.bogus") && err.contains("extra_top"), "{err}");
    assert!(!out.exists());
}

#[test]
fn constants_reject_thickening_exponent() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 1, "grid": {"n": 16}, "rheology": {"p": 2.5}}"#;
    let (o, _) = run("constants", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_seed_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run("constants", r#"{"grid": {"n": 16}}"#, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn budget_is_reproducible_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"grid": {"d": 2, "n": 16}, "budget": {"samples": 12, "ascent_iters": 3, "refine_from": 2}}"#;
    let (a, out_a) = run("constants", cfg, dir.path(), &["--seed", "7"]);
    let (b, out_b) = run("constants", cfg, dir.path(), &["--seed=7"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    let ja = std::fs::read(out_a.join("budget.json")).unwrap();
    let jb = std::fs::read(out_b.join("budget.json")).unwrap();
    assert_eq!(ja, jb);
    let budget = json(&out_a.join("budget.json"));
    assert!(budget["Lambda"].as_f64().unwrap() > 0.0);
    assert!(budget["K"].as_f64().unwrap() > 0.0);
}

#[test]
fn extinction_beats_the_bound() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{
        "seed": 3, "grid": {"d": 2, "n": 16}, "rheology": {"mu": 1e-6},
        "time": {"t_end": 1.5, "max_dt": 1e-3},
        "initial": {"kind": "random", "fraction_of_lambda": 0.5},
        "forcing": {"modulation": {"kind": "extinction", "period": 2.0, "t_f": 0.5, "shape": "flat"}, "fraction_of_k": 0.9},
        "budget": {"c_s": 0.5}
    }"#;
    let (o, out) = run("extinction", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out.join("extinction.json"));
    let t = r["extinction_time"].as_f64().expect("extinct before t_end");
    assert!(t <= r["bounds"]["proof_bound"].as_f64().unwrap());
    assert!(t > 0.5);
}

#[test]
fn extinction_needs_a_window() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"seed": 1, "grid": {"n": 16}, "budget": {"c_s": 0.5}}"#;
    let (o, _) = run("extinction", cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}
