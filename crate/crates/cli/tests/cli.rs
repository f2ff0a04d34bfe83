use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhframes"))
        .current_dir(dir)
        .env_remove("NH_ENGINE")
        .args(args)
        .output()
        .unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn veselova_default_run_records_small_drifts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nh(tmp.path(), &["simulate", "--system", "veselova", "--out", "run"]);
    assert!(out.status.success());
    let m = manifest(&tmp.path().join("run"));
    assert!(m["drifts"]["G"].as_f64().unwrap() < 1e-8);
    assert!(m["drifts"]["H"].as_f64().unwrap() < 1e-8);
    assert_eq!(m["rows"], 10_001);
    let csv = std::fs::read_to_string(tmp.path().join("run/trajectory.csv")).unwrap();
    let (header, rows) = nhframes::io::parse_csv(&csv).unwrap();
    assert_eq!(header, ["t", "L1", "L2", "L3", "g1", "g2", "g3"]);
    assert_eq!(rows.len(), 10_001);
    // 17 significant digits round-trip exactly
    let l0: Vec<f64> = m["initial"]["l"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(rows[0][1..4], l0[..]);
}

#[test]
fn row_count_is_ceil_of_steps_plus_one() {
    let tmp = tempfile::tempdir().unwrap();
    for (dt, t_end, rows) in [("0.1", "1", 11), ("0.3", "1", 5), ("0.25", "0.5", 3)] {
        let out = nh(tmp.path(), &["simulate", "--system", "marble", "--dt", dt, "--t-end", t_end, "--out", "r"]);
        assert!(out.status.success());
        assert_eq!(manifest(&tmp.path().join("r"))["rows"], rows);
        let csv = std::fs::read_to_string(tmp.path().join("r/trajectory.csv")).unwrap();
        assert_eq!(csv.lines().count(), rows + 1);
    }
}

#[test]
fn penny_without_spin_is_flagged_as_a_line() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(nh(tmp.path(), &["simulate", "--system", "penny", "--B", "0", "--out", "p"]).status.success());
    let m = manifest(&tmp.path().join("p"));
    assert_eq!(m["line_trajectory"], true);
    assert_eq!(m["motion"], "line");
    assert!(nh(tmp.path(), &["simulate", "--system", "penny", "--out", "c"]).status.success());
    assert_eq!(manifest(&tmp.path().join("c"))["line_trajectory"], false);
}

#[test]
fn invalid_system_exits_2_without_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nh(tmp.path(), &["simulate", "--system", "bowling-ball", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
    // the homogeneous ball needs equal inertias
    let out = nh(tmp.path(), &["simulate", "--system", "homogeneous", "--inertia", "1,2,3", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn config_files_reject_unknown_keys_and_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), r#"{"system": "veselova", "colour": "red"}"#).unwrap();
    assert_eq!(nh(tmp.path(), &["simulate", "--config", "bad.json"]).status.code(), Some(2));
    std::fs::write(
        tmp.path().join("ok.json"),
        r#"{"system": "rubber", "integrator": {"dt": 0.01, "t_end": 2.0}, "out_dir": "from-config"}"#,
    )
    .unwrap();
    assert!(nh(tmp.path(), &["simulate", "--config", "ok.json", "--t-end", "1"]).status.success());
    let m = manifest(&tmp.path().join("from-config"));
    assert_eq!(m["system"], "rubber");
    assert_eq!(m["rows"], 101);
    assert_eq!(nh(tmp.path(), &["hamiltonize", "--config", "bad.json"]).status.code(), Some(2));
}

#[test]
fn constraint_violation_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    // L along γ gives (Ω, γ) ≠ 0 for Veselova
    let out = nh(tmp.path(), &["simulate", "--system", "veselova", "--gamma", "0,0,1", "--l", "0,0,1", "--out", "x"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn runs_are_deterministic_given_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("manifest.json")).unwrap();
    for (dir, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let out = nh(tmp.path(), &["simulate", "--system", "marble", "--t-end", "1", "--seed", seed, "--out", dir]);
        assert!(out.status.success());
    }
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let args = ["hamiltonize", "--system", "marble-so3", "--factor", "unit", "--so3-points", "60"];
    let one = nh(tmp.path(), &[&["--jobs", "1"], &args[..]].concat());
    let four = nh(tmp.path(), &[&["--jobs", "4"], &args[..]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn cartan_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let p = json_of(&nh(tmp.path(), &["cartan", "--structure", "penny"]));
    assert_eq!(p["verdict"], "maximal symmetry");
    assert_eq!(p["constancy"]["lie_algebra"]["name"], "se(2) ⊕ so(2)");
    assert!(p["t4_14_relation_residual_max"].as_f64().unwrap() < 1e-6);
    let e = json_of(&nh(tmp.path(), &["cartan", "--structure", "engel-normal-form", "--points", "5"]));
    assert_eq!(e["growth_vector"]["ranks"], serde_json::json!([2, 3, 4]));
    assert_eq!(e["tables"].as_array().unwrap().len(), 5);
    assert_eq!(e["tables"][0]["torsion"].as_object().unwrap().len(), 24);
    let q = json_of(&nh(tmp.path(), &["cartan", "--structure", "perturbed-penny"]));
    assert_eq!(q["verdict"], "not maximal");
    assert_eq!(nh(tmp.path(), &["cartan", "--structure", "integrable"]).status.code(), Some(4));
    assert_eq!(nh(tmp.path(), &["cartan", "--structure", "torus"]).status.code(), Some(2));
}

#[test]
fn hamiltonize_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let v = json_of(&nh(tmp.path(), &["hamiltonize", "--system", "veselova", "--factor", "paper-density"]));
    assert_eq!(v["verdict"], "conformally symplectic");
    assert!(v["max_d_fOmega"].as_f64().unwrap() < 1e-9);
    for key in ["system", "f-id", "grid", "max_d_fOmega", "max_ix_d_fOmega", "noise_floor", "verdict"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let s = json_of(&nh(tmp.path(), &["hamiltonize", "--system", "marble-so3", "--factor", "unit"]));
    assert_eq!(s["verdict"], "obstructed");
    assert_eq!(s["closed_form_check"]["pass"], true);
    // measured: the reduced ball is conformally symplectic with the density factor
    let r = json_of(&nh(tmp.path(), &["hamiltonize", "--system", "marble-reduced", "--l3", "0.5"]));
    assert_eq!(r["verdict"], "conformally symplectic");
    let u = json_of(&nh(tmp.path(), &["hamiltonize", "--system", "rubber", "--factor", "unit", "--grid", "4"]));
    assert_eq!(u["verdict"], "obstructed");
}

#[test]
fn custom_factor_expression_matches_the_density() {
    let tmp = tempfile::tempdir().unwrap();
    let a = json_of(&nh(tmp.path(), &["hamiltonize", "--grid", "5"]));
    let b = json_of(&nh(tmp.path(), &["hamiltonize", "--grid", "5", "--factor", "(g1^2 + g2^2/2 + g3^2/3)^(-1/2)"]));
    let (x, y) = (a["max_d_fOmega"].as_f64().unwrap(), b["max_d_fOmega"].as_f64().unwrap());
    assert!(x < 1e-9 && y < 1e-9);
    assert_eq!(b["verdict"], "conformally symplectic");
    let c = json_of(&nh(tmp.path(), &["hamiltonize", "--grid", "5", "--factor", "1 + g3^2"]));
    assert_eq!(c["verdict"], "obstructed");
    assert_eq!(nh(tmp.path(), &["hamiltonize", "--factor", "g4 + 1"]).status.code(), Some(2));
    assert_eq!(nh(tmp.path(), &["hamiltonize", "--factor", "g3 - 2"]).status.code(), Some(2));
}

#[test]
fn engine_selection() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |env: Option<&str>, args: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_nhframes"));
        c.current_dir(tmp.path()).env_remove("NH_ENGINE").args(args);
        if let Some(e) = env {
            c.env("NH_ENGINE", e);
        }
        c.output().unwrap()
    };
    let base = ["hamiltonize", "--grid", "3"];
    assert_eq!(json_of(&run(None, &base))["engine"], "ad");
    assert_eq!(json_of(&run(Some("fd"), &base))["engine"], "fd");
    assert_eq!(json_of(&run(None, &[&["--engine", "fd"], &base[..]].concat()))["engine"], "fd");
    // the environment wins over the flag
    assert_eq!(json_of(&run(Some("ad"), &[&["--engine", "fd"], &base[..]].concat()))["engine"], "ad");
    assert_eq!(run(Some("symbolic"), &base).status.code(), Some(2));
    assert_eq!(run(None, &["--engine", "exact", "hamiltonize"]).status.code(), Some(2));
}

#[test]
fn check_runs_selected_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nh(tmp.path(), &["check", "--criteria", "4,8", "--out", "check.json"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    let j: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("check.json")).unwrap()).unwrap();
    assert_eq!(j["results"].as_array().unwrap().len(), 2);
    assert_eq!(nh(tmp.path(), &["check", "--criteria", "11"]).status.code(), Some(2));
    assert_eq!(nh(tmp.path(), &["frobnicate"]).status.code(), Some(2));
}
