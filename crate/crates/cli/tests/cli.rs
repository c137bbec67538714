use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use prandtl_core::profiles::g1_exact;
use prandtl_lab::output::read_csv;
use prandtl_lab::{emit_plot_script, run, PlotKind};

fn lab(args: &[&str]) -> i32 {
    run(std::iter::once("prandtl-lab").chain(args.iter().copied()))
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn out(dir: &TempDir, sub: &str) -> String {
    dir.path().join(sub).display().to_string()
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(lab(&["--help"]), 0);
    assert_eq!(lab(&["profile", "--help"]), 0);
    assert_eq!(lab(&["no-such-command"]), 1);
    assert_eq!(lab(&["profile"]), 1);
    assert_eq!(lab(&["profile", "--out-dir", "x", "--k", "abc"]), 1);
    let dir = TempDir::new().unwrap();
    assert_eq!(lab(&["modulate", "--out-dir", &out(&dir, "m")]), 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_prandtl-lab");
    assert_eq!(Command::new(bin).arg("--version").status().unwrap().code(), Some(0));
    let bad_threads = Command::new(bin)
        .args(["profile", "--out-dir", "unused"])
        .env("PRANDTL_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let invalid = Command::new(bin).args(["profile", "--out-dir", &out(&dir, "p"), "--k", "0"]).status().unwrap();
    assert_eq!(invalid.code(), Some(2));
}

#[test]
fn profile_table_matches_the_closed_form() {
    let dir = TempDir::new().unwrap();
    let p = out(&dir, "p");
    assert_eq!(lab(&["profile", "--out-dir", &p, "--points", "2049"]), 0);
    let (header, rows) = read_csv(&dir.path().join("p/profile.csv")).unwrap();
    assert_eq!(header, ["Z", "G", "dG"]);
    assert_eq!(rows.len(), 2049);
    for r in &rows {
        assert!((r[1] - g1_exact(r[0])).abs() < 1e-8, "Z = {}", r[0]);
    }
    let report = json(&dir.path().join("p/profile.json"));
    assert_eq!(report["command"], "profile");
    assert_eq!(report["passed"], true);
    assert_eq!(report["result"]["k"], 1);
    assert!((report["result"]["a_k"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("lab.cfg");
    fs::write(&cfg, "# profile settings\nk = 2\npoints = 1025\n").unwrap();
    let p = out(&dir, "p");
    assert_eq!(lab(&["--config", cfg.to_str().unwrap(), "profile", "--out-dir", &p, "--points", "4097"]), 0);
    let report = json(&dir.path().join("p/profile.json"));
    assert_eq!(report["result"]["k"], 2);
    assert_eq!(report["config"]["points"], "4097");
    assert_eq!(report["config"]["k"], "2");
    assert_eq!(read_csv(&dir.path().join("p/profile.csv")).unwrap().1.len(), 4097);

    fs::write(&cfg, "k = 2\nspeed = 3\n").unwrap();
    assert_eq!(lab(&["--config", cfg.to_str().unwrap(), "profile", "--out-dir", &p]), 2);
    fs::write(&cfg, "k 2\n").unwrap();
    assert_eq!(lab(&["--config", cfg.to_str().unwrap(), "profile", "--out-dir", &p]), 2);
    assert_eq!(lab(&["--config", &out(&dir, "missing.cfg"), "profile", "--out-dir", &p]), 2);
}

#[test]
fn plot_script_needs_its_csv() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("series.csv");
    assert!(emit_plot_script(&[&csv], PlotKind::Profile, None).is_err());
    fs::write(&csv, "Z,F\n0,1\n").unwrap();
    let script = emit_plot_script(&[&csv], PlotKind::Profile, None).unwrap();
    assert!(fs::read_to_string(script).unwrap().contains("series.csv"));
    assert!(emit_plot_script(&[&csv], PlotKind::Rates, None).is_err());
    assert!(emit_plot_script(&[], PlotKind::Kernel, None).is_err());
}

#[test]
fn reports_are_deterministic_apart_from_runtime() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for (sub, seq) in [("a", false), ("b", true)] {
        let d = out(&dir, sub);
        let mut args = vec!["spectral-check", "--out-dir", &d, "--trials", "20", "--seed", "5", "--max-index", "4"];
        if seq {
            args.insert(0, "--sequential");
        }
        assert_eq!(lab(&args), 0);
        let mut v = json(&dir.path().join(sub).join("spectral.json"));
        assert_eq!(v["seed"], 5);
        v["runtime_seconds"] = Value::Null;
        reports.push(v);
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn nonlocal_check_writes_its_tables() {
    let dir = TempDir::new().unwrap();
    let d = out(&dir, "n");
    assert_eq!(lab(&["nonlocal-check", "--out-dir", &d, "--points", "401", "--x-max", "3", "--datum", "cos"]), 0);
    let (header, rows) = read_csv(&dir.path().join("n/comparison.csv")).unwrap();
    assert_eq!(header, ["x", "green", "direct", "abs_err"]);
    assert_eq!(rows.len(), 401);
    assert!(rows.iter().all(|r| r[3] <= 1e-4 * r[1].abs().max(1.0)));
    let (_, kernel) = read_csv(&dir.path().join("n/kernel.csv")).unwrap();
    assert_eq!(kernel[0][1], 1.0);
    assert!(dir.path().join("n/decay.csv").is_file());
    assert!(dir.path().join("n/plot_kernel.py").is_file());
    assert_eq!(lab(&["nonlocal-check", "--out-dir", &d, "--datum", "sawtooth"]), 2);
}

#[test]
fn simulate_then_modulate() {
    let dir = TempDir::new().unwrap();
    let sim = out(&dir, "sim");
    let code = lab(&["simulate", "--out-dir", &sim, "--threshold", "1e4", "--points", "1201", "--extent", "40"]);
    assert_eq!(code, 0);
    let fit = json(&dir.path().join("sim/fit.json"));
    assert_eq!(fit["result"]["blew_up"], true);
    let amp = fit["result"]["fit"]["amp_exponent"].as_f64().unwrap();
    assert!((amp + 1.0).abs() < 0.05, "{amp}");
    for f in ["series.csv", "rescaled.csv", "plot_rates.py", "plot_profile.py", "snapshots/index.csv"] {
        assert!(dir.path().join("sim").join(f).is_file(), "{f}");
    }

    let m = out(&dir, "mod");
    let snaps = out(&dir, "sim/snapshots");
    assert_eq!(lab(&["modulate", "--out-dir", &m, "--snapshots", &snaps]), 0);
    let report = json(&dir.path().join("mod/modulation.json"));
    assert_eq!(report["passed"], true);
    assert!((report["result"]["mu_final"].as_f64().unwrap() - 1.0).abs() < 1e-2);
    let (header, rows) = read_csv(&dir.path().join("mod/modulation.csv")).unwrap();
    assert_eq!(header.len(), 13);
    assert_eq!(rows.len() as u64, report["result"]["states"].as_u64().unwrap());
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    let trapped = json(&dir.path().join("mod/trapped.json"));
    assert_eq!(trapped["verdict"]["params"]["k"], 100.0);
}
