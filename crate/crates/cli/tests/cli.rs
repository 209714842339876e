use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn roughinc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughinc")).args(args).output().expect("binary runs")
}

fn run_config(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    roughinc(&args)
}

fn json(file: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(file).unwrap()).unwrap()
}

/// The error object is the last stderr line; log lines may precede it.
fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let last = text.lines().last().unwrap_or_default();
    serde_json::from_str(last).unwrap_or_else(|_| panic!("stderr: {text}"))
}

#[test]
fn norms_of_a_tent() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tent.csv");
    fs::write(&input, "t,x1\n0,0\n1,1\n2,0\n").unwrap();
    let cfg = dir.path().join("norms.json");
    fs::write(&cfg, format!(r#"{{"input": {:?}, "p": 1.0}}"#, input.to_str().unwrap())).unwrap();
    let o = run_config("norms", &cfg, dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("norms.json"));
    assert_eq!(r["p_variation"].as_f64().unwrap(), 2.0);
}

#[test]
fn config_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"driver": {"kind": "fbm", "hurst": 0.5, "level": 3}, "colour": "red"}"#).unwrap();
    let o = run_config("driver", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "config");

    fs::write(&cfg, r#"{"driver": {"kind": "fbm", "hurst": 1.5, "level": 3}}"#).unwrap();
    assert_eq!(run_config("driver", &cfg, dir.path(), &[]).status.code(), Some(2));

    let o = run_config("driver", &dir.path().join("missing.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"], "io");
}

#[test]
fn driver_is_reproducible_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("driver.json");
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for out in [&a, &b] {
        assert!(run_config("driver", &cfg, out, &[]).status.success());
    }
    assert!(run_config("driver", &cfg, &c, &["--seed", "8", "--level", "6"]).status.success());
    for f in ["path.csv", "rough.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let header = fs::read_to_string(a.join("rough.csv")).unwrap();
    assert!(header.starts_with("t,x1,x2,xx1_1,xx1_2,xx2_1,xx2_2\n"), "{}", &header[..60]);
    assert_eq!(fs::read_to_string(c.join("path.csv")).unwrap().lines().count(), 1 + 65);
}

#[test]
fn integrals() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["integrate_young", "integrate_rough"] {
        let out = dir.path().join(name);
        let o = run_config("integrate", &configs().join(format!("{name}.json")), &out, &[]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(json(&out.join("summary.json"))["final"].as_array().unwrap().iter().all(|v| v.is_f64()));
    }
}

#[test]
fn ydi_singleton_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("ydi", &configs().join("ydi_singleton.json"), dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&dir.path().join("diagnostics.json"));
    assert_eq!(d["inclusion_residual"].as_f64().unwrap(), 0.0);
    assert!(d["cauchy_certificate"].as_f64().unwrap() < 5e-2);
    assert_eq!(d["certified"], true);
    let header = fs::read_to_string(dir.path().join("z.csv")).unwrap();
    assert!(header.starts_with("t,z1\n"));
}

#[test]
fn ydi_bound_report_on_scaled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("ydi", &configs().join("ydi.json"), dir.path(), &["--level", "10"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&dir.path().join("diagnostics.json"));
    let b = &d["bound_report"];
    assert_eq!(b["pass"], true, "{b}");
    for key in ["uniform_z", "oscillation", "pvar_bound"] {
        assert_eq!(b[key]["pass"], true);
        assert!(b[key]["worst_margin"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn selection_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("selection", &configs().join("selection.json"), dir.path(), &["--level", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c = json(&dir.path().join("certificate.json"));
    assert_eq!(c["pass"], true);
    assert_eq!(c["level"], 9);
    assert!(c["q_variation"].as_f64().unwrap() <= c["bound_rhs"].as_f64().unwrap());
    assert_eq!(c["oscillation_checks"].as_array().unwrap().len(), 10);
}

#[test]
fn rdi_runs_certified() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["rdi_lsc", "rdi_usc"] {
        let out = dir.path().join(name);
        let o = run_config("rdi", &configs().join(format!("{name}.json")), &out, &["--level", "8"]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let d = json(&out.join("diagnostics.json"));
        assert_eq!(d["certified"], true);
        assert!(d["fixed_point_residual"].as_f64().unwrap() < 1e-12);
        for f in ["z.csv", "zprime.csv", "drift.csv", "velocity.csv"] {
            assert!(out.join(f).exists());
        }
    }
}

#[test]
fn uncertified_runs_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ydi.json");
    let text = fs::read_to_string(configs().join("ydi_singleton.json")).unwrap().replace("5e-2", "1e-15");
    fs::write(&cfg, text).unwrap();
    let o = run_config("ydi", &cfg, &dir.path().join("out"), &["--level", "7"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "not_certified");
    assert!(dir.path().join("out/diagnostics.json").exists());
}

#[test]
fn check_subset_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = roughinc(&["check", "--out", dir.path().to_str().unwrap(), "--only", "C1,C5,C12"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.contains(" PASS ")).count(), 3);
    let s = json(&dir.path().join("summary.json"));
    let ids: Vec<&str> = s["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["C1", "C5", "C12"]);
    assert!(dir.path().join("c1/table.csv").exists());
}
