use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hyprel(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hyprel"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn passing_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = hyprel(&["hemisphere", "--out", out.to_str().unwrap(), "--verbose"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("PASS c0_relative_error"));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "hemisphere");
    assert_eq!(manifest["library_version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(manifest["config"]["parameters"]["radius"], 1.0);
    let csv = fs::read_to_string(out.join("area_samples.csv")).unwrap();
    assert!(csv.starts_with("eps,value,error_bound\n"));
    assert!(!csv.contains('\r'));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (d, threads) in [(&a, "1"), (&b, "3")] {
        let o = hyprel(&["catenoid", "--out", d.to_str().unwrap()], &[("HYPREL_THREADS", threads)]);
        assert_eq!(o.status.code(), Some(0));
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 1);
    for f in fs::read_dir(&a).unwrap() {
        let name = f.unwrap().file_name();
        if name == "manifest.json" {
            continue;
        }
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn config_file_parameters_and_strictness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), r#"{"command":"scaling-test","parameters":{"lambda":0.25,"nodes":80},"seed":7}"#);
    let o = hyprel(&["scaling-test", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config"]["parameters"]["lambda"], 0.25);
    assert_eq!(m["config"]["seed"], 7);

    let bad = write_config(dir.path(), r#"{"parameters":{"lamda":0.25}}"#);
    let o = hyprel(&["scaling-test", "--config", &bad, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda"));

    let syntax = write_config(dir.path(), "{\"parameters\":\n{");
    let o = hyprel(&["scaling-test", "--config", &syntax], &[]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let other = write_config(dir.path(), r#"{"command":"mcf"}"#);
    assert_eq!(hyprel(&["hemisphere", "--config", &other], &[]).status.code(), Some(4));
    assert_eq!(hyprel(&["no-such-command"], &[]).status.code(), Some(4));
    assert_eq!(hyprel(&["hemisphere", "--out", out.to_str().unwrap()], &[("HYPREL_THREADS", "zero")]).status.code(), Some(4));
}

#[test]
fn failed_invariant_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"parameters":{"tolerance":0.0}}"#);
    let out = dir.path().join("out");
    let o = hyprel(&["geodesic-entropy", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL entropy_matches_closed_form"));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["passed"], false);
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"parameters":{"nodes":50,"flow":{"max_steps":10}}}"#);
    let o = hyprel(&["mcf", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step limit"));
}
