use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_purchase-timing");
const OUT_ENV: &str = "PURCHASE_TIMING_OUT";

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env_remove(OUT_ENV)
        .output()
        .unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

fn small_european() -> Value {
    json!({
        "scenario": "european",
        "model": {
            "r": 0.05, "sigma": 0.2, "maturity": 1.0,
            "market": {"kind": "constant", "lambda": 0.2},
            "buyer": {"kind": "exp_local", "lambda0": 0.2, "decay": 0.5, "reference": 5.0}
        },
        "payoff": {"kind": "put", "strike": 5.0},
        "grid": {"m": 100, "n": 100},
        "spots": [4.2, 5.0],
        "output": {"emit_surfaces": true}
    })
}

fn write_config(dir: &Path, value: &Value) -> String {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_names_every_preset() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["list"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter_map(|l| l.split_whitespace().next()).collect();
    assert!(names.len() >= 7);
    for want in [
        "fig1-put",
        "fig2-digital",
        "fig3-perpetual",
        "fig4-american",
        "stochvol-demo",
        "rolling-demo",
        "buysell-demo",
    ] {
        assert!(names.contains(&want), "missing {want}");
    }
}

#[test]
fn perpetual_preset_reports_the_thresholds() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("fig3");
    let out = run(
        &["--quiet", "preset", "fig3-perpetual", "--out", dir.to_str().unwrap()],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let s = summary(&dir);
    assert_eq!(s["status"], "ok");
    let r = &s["results"];
    let near = |key: &str, want: f64, tol: f64| {
        let got = r[key].as_f64().unwrap();
        assert!((got - want).abs() <= tol, "{key}: {got} vs {want}");
    };
    near("b_star", 2.6316, 1e-4);
    near("b_tilde_star", 2.0833, 1e-4);
    near("s_star", 3.6408, 1e-3);
    near("limit", 5.0 / 6.0, 1e-6);
    assert!(dir.join("timing_value.csv").exists());
    assert!(dir.join("runtime.json").exists());
}

#[test]
fn malformed_config_exits_2_without_output() {
    let tmp = TempDir::new().unwrap();
    let mut bad = small_european();
    bad["grid"]["bogus"] = json!(1);
    let cfg = write_config(tmp.path(), &bad);
    let dir = tmp.path().join("never");
    let out = run(&["run", &cfg, "--out", dir.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    assert!(!dir.exists());

    fs::write(tmp.path().join("broken.json"), "{ not json").unwrap();
    let out = run(&["run", "broken.json", "--out", dir.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.exists());

    let out = run(&["--jobs", "0", "list"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_names_exit_4() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(run(&["preset", "nope"], tmp.path()).status.code(), Some(4));
    let mut cfg = small_european();
    cfg["scenario"] = json!("lunar");
    let path = write_config(tmp.path(), &cfg);
    assert_eq!(run(&["run", &path], tmp.path()).status.code(), Some(4));
}

#[test]
fn solver_failure_exits_3_with_an_error_summary() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_european();
    cfg["solver"] = json!({"max_iter": 1});
    let path = write_config(tmp.path(), &cfg);
    let dir = tmp.path().join("fail");
    let out = run(&["run", &path, "--out", dir.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let s = summary(&dir);
    assert_eq!(s["status"], "error");
    assert!(s["error"]["kind"].is_string());
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let path = write_config(tmp.path(), &small_european());
    let mut runs = Vec::new();
    for jobs in ["1", "2"] {
        let dir = tmp.path().join(format!("jobs{jobs}"));
        let out = run(
            &["--jobs", jobs, "run", &path, "--out", dir.to_str().unwrap()],
            tmp.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push(dir);
    }
    let mut files: Vec<_> = fs::read_dir(&runs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n != "runtime.json")
        .collect();
    files.sort();
    assert!(files.iter().any(|n| n == "summary.json"));
    assert!(files.len() > 2);
    for name in &files {
        let a = fs::read(runs[0].join(name)).unwrap();
        let b = fs::read(runs[1].join(name)).unwrap();
        assert!(a == b, "{name:?} differs");
    }
}

#[test]
fn output_directory_precedence() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = small_european();
    cfg["output"]["directory"] = json!("from-config");
    let path = write_config(tmp.path(), &cfg);
    let with_env = |args: &[&str]| {
        Command::new(BIN)
            .args(args)
            .current_dir(tmp.path())
            .env(OUT_ENV, tmp.path().join("from-env"))
            .output()
            .unwrap()
    };

    assert!(run(&["--quiet", "run", &path], tmp.path()).status.success());
    assert!(tmp.path().join("from-config/summary.json").exists());

    assert!(with_env(&["--quiet", "run", &path]).status.success());
    assert!(tmp.path().join("from-env/summary.json").exists());

    let flag = tmp.path().join("from-flag");
    assert!(with_env(&["--quiet", "run", &path, "--out", flag.to_str().unwrap()])
        .status
        .success());
    assert!(flag.join("summary.json").exists());

    cfg["output"] = json!({});
    let path = write_config(tmp.path(), &cfg);
    assert!(run(&["--quiet", "run", &path], tmp.path()).status.success());
    assert!(tmp.path().join("out/summary.json").exists());
}
