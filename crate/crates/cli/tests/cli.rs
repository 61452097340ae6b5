use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crosslink"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Baseline config shortened to two days at hourly cadence.
fn short_config(dir: &Path) -> PathBuf {
    let text = fs::read_to_string(configs().join("baseline_pn.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["dynamics"]["duration_days"] = 2.0.into();
    v["link"]["cadence_s"] = 3600.0.into();
    v["montecarlo"]["split_day"] = 1.0.into();
    let path = dir.join("short.json");
    fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn csv_rows(path: &Path) -> usize {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|x| x.unwrap()).count()
}

#[test]
fn simulate_writes_parseable_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = dir.path().join("out");
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "4"]);
    for name in ["truth.csv", "estimates.csv", "measurements.csv", "effectiveness.csv"] {
        assert_eq!(csv_rows(&out.join(name)), if name == "truth.csv" { 49 } else { 48 }, "{name}");
    }
    let header = csv::Reader::from_path(out.join("estimates.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(&header[0], "epoch_days");
    assert_eq!(&header[1], "err_x1_m");
    assert_eq!(&header[13], "sigma_x1_m");
    assert_eq!(&header[25], "residual");
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in ["rms_error_pos_m", "rms_sigma_pos_m", "rms_error_vel_mms", "rms_sigma_vel_mms"] {
        let block = &summary["summary"]["averaged"][key];
        assert!(block["full"].is_number() && block["post_split"].is_number(), "{key}");
    }
}

#[test]
fn json_format_and_bias_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = dir.path().join("out");
    let stdout = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--bias-mode",
        "estimate",
    ])
    .stdout;
    assert!(String::from_utf8_lossy(&stdout).contains("final bias estimate"));
    let est: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("estimates.json")).unwrap()).unwrap();
    assert_eq!(est["rows"].as_array().unwrap().len(), 48);
    let columns = est["columns"].as_array().unwrap();
    assert!(columns.iter().any(|c| c == "bias_m"));
}

#[test]
fn propagate_reports_jacobi_drift() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = dir.path().join("out");
    run(&["propagate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for d in s["jacobi_relative_drift"].as_array().unwrap() {
        assert!(d.as_f64().unwrap().abs() < 1e-10);
    }
    assert_eq!(csv_rows(&out.join("truth.csv")), 49);
}

#[test]
fn montecarlo_and_observability() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let out = dir.path().join("mc");
    run(&["montecarlo", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--runs", "3", "--workers", "2"]);
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["runs_used"], 3);
    assert_eq!(csv_rows(&out.join("rmse.csv")), 48);

    let out = dir.path().join("obs");
    let cfg = configs().join("baseline_pn.json");
    run(&["observability", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--measurement", "range"]);
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("observability.json")).unwrap()).unwrap();
    assert_eq!(r["state_ranking"].as_array().unwrap().len(), 12);
    assert!(r["condition_number"].as_f64().unwrap() > 1e11);
}

#[test]
fn linkbudget_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lb");
    let stdout = String::from_utf8(run(&["linkbudget", "--out", out.to_str().unwrap()]).stdout).unwrap();
    assert!(stdout.contains("pn_range_sigma_two_way"));
    assert_eq!(csv_rows(&out.join("linkbudget.csv")), 8);
}

#[test]
fn fixed_step_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path());
    let dirs = [dir.path().join("a"), dir.path().join("b")];
    for d in &dirs {
        run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", d.to_str().unwrap(), "--fixed-step", "600"]);
    }
    for name in ["truth.csv", "estimates.csv", "measurements.csv", "effectiveness.csv", "summary.json"] {
        assert_eq!(fs::read(dirs[0].join(name)).unwrap(), fs::read(dirs[1].join(name)).unwrap(), "{name}");
    }
}

#[test]
fn bad_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("unknown.json", r#"{"link": {"cadence_s": 60, "cadense": 1}}"#, "cadense"),
        ("zero.json", r#"{"link": {"cadence_s": 0}}"#, "cadence"),
        ("empty.json", "", "line"),
    ];
    for (name, text, needle) in cases {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        let out = bin()
            .args(["propagate", "--config", path.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()])
            .output()
            .unwrap();
        assert!(!out.status.success(), "{name}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{name}: {err}");
    }
}

#[test]
fn shipped_configs_load() {
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let dir = tempfile::tempdir().unwrap();
        run(&["linkbudget", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    }
}
