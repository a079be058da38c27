//! Command-line behavior: output shapes, exit codes, caching.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_kmilnor")
}

fn ring_path(name: &str) -> PathBuf {
    PathBuf::from(format!("{}/../../rings/{name}", env!("CARGO_MANIFEST_DIR")))
}

#[test]
fn ring_info_reports_order_units_and_stability() {
    let out = Command::new(bin())
        .arg("ring-info")
        .arg(ring_path("f7te.toml"))
        .output()
        .expect("run");
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "order 2401",
        "units 2058",
        "local",
        "residue field 7",
        "5-fold stable (criterion)",
        "nilpotency 2",
    ] {
        assert!(text.contains(needle), "missing {needle:?} in {text}");
    }
    assert!(!text.contains("not 5-fold"));
}

#[test]
fn ring_info_small_example() {
    let out = Command::new(bin())
        .arg("ring-info")
        .arg(ring_path("f2x.toml"))
        .output()
        .expect("run");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("order 4"));
    assert!(text.contains("units 2"));
    assert!(text.contains("not 5-fold stable"));
}

#[test]
fn malformed_file_exits_2_with_position() {
    let dir = std::env::temp_dir().join(format!("kmilnor-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.toml");
    std::fs::write(&path, "char = \"seven\"\n").unwrap();
    let out = Command::new(bin()).arg("ring-info").arg(&path).output().expect("run");
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "diagnostic should carry a position: {err}");
    std::fs::remove_dir_all(&dir).ok();
}

fn compute_json(args: &[&str]) -> serde_json::Value {
    let out = Command::new(bin()).args(args).output().expect("run");
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("json")
}

#[test]
fn compute_examples() {
    let v = compute_json(&[
        "compute",
        "kmilnor",
        "--ring",
        ring_path("f2x.toml").to_str().unwrap(),
        "--n",
        "2",
    ]);
    assert_eq!(v["invariants"], serde_json::json!([2]));

    let v = compute_json(&[
        "compute",
        "omega",
        "--ring",
        ring_path("f7e2.toml").to_str().unwrap(),
        "--n",
        "1",
    ]);
    assert_eq!(v["invariants"], serde_json::json!([7]));

    let v = compute_json(&[
        "compute",
        "d2",
        "--ring",
        ring_path("f7.toml").to_str().unwrap(),
    ]);
    assert_eq!(v["invariants"], serde_json::json!([]));
}

#[test]
fn compute_encodes_expressions() {
    let v = compute_json(&[
        "compute",
        "omega",
        "--ring",
        ring_path("f7te.toml").to_str().unwrap(),
        "--n",
        "1",
        "--encode",
        "e * d(t)",
    ]);
    assert_eq!(v["is_zero"], serde_json::json!(false));
    let v = compute_json(&[
        "compute",
        "kmilnor",
        "--ring",
        ring_path("f2x.toml").to_str().unwrap(),
        "--n",
        "2",
        "--encode",
        "{1+x, 1+x}",
    ]);
    assert_eq!(v["is_zero"], serde_json::json!(false));
}

#[test]
fn compute_relative_kernels() {
    let v = compute_json(&[
        "compute",
        "kmilnor",
        "--ring",
        ring_path("f7te.toml").to_str().unwrap(),
        "--n",
        "2",
        "--relative",
    ]);
    assert_eq!(v["invariants"], serde_json::json!([7]));
    let v = compute_json(&[
        "compute",
        "omega",
        "--ring",
        ring_path("f7e2.toml").to_str().unwrap(),
        "--n",
        "1",
        "--relative",
    ]);
    assert_eq!(v["invariants"], serde_json::json!([7]));
}

#[test]
fn compute_too_large_exits_3() {
    let out = Command::new(bin())
        .args([
            "compute",
            "d2",
            "--ring",
            ring_path("f7te.toml").to_str().unwrap(),
        ])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_exit_codes() {
    let out = Command::new(bin())
        .args([
            "verify",
            "--ring",
            ring_path("f7te.toml").to_str().unwrap(),
            "--n",
            "1",
        ])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(report["verdict"], "PASS");
    assert_eq!(report["lhs_invariants"], serde_json::json!([7]));

    let out = Command::new(bin())
        .args([
            "verify",
            "--ring",
            ring_path("f2x.toml").to_str().unwrap(),
            "--n",
            "1",
        ])
        .output()
        .expect("run");
    assert_eq!(out.status.code(), Some(4), "stability failure is REPORT-ONLY");
}

#[test]
fn verify_mode_override_is_recorded() {
    let out = Command::new(bin())
        .args([
            "verify",
            "--ring",
            ring_path("f7e2.toml").to_str().unwrap(),
            "--n",
            "1",
            "--mode",
            "criterion",
        ])
        .output()
        .expect("run");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(report["stability_mode"], "criterion");
}

#[test]
fn cache_hits_do_not_change_reports() {
    let dir = std::env::temp_dir().join(format!("kmilnor-cache-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let run = || {
        let out = Command::new(bin())
            .env("KMILNOR_CACHE_DIR", &dir)
            .args([
                "verify",
                "--ring",
                ring_path("f7v2.toml").to_str().unwrap(),
                "--n",
                "1",
                "--seed",
                "5",
            ])
            .output()
            .expect("run");
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout).to_string();
        text.lines()
            .filter(|l| !l.contains("elapsed_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let cold = run();
    let entries = std::fs::read_dir(&dir).unwrap().count();
    assert!(entries > 0, "cache should be populated");
    let warm = run();
    assert_eq!(cold, warm, "cached run must match the cold run");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn suite_filter_selects_instances() {
    let out = Command::new(bin())
        .args(["suite", "--filter", "n=2"])
        .output()
        .expect("run");
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json");
    let instances = report["instances"].as_array().unwrap();
    assert!(!instances.is_empty());
    assert!(instances.iter().all(|i| i["n"] == 2));
}

#[test]
fn suite_empty_filter_is_fine() {
    let out = Command::new(bin())
        .args(["suite", "--filter", "no-such-instance"])
        .output()
        .expect("run");
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(report["instances"].as_array().unwrap().len(), 0);
}
