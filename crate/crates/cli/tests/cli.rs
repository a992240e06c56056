//! End-to-end checks of the command-line surface: determinism of
//! emitted artifacts, exit codes, and the documented file formats.

use std::path::Path;
use std::process::{Command, Output};

fn galmem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_galmem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn digests(dir: &Path) -> Vec<(String, String)> {
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap())
            .unwrap();
    manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            (
                o["file"].as_str().unwrap().to_string(),
                o["sha256"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

#[test]
fn identical_seeds_reproduce_identical_digests() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = galmem(&[
            "qod",
            "--m",
            "16",
            "--l",
            "32",
            "--samples",
            "20000",
            "--seed",
            "99",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
    }
    let da = digests(a.path());
    let db = digests(b.path());
    assert_eq!(da, db);
    assert!(da.iter().any(|(f, _)| f == "report.json"));
    assert!(da.iter().any(|(f, _)| f == "histogram.csv"));
}

#[test]
fn worker_count_does_not_change_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(&a, "1"), (&b, "7")] {
        let out = Command::new(env!("CARGO_BIN_EXE_galmem"))
            .env("GALMEM_THREADS", threads)
            .args([
                "qod",
                "--m",
                "16",
                "--l",
                "48",
                "--samples",
                "10000",
                "--seed",
                "3",
                "--out-dir",
                dir.path().to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    assert_eq!(digests(a.path()), digests(b.path()));
}

#[test]
fn qod_requires_a_generator_argument() {
    let out = galmem(&["qod", "--exhaustive"]);
    assert_eq!(out.status.code(), Some(2));
    let out = galmem(&["qod", "--m", "10", "--G", "g:409"]);
    assert_eq!(out.status.code(), Some(2), "conflicting generator flags");
}

#[test]
fn qod_defaults_to_exhaustive_enumeration() {
    // Plain `qod --m 10` reports the exact enumerated mean.
    let dir = tempfile::tempdir().unwrap();
    let out = galmem(&["qod", "--m", "10", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mean"].as_str(), Some("5120/1023"));
    assert!(report["samples"].is_null());
}

#[test]
fn qod_small_field_histogram_matches_hand_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = galmem(&[
        "qod",
        "--G",
        "g:13",
        "--exhaustive",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(csv, "weight,count\n0,0\n1,4\n2,6\n3,4\n4,1\n");
}

#[test]
fn non_primitive_generator_is_a_usage_error() {
    let out = galmem(&["qod", "--G", "g:1f", "--exhaustive"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_rescue_pins_every_confidence() {
    let dir = tempfile::tempdir().unwrap();
    let out = galmem(&[
        "bench",
        "--rr",
        "rescue",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ranking: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ranking.json")).unwrap())
            .unwrap();
    assert_eq!(ranking["effective_branching"].as_f64(), Some(1.0));
    for path in ranking["paths"].as_array().unwrap() {
        assert_eq!(path["cr2"].as_f64(), Some(1.0));
    }
    let decay = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    for line in decay.lines().skip(1) {
        assert_eq!(line.split(',').nth(1), Some("1"));
    }
}

#[test]
fn bench_runs_reproduce_digests() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = galmem(&[
            "bench",
            "--rr",
            "dontcare",
            "--collision-rate",
            "0.2",
            "--seed",
            "12",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{out:?}");
    }
    assert_eq!(digests(a.path()), digests(b.path()));
}

#[test]
fn bench_synthetic_slope_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = galmem(&[
        "bench",
        "--rr",
        "dontcare",
        "--p",
        "0.9",
        "--depths",
        "1..6",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fit.json")).unwrap())
            .unwrap();
    let slope = fit["slope"].as_f64().unwrap();
    assert!((slope - 0.9f64.ln()).abs() < 1e-9);
    assert_eq!(fit["r_squared"].as_f64(), Some(1.0));
}

#[test]
fn bench_reads_edge_files() {
    let dir = tempfile::tempdir().unwrap();
    let edges_path = dir.path().join("edges.tsv");
    std::fs::write(&edges_path, "1\t7\t2\n2\t7\t3\n3\t7\t4\n").unwrap();
    let out = galmem(&[
        "bench",
        "--edges",
        edges_path.to_str().unwrap(),
        "--start",
        "1",
        "--relations",
        "7",
        "--depth",
        "3",
        "--rr",
        "rescue",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let ranking: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ranking.json")).unwrap())
            .unwrap();
    assert_eq!(ranking["complete_paths"].as_u64(), Some(1));
    assert_eq!(
        ranking["paths"][0]["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .collect::<Vec<_>>(),
        vec![1, 2, 3, 4]
    );
}

#[test]
fn malformed_edge_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let edges_path = dir.path().join("edges.tsv");
    std::fs::write(&edges_path, "1\t7\n").unwrap();
    let out = galmem(&[
        "bench",
        "--edges",
        edges_path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hdc_demo_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = galmem(&["hdc-demo", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo.json")).unwrap())
            .unwrap();
    assert_eq!(report["demo"]["pass"].as_bool(), Some(true));
    assert_eq!(report["roundtrip_failures"].as_u64(), Some(0));
}

fn toy_query_json(rr: &str) -> String {
    format!(
        r#"{{
  "evidence": {{"X": "x0", "Y": "y0"}},
  "intervention": {{"X": "x1"}},
  "mechanisms": [
    {{"cause": "u0", "label": "sets-x", "effect": "x0"}},
    {{"cause": "u1", "label": "sets-x", "effect": "x1"}},
    {{"cause": "x0", "label": "sets-y", "effect": "y0"}},
    {{"cause": "x1", "label": "sets-y", "effect": "y1"}}
  ],
  "roles": {{"u0": "U", "u1": "U", "x0": "X", "x1": "X", "y0": "Y", "y1": "Y"}},
  "memory": {{"rr_mode": "{rr}", "seed": 7}}
}}
"#
    )
}

#[test]
fn cf_rescue_gives_unit_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let query = dir.path().join("query.json");
    std::fs::write(&query, toy_query_json("rescue")).unwrap();
    let out = galmem(&[
        "cf",
        "--query",
        query.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let response: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("response.json")).unwrap())
            .unwrap();
    assert_eq!(response["u_hat"].as_str(), Some("u0"));
    assert_eq!(response["y_hat"].as_str(), Some("y1"));
    assert_eq!(response["ratio"].as_f64(), Some(1.0));
}

#[test]
fn cf_injected_abstention_lowers_the_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let query = dir.path().join("query.json");
    std::fs::write(&query, toy_query_json("dont-care")).unwrap();
    let out = galmem(&[
        "cf",
        "--query",
        query.to_str().unwrap(),
        "--inject-abstention",
        "0",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let response: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("response.json")).unwrap())
            .unwrap();
    let ratio = response["ratio"].as_f64().unwrap();
    let factual = response["factual_cr2"].as_f64().unwrap();
    let counterfactual = response["counterfactual_cr2"].as_f64().unwrap();
    assert!(ratio < 1.0);
    assert_eq!(ratio, counterfactual / factual);
    let details: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("details.json")).unwrap())
            .unwrap();
    assert_eq!(details["factual_snapshot_intact"].as_bool(), Some(true));
}

#[test]
fn cf_rejects_malformed_json_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let query = dir.path().join("query.json");
    std::fs::write(&query, "{\n  \"evidence\": [broken\n}\n").unwrap();
    let out = galmem(&[
        "cf",
        "--query",
        query.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "diagnostic: {stderr}");
}

#[test]
fn snapshot_save_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = galmem(&[
        "snapshot",
        "save",
        "--writes",
        "300",
        "--seed",
        "5",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let image = dir.path().join("memory.gmem");
    let out = galmem(&["snapshot", "verify", image.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("round_trip=identical"));

    // Corrupt one slot byte: verification must fail with exit 1.
    let mut bytes = std::fs::read(&image).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xFF;
    std::fs::write(&image, &bytes).unwrap();
    let out = galmem(&["snapshot", "verify", image.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
