//! End-to-end tests of the `algebroid` binary: exit codes, report schema,
//! determinism and the chart-file workflow.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_algebroid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

#[test]
fn list_json_has_five_sorted_entries() {
    let out = run(&["list", "--format", "json"]);
    assert!(out.status.success());
    let value = json(&out);
    let entries = value.as_array().unwrap();
    assert_eq!(entries.len(), 5);
    let names: Vec<&str> = entries
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    let mut sorted = names.clone();
    sorted.sort_unstable();
    assert_eq!(names, sorted);
}

#[test]
fn verify_gallery_chart_passes() {
    let out = run(&[
        "verify",
        "--example",
        "heisenberg",
        "--samples",
        "100",
        "--tol",
        "1e-9",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("overall: pass"));
}

#[test]
fn verify_corrupted_chart_fails_with_named_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corrupted.chart");
    std::fs::write(
        &path,
        r#"
name = "corrupted"
n = 0
m = 3
sigma = []
p = ["v1 + w1", "v2 + w2", "v3 + w3 + v1*w2 + 0.01"]
radius_u = 1.0
radius_v = 1.0
"#,
    )
    .unwrap();
    let out = run(&["verify", "--chart-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    let unit_line = text
        .lines()
        .find(|l| l.contains("unit_laws"))
        .expect("unit_laws row present");
    assert!(unit_line.contains("FAIL"), "{unit_line}");
}

#[test]
fn verify_with_zero_samples_passes_vacuously() {
    let out = run(&["verify", "--example", "pair", "--samples", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("no samples"));
}

#[test]
fn extract_pair_reports_identity_anchor() {
    let out = run(&[
        "extract", "--example", "pair", "--point-u", "0.3", "--format", "json",
    ]);
    assert!(out.status.success());
    let value = json(&out);
    assert_eq!(value["structure"][0]["anchor"][0][0], 1.0);
    assert_eq!(value["structure"][0]["c"][0][0][0], 0.0);
}

#[test]
fn extract_heisenberg_bundle_base_dependence() {
    let out = run(&[
        "extract",
        "--example",
        "heisenberg_bundle",
        "--point-u",
        "0.5",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let value = json(&out);
    let c = &value["structure"][0]["c"];
    assert_eq!(c[2][0][1], 1.5);
    assert_eq!(c[2][1][0], -1.5);
}

#[test]
fn extract_su2_structure_constants() {
    let out = run(&["extract", "--example", "su2_quaternion", "--format", "json"]);
    assert!(out.status.success());
    let value = json(&out);
    let c = &value["structure"][0]["c"];
    for (i, j, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        assert_eq!(c[k][i][j], 2.0);
        assert_eq!(c[k][j][i], -2.0);
    }
}

#[test]
fn extract_full_flag_includes_bilinear_tensor() {
    let plain = run(&["extract", "--example", "heisenberg", "--format", "json"]);
    let full = run(&[
        "extract", "--example", "heisenberg", "--full", "--format", "json",
    ]);
    assert!(json(&plain)["structure"][0].get("b").is_none());
    assert_eq!(json(&full)["structure"][0]["b"][2][0][1], 1.0);
}

#[test]
fn identical_configs_give_byte_identical_json() {
    let args = [
        "verify",
        "--example",
        "affine_action",
        "--samples",
        "50",
        "--seed",
        "17",
        "--format",
        "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn extraction_order_override_changes_nothing() {
    let base = run(&[
        "extract", "--example", "affine_action", "--point-u", "0.4", "--format", "json",
    ]);
    let order3 = run(&[
        "extract", "--example", "affine_action", "--point-u", "0.4", "--order", "3",
        "--format", "json",
    ]);
    assert!(base.status.success() && order3.status.success());
    assert_eq!(base.stdout, order3.stdout);
    let bad = run(&[
        "extract", "--example", "affine_action", "--order", "1",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn invert_heisenberg_matches_closed_form() {
    let out = run(&[
        "invert", "--example", "heisenberg", "--v", "0.1,0.2,0.3", "--format", "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value = json(&out);
    let w: Vec<f64> = value["w"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let expected = [-0.1, -0.2, -0.28];
    for (a, b) in w.iter().zip(expected.iter()) {
        assert!((a - b).abs() <= 1e-13);
    }
    assert!(value["expansion_residual"].as_f64().unwrap() <= 1e-13);
}

#[test]
fn invert_affine_action() {
    let out = run(&[
        "invert", "--example", "affine_action", "--point-u", "1", "--v", "0.2,0.3",
        "--format", "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value = json(&out);
    let w: Vec<f64> = value["w"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((w[0] + 0.2).abs() <= 1e-12);
    assert!((w[1] + (-0.2f64).exp() * 0.3).abs() <= 1e-12);
}

#[test]
fn bracket_of_base_vector_fields() {
    let out = run(&[
        "bracket", "--example", "pair", "--xi", "1", "--eta", "u1", "--point-u", "0.3",
        "--format", "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value = json(&out);
    assert!((value["bracket"][0]["value"][0].as_f64().unwrap() - 1.0).abs() <= 1e-12);
}

#[test]
fn bracket_of_equal_sections_vanishes() {
    let out = run(&[
        "bracket",
        "--example",
        "su2_quaternion",
        "--xi", "0.3", "--xi", "-0.1", "--xi", "0.7",
        "--eta", "0.3", "--eta", "-0.1", "--eta", "0.7",
        "--format", "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value = json(&out);
    for k in 0..3 {
        assert!(value["bracket"][0]["value"][k].as_f64().unwrap().abs() <= 1e-12);
    }
}

#[test]
fn bracket_of_heisenberg_frame_sections() {
    let out = run(&[
        "bracket",
        "--example", "heisenberg",
        "--xi", "1", "--xi", "0", "--xi", "0",
        "--eta", "0", "--eta", "1", "--eta", "0",
        "--format", "json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let value = json(&out);
    let v: Vec<f64> = value["bracket"][0]["value"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((v[0]).abs() <= 1e-13 && (v[1]).abs() <= 1e-13 && (v[2] - 1.0).abs() <= 1e-13);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["list", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--example", "nonexistent"]).status.code(), Some(2));
    let out = run(&["extract", "--example", "pair", "--point-u", "0.1,0.2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_chart_file_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.chart");
    std::fs::write(
        &path,
        r#"
name = "broken"
n = 0
m = 1
sigma = []
p = ["v1 + w1 +"]
radius_u = 1.0
radius_v = 1.0
"#,
    )
    .unwrap();
    let out = run(&["verify", "--chart-file", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("byte"), "{}", stderr(&out));
}

#[test]
fn out_of_domain_extraction_point_exits_2() {
    let out = run(&["extract", "--example", "pair", "--point-u", "5.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("domain"), "{}", stderr(&out));
}

fn write_heisenberg_chart(path: &Path) {
    std::fs::write(
        path,
        r#"
name = "heisenberg_from_file"
n = 0
m = 3
sigma = []
p = ["v1 + w1", "v2 + w2", "v3 + w3 + v1*w2"]
radius_u = 1.0
radius_v = 1.0
"#,
    )
    .unwrap();
}

#[test]
fn chart_file_workflow_matches_gallery() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heis.chart");
    write_heisenberg_chart(&path);
    let from_file = run(&[
        "extract", "--chart-file", path.to_str().unwrap(), "--format", "json",
    ]);
    assert!(from_file.status.success());
    let from_gallery = run(&["extract", "--example", "heisenberg", "--format", "json"]);
    let a = json(&from_file);
    let b = json(&from_gallery);
    assert_eq!(a["structure"], b["structure"]);
    let verify = run(&["verify", "--chart-file", path.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(0));
}
