//! Black-box tests of the installed binary: output schemas, exit codes,
//! and byte-level determinism.

use std::process::{Command, Output};

fn quatavg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quatavg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (serde_json::Value, Output) {
    let out = quatavg(args);
    let doc = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    });
    (doc, out)
}

#[test]
fn hilbert_reports_the_ramified_places() {
    let (doc, out) = json(&["hilbert", "-1", "-11", "--format", "json"]);
    assert!(out.status.success());
    let r = &doc["results"];
    assert_eq!(r["ramified_at_infinity"], true);
    assert_eq!(r["ramified_primes"], serde_json::json!([11]));
    assert_eq!(r["discriminant"], 11);
    assert_eq!(doc["command"], "hilbert");
}

#[test]
fn constants_include_the_weight_six_tables() {
    let (doc, out) = json(&["constants", "-w", "6", "--format", "json"]);
    assert!(out.status.success());
    let tensor = doc["results"]["tensor"].as_array().unwrap();
    assert_eq!(tensor.len(), 19);
    let center = tensor
        .iter()
        .find(|e| e["i"] == 2 && e["j"] == 2 && e["r"] == 2)
        .expect("central tensor entry present");
    assert_eq!(center["c"], -6);
    let orbit = doc["results"]["orbit_integrals"].as_array().unwrap();
    assert!(orbit
        .iter()
        .any(|e| e["field"] == "Q(i)" && e["m"] == 0 && e["value"][0] == "5/12"));
    assert!(orbit
        .iter()
        .any(|e| e["field"] == "Q(sqrt-3)" && e["m"] == 0 && e["value"][0] == "-1/24"));
}

#[test]
fn verify_passes_at_level_thirteen_weight_four() {
    let (doc, out) = json(&["verify", "-N", "13", "-w", "4", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let records = doc["results"]["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    for r in records {
        assert_eq!(r["pass"], true);
        assert_eq!(r["rhs_exact"], "1/2");
    }
    assert_eq!(doc["results"]["all_pass"], true);
}

#[test]
fn json_output_is_deterministic() {
    let strip = |out: &Output| -> String {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .filter(|l| !l.contains("runtime_ms"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = quatavg(&["eigen", "-N", "11", "-w", "2", "--format", "json"]);
    let b = quatavg(&["eigen", "-N", "11", "-w", "2", "--format", "json"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(strip(&a), strip(&b));
    assert!(!a.stdout.is_empty());
}

#[test]
fn usage_errors_exit_with_code_two() {
    let out = quatavg(&["--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let out = quatavg(&["verify", "-N", "13", "-w", "4", "--precision", "32"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verification_failure_exits_with_code_three() {
    let out = quatavg(&["verify", "-N", "13", "-w", "4", "--tol", "1e-60"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn computation_failures_exit_with_code_one() {
    let out = quatavg(&["brandt", "-N", "11", "-p", "12"]);
    assert_eq!(out.status.code(), Some(1));
    let out = quatavg(&["classset", "-N", "15"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn the_extended_gate_requires_the_flag() {
    let out = quatavg(&["verify", "-N", "11", "-w", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = quatavg(&["verify", "-N", "11", "-w", "2", "--extended", "--tol", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn csv_has_the_documented_header() {
    let out = quatavg(&["verify", "-N", "13", "-w", "4", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(
        text.lines().next().unwrap(),
        "level,weight,h,lhs,rhs,rhs_exact,abs_err,rel_err,pass,error"
    );
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn out_flag_writes_the_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dims.json");
    let out = quatavg(&[
        "dims",
        "-N",
        "5",
        "-w",
        "8",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["results"]["dim_newforms"], 3);
}
