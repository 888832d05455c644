use std::collections::HashSet;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use twisted_cli::report::{parse_rows, CheckReport};

fn twisted(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twisted"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read_report(path: &Path) -> (Value, Vec<CheckReport>) {
    let text = std::fs::read_to_string(path).unwrap();
    let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    (header["header"].clone(), parse_rows(&text).unwrap())
}

fn assert_row_invariants(rows: &[CheckReport]) {
    let ids: Vec<&str> = rows.iter().map(|r| r.check_id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted, "rows are sorted by check_id");
    assert_eq!(ids.iter().collect::<HashSet<_>>().len(), ids.len(), "check_ids are unique");
    for r in rows {
        assert!(r.is_consistent(), "{}: pass must equal abs_err <= tol", r.check_id);
    }
}

fn row<'a>(rows: &'a [CheckReport], id: &str) -> &'a CheckReport {
    rows.iter().find(|r| r.check_id == id).unwrap_or_else(|| panic!("missing row {id}"))
}

#[test]
fn verify_matrix_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = twisted(&["verify-matrix", "--out", "r.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_report(&dir.path().join("r.jsonl"));
    assert_eq!(header["command"], "verify-matrix");
    assert!(rows.len() >= 12, "only {} check ids", rows.len());
    assert!(rows.iter().all(|r| r.pass));
    assert_row_invariants(&rows);
}

#[test]
fn seed_override_is_reproducible_and_echoed() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"seed": 3, "matrix": {"trials": 2, "dims": [4, 8]}}"#).unwrap();
    let run = |out: &str| {
        let o = twisted(&["verify-matrix", "--config", "cfg.json", "--seed", "11", "--tol-scale", "2", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
        read_report(&dir.path().join(out))
    };
    let (h1, a) = run("a.jsonl");
    let (_, b) = run("b.jsonl");
    assert_eq!(h1["config"]["seed"], 11);
    assert_eq!(h1["config"]["tol_scale"], 2.0);
    assert_eq!(h1["config"]["matrix"]["trials"], 2);
    let errs = |rows: &[CheckReport]| rows.iter().map(|r| (r.check_id.clone(), r.abs_err.to_bits())).collect::<Vec<_>>();
    assert_eq!(errs(&a), errs(&b));
    assert!(a.iter().all(|r| r.seed == Some(11)));

    let o = twisted(&["verify-matrix", "--config", "cfg.json", "--seed", "12", "--out", "c.jsonl"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let (_, c) = read_report(&dir.path().join("c.jsonl"));
    assert_ne!(errs(&a), errs(&c));
}

#[test]
fn zero_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"matrix": {"trials": 1, "dims": [4]}}"#).unwrap();
    let out = twisted(&["verify-matrix", "--config", "cfg.json", "--tol-scale", "0", "--out", "r.jsonl"], dir.path());
    assert_ne!(out.status.code(), Some(0));
    let (_, rows) = read_report(&dir.path().join("r.jsonl"));
    assert!(rows.iter().any(|r| !r.pass));
    assert_row_invariants(&rows);
}

#[test]
fn dumps_carry_a_json_header() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"dump_dir": "dumps", "matrix": {"trials": 1, "dims": [4]}}"#).unwrap();
    let out = twisted(&["verify-matrix", "--config", "cfg.json", "--out", "r.jsonl"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let header: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("dumps/triple_d4.D.bin.json")).unwrap()).unwrap();
    assert_eq!(header["N"], 4);
    assert_eq!(header["label"], "D");
    let bytes = std::fs::metadata(dir.path().join("dumps/triple_d4.D.bin")).unwrap().len();
    assert_eq!(bytes, 4 * 4 * 16);
}

#[test]
fn verify_circle_tables_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"n_trunc": 256, "circle": {"ladder": [64, 128, 256], "pairs": 1, "vanishing_epsilons": [0.5]}}"#,
    )
    .unwrap();
    let out = twisted(&["verify-circle", "--config", "cfg.json", "--out", "r.jsonl"], dir.path());
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = read_report(&dir.path().join("r.jsonl"));
    assert_row_invariants(&rows);
    assert_eq!(header["config"]["circle"]["ladder"], serde_json::json!([64, 128, 256]));

    let csv = std::fs::read_to_string(dir.path().join("commutator_dirac.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("N,value_re,value_im,delta"));
    let deltas: Vec<f64> = lines.filter_map(|l| l.split(',').nth(3)).filter(|d| !d.is_empty()).map(|d| d.parse().unwrap()).collect();
    assert_eq!(deltas.len(), 2);
    assert!(deltas[1] < deltas[0], "deltas {deltas:?}");
    assert!(row(&rows, "circle.commutator.dirac.cauchy.N0256").pass);

    assert!(row(&rows, "circle.residue.vanishing.eps0.5").abs_err < 1e-3);
    assert!(row(&rows, "circle.theorem12.closed").abs_err < 1e-9);
    for name in ["residue_zeta.csv", "residue_vanishing_eps0.5.csv", "psi1_spectral.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("N,value_re,value_im,delta\n"), "{name}");
    }
}

fn stdout_lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn compute_tau_of_sin_and_cos() {
    let dir = tempfile::tempdir().unwrap();
    let out = twisted(&["compute", "tau", r#"{"f": "sin", "g": "cos"}"#], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    let v = lines[0]["value"]["re"].as_f64().unwrap();
    assert!((v + std::f64::consts::PI).abs() < 1e-12);
    assert!(lines[1].get("header").is_some());
}

#[test]
fn compute_index_pair_prints_integers() {
    let dir = tempfile::tempdir().unwrap();
    let out = twisted(&["compute", "index_pair"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = &stdout_lines(&out)[0];
    assert!(v["index_plus"].is_i64() && v["index_minus"].is_i64());
    assert_eq!(v["index_plus"].as_i64().unwrap(), -v["index_minus"].as_i64().unwrap());
}

#[test]
fn compute_psi1_closed_of_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = twisted(&["compute", "psi1_closed", r#"{"f": "one", "g": "one"}"#], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v = &stdout_lines(&out)[0]["value"];
    assert_eq!(v["re"].as_f64(), Some(0.0));
    assert_eq!(v["im"].as_f64(), Some(0.0));
}

#[test]
fn compute_rejects_unknown_expressions() {
    let dir = tempfile::tempdir().unwrap();
    let out = twisted(&["compute", "psi7"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown expression"));
    assert!(out.stdout.is_empty());
}

#[test]
fn residue_of_a_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = twisted(&["residue", r#"{"f": [[0, 1.5, 0.0]]}"#, "--n-trunc", "128"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let lines = stdout_lines(&out);
    assert!((lines[0]["value_re"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    assert_eq!(lines[1]["header"]["config"]["n_trunc"], 128);
    assert_eq!(lines[2]["check_id"], "residue.zeta");
}
