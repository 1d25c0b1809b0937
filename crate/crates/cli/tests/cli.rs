use std::path::PathBuf;

use hermlie_cli::run_with;
use serde_json::Value;

fn catalog(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "catalog", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let argv: Vec<String> = std::iter::once("hermlie").chain(args.iter().copied()).map(String::from).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_with(&argv, &mut out, &mut err, false);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_report(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.push("--json-only");
    let (code, out, err) = run(&full);
    assert!(err.is_empty(), "{err}");
    (code, serde_json::from_str(&out).expect("json-only output is one JSON document"))
}

fn check<'a>(rep: &'a Value, id: &str) -> &'a Value {
    rep["checks"].as_array().unwrap().iter().find(|c| c["check_id"] == id).unwrap_or_else(|| panic!("no check {id}"))
}

#[test]
fn analyze_torus_is_kahler() {
    let (code, rep) = json_report(&["analyze", &catalog("torus.json")]);
    assert_eq!(code, 0);
    assert_eq!(rep["verdict"], "Kähler");
    let s = rep["results"]["S"].as_array().unwrap();
    assert!(s.iter().flat_map(|row| row.as_array().unwrap()).all(|z| z[0] == 0.0 && z[1] == 0.0));
}

#[test]
fn kahlerize_family_matches_metadata() {
    let (code, rep) = json_report(&["kahlerize", &catalog("family_r1n2.json")]);
    assert_eq!(code, 0);
    let dw = rep["results"]["certificate"]["residuals"]["d_omega_tilde"].as_f64().unwrap();
    assert!(dw <= 1e-10, "{dw}");
    assert_eq!(check(&rep, "kahler.metadata_p")["status"], "pass");
}

#[test]
fn kahlerize_kodaira_thurston_names_restriction2() {
    let (code, rep) = json_report(&["kahlerize", &catalog("kodaira_thurston.json")]);
    assert_eq!(code, 1);
    let r2 = check(&rep, "solvable.restriction2");
    assert_eq!(r2["status"], "fail");
    assert!(r2["paper_ref"].as_str().unwrap().contains("the structure constants satisfy"));
    assert!(rep["verdict"].as_str().unwrap().contains("solvable.restriction2"));
}

#[test]
fn analyze_kodaira_thurston_verdict_and_exit() {
    let (code, rep) = json_report(&["analyze", &catalog("kodaira_thurston.json")]);
    assert_eq!(code, 0);
    assert_eq!(rep["verdict"], "pluriclosed, not HS-compatible (restriction2 fails)");
    assert!(check(&rep, "hs.decide")["residual"].as_f64().unwrap() >= 0.3);
}

#[test]
fn hs_reports_infeasibility_as_failure() {
    let (code, rep) = json_report(&["hs", &catalog("kodaira_thurston.json")]);
    assert_eq!(code, 1);
    assert!(rep["results"].get("S").is_none());
    let (code, rep) = json_report(&["hs", &catalog("family_r2n4.json")]);
    assert_eq!(code, 0);
    assert!(rep["results"]["S"].is_array());
}

#[test]
fn hs_search_is_informational() {
    let (code, rep) = json_report(&["hs", &catalog("kodaira_thurston.json"), "--search", "2"]);
    assert_eq!(code, 1);
    assert_eq!(check(&rep, "hs.metric_search")["status"], "fail");
}

#[test]
fn verify_claims_on_family() {
    let (code, rep) = json_report(&["verify-claims", &catalog("family_r3n6.json")]);
    assert_eq!(code, 0, "{rep}");
    for id in ["solvable.bianchi_blocks.C7", "solvable.hs_blocks.D8", "kahler.claim5"] {
        assert_eq!(check(&rep, id)["status"], "pass", "{id}");
    }
}

#[test]
fn generate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fam.json");
    let (code, _, err) = run(&["generate", "--r", "2", "--n", "5", "--seed", "11", "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let (code, rep) = json_report(&["analyze", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(check(&rep, "kahler.metadata_p")["status"], "pass");
}

#[test]
fn generate_from_files_and_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let lam = dir.path().join("lam.json");
    let p = dir.path().join("p.json");
    std::fs::write(&lam, "[[[1, 0]], [[0, 1]]]").unwrap();
    std::fs::write(&p, "[[0.5, -0.25]]").unwrap();
    let out = dir.path().join("f.json");
    let args = ["generate", "--r", "1", "--n", "3", "--lambda", lam.to_str().unwrap(), "--p", p.to_str().unwrap(), "-o", out.to_str().unwrap()];
    assert_eq!(run(&args).0, 0);
    let (code, rep) = json_report(&["kahlerize", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let got = &rep["results"]["certificate"]["p"][0];
    assert!((got[0].as_f64().unwrap() - 0.5).abs() < 1e-12 && (got[1].as_f64().unwrap() + 0.25).abs() < 1e-12, "{got}");

    let (code, _, err) = run(&["generate", "--r", "2", "--n", "3", "-o", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("error:"));
}

#[test]
fn malformed_document_is_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.json");
    std::fs::write(&f, "{\n  \"schema_version\": 1,\n  \"name\": oops\n}").unwrap();
    let (code, out, err) = run(&["analyze", f.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["analyze"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["analyze", &catalog("torus.json"), "--tol-alg", "-1"]).0, 2);
    assert_eq!(run(&["analyze", "/nonexistent/x.json"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn config_file_and_flags_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"tol_alg": 1e-7, "seed": 5}"#).unwrap();
    let (_, rep) = json_report(&["analyze", &catalog("torus.json"), "--config", cfg.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(rep["config"]["tol_alg"], 1e-7);
    assert_eq!(rep["config"]["seed"], 9);
    std::fs::write(&cfg, r#"{"tol_typo": 1}"#).unwrap();
    assert_eq!(run(&["analyze", &catalog("torus.json"), "--config", cfg.to_str().unwrap()]).0, 2);
}

#[test]
fn reports_are_byte_identical() {
    let file = catalog("family_r2n4.json");
    let a = run(&["analyze", &file, "--json-only"]).1;
    let b = run(&["analyze", &file, "--json-only"]).1;
    assert_eq!(a, b);
}

#[test]
fn text_report_and_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rep.json");
    let (code, out, _) = run(&["analyze", &catalog("torus.json"), "--report", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("verdict: Kähler"));
    assert!(!out.contains('\x1b'));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(saved["verdict"], "Kähler");

    let argv: Vec<String> = ["hermlie", "analyze", &catalog("torus.json")].iter().map(|s| s.to_string()).collect();
    let mut colored = Vec::new();
    run_with(&argv, &mut colored, &mut Vec::new(), true);
    assert!(String::from_utf8(colored).unwrap().contains("\x1b[32m"));
}

#[test]
fn batch_over_catalog() {
    let (code, summary) = json_report(&["batch", &catalog("")]);
    assert_eq!(code, 0);
    let docs = summary["documents"].as_array().unwrap();
    assert!(docs.len() >= 6);
    let files: Vec<&str> = docs.iter().map(|d| d["file"].as_str().unwrap()).collect();
    let mut sorted = files.clone();
    sorted.sort();
    assert_eq!(files, sorted);
}

#[test]
fn batch_with_broken_document_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(catalog("torus.json"), dir.path().join("a.json")).unwrap();
    std::fs::write(dir.path().join("b.json"), "[]").unwrap();
    let (code, out, _) = run(&["batch", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(out.contains("error:"));
}
