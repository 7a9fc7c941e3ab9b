//! End-to-end runs of the binary against the shipped fixtures, pinning the
//! output contract: verdict tokens, report schema, byte determinism and the
//! exit-code split between mathematical negatives (0), unusable input (1)
//! and violated hypotheses (2).

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crdeg"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn run_fixture(command: &str, name: &str, extra: &[&str]) -> Output {
    let path = fixture(name);
    let mut args = vec![command, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn json_report(command: &str, name: &str, extra: &[&str]) -> serde_json::Value {
    let mut args = extra.to_vec();
    args.push("--json");
    let out = run_fixture(command, name, &args);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    serde_json::from_str(&stdout(&out)).expect("report parses")
}

fn temp_problem(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().expect("temp file");
    f.write_all(contents.as_bytes()).expect("write");
    f
}

#[test]
fn degeneracy_summary_on_the_balls_embedding() {
    let out = run_fixture("degeneracy", "balls.json", &[]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("s = 1"), "{text}");
    assert!(text.contains("k0 = 1"), "{text}");
    assert!(text.contains("constant"), "{text}");
    assert!(text.contains("stabilized"), "{text}");
}

#[test]
fn degeneracy_report_carries_schema_order_and_digest() {
    let report = json_report("degeneracy", "balls.json", &[]);
    assert_eq!(report["schema"], "crdeg/1");
    assert_eq!(report["command"], "degeneracy");
    assert_eq!(report["order"], 6);
    assert_eq!(report["seed"], 0);
    assert_eq!(report["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let result = &report["result"];
    assert_eq!(result["dims"], serde_json::json!([1, 2, 2, 2]));
    assert_eq!(result["k0"], 1);
    assert_eq!(result["s"], 1);
    assert_eq!(result["stabilized"], true);
    assert_eq!(result["constant"], true);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for (command, name) in
        [("degeneracy", "blackhole_quadratic.json"), ("basic-identity", "id.json")]
    {
        let first = run_fixture(command, name, &["--json"]);
        let second = run_fixture(command, name, &["--json"]);
        assert_eq!(code(&first), 0);
        assert_eq!(first.stdout, second.stdout, "{command} report drifted between runs");
    }
}

#[test]
fn finite_type_verdict_tokens() {
    let out = run_fixture("finite-type", "leviflat.json", &[]);
    assert_eq!(code(&out), 0, "a negative verdict is not an error");
    assert!(stdout(&out).contains("NOT_FINITE_TYPE"), "{}", stdout(&out));

    let out = run_fixture("finite-type", "id.json", &[]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("FINITE_TYPE (type 2)"), "{text}");
    assert!(text.contains("witness: level 3"), "{text}");

    let report = json_report("finite-type", "leviflat.json", &[]);
    assert_eq!(report["result"]["verdict"], "NOT_FINITE_TYPE");
    assert_eq!(report["result"]["conclusive"], true);
    assert_eq!(report["result"]["generic_ranks"], serde_json::json!([1, 1]));
}

#[test]
fn segre_residuals_vanish_on_the_quadric() {
    let out = run_fixture("segre", "id.json", &[]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("all residuals vanish: yes"), "{}", stdout(&out));
    let report = json_report("segre", "id.json", &["--levels", "3"]);
    assert_eq!(report["result"]["all_zero"], true);
    assert_eq!(report["result"]["chains"].as_array().unwrap().len(), 3);
}

#[test]
fn vector_field_dimension_matches_the_invariant() {
    let report = json_report("holvf", "balls.json", &[]);
    assert_eq!(report["result"]["dim0"], 1);
    assert_eq!(report["result"]["jet_order"], 1);
}

#[test]
fn constancy_probe_confirms_the_quadratic_fixture() {
    let out = run_fixture("constancy", "blackhole_quadratic.json", &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("verdict: constant"), "{text}");
    let report = json_report("constancy", "blackhole_quadratic.json", &["--trials", "2"]);
    assert_eq!(report["result"]["all_match"], true);
    assert_eq!(report["result"]["origin"]["k0"], 2);
    assert_eq!(report["result"]["samples"].as_array().unwrap().len(), 2);
}

#[test]
fn check_reports_the_map_facts() {
    let out = run_fixture("check", "balls.json", &[]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("maps into target: yes"), "{text}");
    assert!(text.contains("transversal: yes"), "{text}");
    assert!(text.contains("levi compatibility: holds"), "{text}");
    assert!(text.contains("check: ok"), "{text}");
}

#[test]
fn equal_maps_are_determined_by_their_jets() {
    let id = fixture("id.json");
    let out = run(&["jets", id.to_str().unwrap(), id.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("determined to order"), "{text}");
    assert!(text.contains("the maps coincide"), "{text}");
}

#[test]
fn distinct_maps_show_their_first_difference() {
    let id = fixture("id.json");
    let scaling = fixture("scaling.json");
    let out = run(&["jets", id.to_str().unwrap(), scaling.to_str().unwrap(), "--json"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let result = &report["result"];
    assert_eq!(result["verdict"], "distinct");
    assert_eq!(result["first_difference"]["order"], 1);
    assert_eq!(result["first_difference"]["component"], 0);
    assert_eq!(report["inputs"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_map_is_a_schema_error() {
    let out = run_fixture("degeneracy", "leviflat.json", &[]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("map required"), "{}", stderr(&out));
}

#[test]
fn normal_form_violations_name_the_generator() {
    let f = temp_problem(
        r#"{"order": 4, "source": {"n": 1, "d": 1,
            "Q": [[{"c": "1", "e": [1, 0, 0]}, {"c": "1", "e": [0, 0, 1]}]]}}"#,
    );
    let out = run(&["segre", f.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let text = stderr(&out);
    assert!(text.contains("generator 0"), "{text}");
    assert!(text.contains("normal form"), "{text}");
}

#[test]
fn malformed_files_exit_one() {
    let garbage = temp_problem("this is not json");
    let out = run(&["check", garbage.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);

    let unknown = temp_problem(
        r#"{"order": 4, "source": {"n": 1, "d": 1,
            "Q": [[{"c": "1", "e": [0, 0, 1]}]], "extra": true}}"#,
    );
    let out = run(&["check", unknown.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown field `extra`"), "{}", stderr(&out));

    let out = run(&["degeneracy", "/nonexistent/problem.json"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn violated_hypotheses_exit_two() {
    // the embedding is (1, 1)-degenerate, so the jet solve has no full rank
    let out = run_fixture("basic-identity", "balls.json", &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("hypothesis"), "{}", stderr(&out));

    // the truncated automorphism cannot be re-centered at sampled points
    let out = run_fixture("constancy", "parabolic.json", &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn jets_refuses_mismatched_geometries() {
    let id = fixture("id.json");
    let eps = fixture("eps_embedding.json");
    let out = run(&["jets", id.to_str().unwrap(), eps.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("geometry"), "{}", stderr(&out));
}

#[test]
fn order_override_is_applied_and_reported() {
    let report = json_report("degeneracy", "balls.json", &["--order", "4"]);
    assert_eq!(report["order"], 4);
    assert_eq!(report["result"]["s"], 1);
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["frobnicate", "x.json"]);
    assert_eq!(code(&out), 1);

    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn one_degenerate_solve_on_the_normalized_embedding() {
    let out = run_fixture("basic-identity-1deg", "eps_embedding.json", &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("matches the predicted product up to sign: yes"), "{text}");

    let report = json_report("basic-identity-1deg", "eps_embedding.json", &[]);
    let result = &report["result"];
    assert_eq!(result["determinant"], serde_json::json!({"re": "-1", "im": "0"}));
    assert_eq!(result["normal_derivative"], serde_json::json!({"re": "1", "im": "0"}));
    assert_eq!(result["determinant_matches"], true);
}

#[test]
fn doubled_linear_map_reaches_the_transversal_bound() {
    let report = json_report("degeneracy", "blackhole_linear.json", &[]);
    let result = &report["result"];
    assert_eq!(result["k0"], 1);
    assert_eq!(result["s"], 2);
    assert_eq!(result["stabilized"], true);
}
