//! End-to-end tests of the command-line binary: documented example
//! invocations, exit codes, output schemas, and error diagnostics.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use plaquette::rational::{parse_rat, rat, rat_int};
use plaquette::WeightStencil;

fn plaquette(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plaquette"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is utf-8")
}

fn assert_exit(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        stdout_of(output),
        stderr_of(output)
    );
}

#[test]
fn verify_reports_bf_coherent_in_two_dimensions() {
    let out = plaquette(&["verify", "--family", "bf", "--dim", "2", "--max-factor", "4"]);
    assert_exit(&out, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    assert_eq!(report["seed"], serde_json::json!(42));
    assert_eq!(report["coherence"]["pairs"].as_array().unwrap().len(), 16);
    for check in report["spot_checks"].as_array().unwrap() {
        assert_eq!(check["pass"], serde_json::Value::Bool(true));
    }
}

#[test]
fn weights_csv_lists_the_factor_three_table() {
    let out = plaquette(&["weights", "--family", "bf", "--d", "3", "--dim", "2", "--format", "csv"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i0,i1,weight"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 25);

    let mut sum = rat_int(0);
    for row in &rows {
        let weight = row.rsplit(',').next().unwrap();
        sum += parse_rat(weight).unwrap();
    }
    assert_eq!(sum, rat_int(1));
}

#[test]
fn corner_solve_returns_only_the_uniform_family() {
    let out = plaquette(&[
        "solve",
        "--convention",
        "corner",
        "--dim",
        "2",
        "--generic",
        "w2-all-nonzero",
    ]);
    assert_exit(&out, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let families = report["families"].as_array().unwrap();
    assert_eq!(families.len(), 1);
    assert_eq!(families[0]["name"], serde_json::json!("uniform-corner"));
    assert_eq!(families[0]["verified"], serde_json::Value::Bool(true));
    assert_eq!(report["exhaustive"], serde_json::Value::Bool(true));
}

#[test]
fn weights_json_round_trips_into_a_stencil() {
    let out = plaquette(&["weights", "--family", "parity", "--d", "4", "--dim", "1"]);
    assert_exit(&out, 0);
    let stencil: WeightStencil = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(stencil.factor(), 4);
    assert_eq!(stencil.dim(), 1);
    assert_eq!(stencil.weight_at(&[3]), rat(1, 4));
    assert_eq!(stencil.weight_at(&[0]), rat_int(0));
}

#[test]
fn verify_output_is_deterministic_for_a_fixed_seed() {
    let args = ["verify", "--family", "parity", "--dim", "1", "--max-factor", "3", "--seed", "7"];
    let first = plaquette(&args);
    let second = plaquette(&args);
    assert_exit(&first, 0);
    assert_eq!(stdout_of(&first), stdout_of(&second));
}

#[test]
fn tower_writes_every_level_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("tower");
    let out = plaquette(&[
        "tower",
        "--family",
        "bf",
        "--factors",
        "2,3",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--poly",
        "x^2",
        "--scale",
        "1/12",
        "--lo",
        "-24",
        "--hi",
        "24",
    ]);
    assert_exit(&out, 0);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let levels = manifest["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 3);
    assert_eq!(levels[2]["cumulative_factor"], serde_json::json!(6));
    assert_eq!(levels[2]["scale"], serde_json::json!({"num": "1", "den": "2"}));

    // x^2 sampled by the hat kernel at spacing z has cell values
    // (a*z)^2 + z^2/6; averaging must reproduce that at the top spacing
    // 1/2, where the values over cells -3..=3 are a^2/4 + 1/24.
    let top = fs::read_to_string(out_dir.join("level_2.field")).unwrap();
    let payload = top.lines().nth(1).unwrap();
    assert_eq!(payload, "55/24,25/24,7/24,1/24,7/24,25/24,55/24");

    for level in levels {
        assert!(out_dir.join(level["path"].as_str().unwrap()).exists());
    }
}

#[test]
fn apply_matches_the_first_tower_level() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("tower");
    let build = plaquette(&[
        "tower",
        "--family",
        "bf",
        "--factors",
        "2",
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--poly",
        "1/2*x + x^3",
        "--scale",
        "1/8",
        "--lo",
        "-16",
        "--hi",
        "16",
    ]);
    assert_exit(&build, 0);

    let averaged = dir.path().join("averaged.field");
    let apply = plaquette(&[
        "apply",
        "--family",
        "bf",
        "--d",
        "2",
        "--input",
        out_dir.join("level_0.field").to_str().unwrap(),
        "--output",
        averaged.to_str().unwrap(),
    ]);
    assert_exit(&apply, 0);
    assert_eq!(
        fs::read_to_string(&averaged).unwrap(),
        fs::read_to_string(out_dir.join("level_1.field")).unwrap()
    );
}

#[test]
fn lemma_enumerates_decompositions_and_checks_the_identity() {
    let enumerate = plaquette(&["lemma", "--d", "2", "--e", "3", "--offset", "4"]);
    assert_exit(&enumerate, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&enumerate)).unwrap();
    assert_eq!(report["case"], serde_json::json!("divisible"));
    assert_eq!(report["solutions"], serde_json::json!([[2, 0]]));

    let identity = plaquette(&["lemma", "--d", "5", "--e", "7"]);
    assert_exit(&identity, 0);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&identity)).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 0);
    assert_eq!(report["checked_offsets"], serde_json::json!(2 * 5 * 7 - 1));
}

#[test]
fn starved_probe_exits_with_the_failure_code() {
    let out = plaquette(&["solve", "--convention", "centered", "--dim", "3", "--budget", "1"]);
    assert_exit(&out, 1);
    let report: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(report["verdict"], serde_json::json!("inconclusive"));
}

#[test]
fn unknown_scheme_is_a_usage_error() {
    let out = plaquette(&["weights", "--family", "gaussian", "--d", "2", "--dim", "1"]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("unknown scheme 'gaussian'"));
}

#[test]
fn inadmissible_factor_is_a_usage_error() {
    let out = plaquette(&["weights", "--family", "central", "--d", "2", "--dim", "2"]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("does not admit factor 2"));
}

#[test]
fn malformed_field_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.field");
    fs::write(&bad, "not a header\n1,2,3\n").unwrap();
    let out = plaquette(&[
        "apply",
        "--family",
        "bf",
        "--d",
        "2",
        "--input",
        bad.to_str().unwrap(),
        "--output",
        dir.path().join("out.field").to_str().unwrap(),
    ]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("malformed field header"));
}

#[test]
fn real_valued_tower_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let real = dir.path().join("real.field");
    fs::write(
        &real,
        concat!(
            r#"{"dimension":1,"scale":{"num":"1","den":"4"},"scale_set":"all-reciprocals","#,
            r#""convention":"centered","lo":[-2],"hi":[2],"value_type":"real"}"#,
            "\n1.5,2.0,0.25,2.0,1.5\n"
        ),
    )
    .unwrap();
    let out = plaquette(&[
        "tower",
        "--family",
        "bf",
        "--factors",
        "2",
        "--out-dir",
        dir.path().join("t").to_str().unwrap(),
        "--input",
        real.to_str().unwrap(),
    ]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("rational field file"));
    assert!(!Path::new(&dir.path().join("t")).exists());
}

#[test]
fn budget_flag_is_limited_to_the_probe() {
    let out = plaquette(&["solve", "--convention", "corner", "--dim", "2", "--budget", "9"]);
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("--budget"));
}
