//! End-to-end runs of the compiled binary: every subcommand except the
//! long-running `suite`, plus the determinism guarantee (identical inputs
//! give byte-identical stdout and artifacts) and the error paths for
//! invalid scenario files.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_screenlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is utf-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is utf-8")
}

/// Write a fixture file into a per-process temp directory and return its path.
fn write_file(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("screenlab-cli-tests-{}", std::process::id()));
    fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join(name);
    fs::write(&path, content).expect("fixture written");
    path
}

fn out_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join(format!("screenlab-cli-tests-{}", std::process::id()))
        .join(name);
    fs::create_dir_all(&dir).expect("out dir");
    dir
}

const TWO_TYPE_UNIFORM: &str = r#"{
  "name": "two-type-uniform",
  "gamma": 10,
  "m": 2,
  "b": 8,
  "value_function": { "quadratic": { "a": "4", "c": "1/4" } },
  "theta_p": { "min_index": 1, "max_index": 2 },
  "belief": { "message": { "min_index": 1, "max_index": 2 }, "probs": ["1/2", "1/2"] }
}"#;

const TWO_TYPE_HIGH: &str = r#"{
  "name": "two-type-high",
  "gamma": 6,
  "m": 2,
  "b": 4,
  "value_function": { "quadratic": { "a": "3", "c": "1/4" } },
  "theta_p": { "min_index": 1, "max_index": 1 }
}"#;

#[test]
fn reproduce_example_one_matches_recorded_numbers() {
    let output = run(&["reproduce", "example1"]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("check: band menu is (98, 376), (95, 373), (93, 369), (90, 360): ok"));
    assert!(text.contains("13949/50 (= 278.98)"));
    assert!(text.contains("6948/25 (= 277.92)"));
    assert!(text.contains("check: the known band survives level 3 for the lowest type: ok"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn reproduce_three_type_targets_report_their_verdicts() {
    let high = run(&["reproduce", "three-type-high"]);
    assert!(high.status.success(), "stderr: {}", stderr(&high));
    let text = stdout(&high);
    assert!(text.contains("verdict: full disclosure"));
    assert!(text.contains("HOLDS"));

    let low = run(&["reproduce", "three-type-low"]);
    assert!(low.status.success(), "stderr: {}", stderr(&low));
    let text = stdout(&low);
    assert!(text.contains("verdict: universal withholding"));
    assert!(text.contains("HOLDS"));
    assert!(text.contains(
        "bunching: the below-band type picks (7, 17), the line designed for type 2: yes"
    ));
}

#[test]
fn identical_runs_are_byte_identical() {
    let first = run(&["reproduce", "example1"]);
    let second = run(&["reproduce", "example1"]);
    assert_eq!(first.stdout, second.stdout);

    let scenario = write_file("determinism.json", TWO_TYPE_HIGH);
    let dir = out_dir("determinism-out");
    let args = [
        "rationalize",
        "--scenario",
        scenario.to_str().unwrap(),
        "--weights",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ];
    let first = run(&args);
    assert!(first.status.success(), "stderr: {}", stderr(&first));
    let trace_first = fs::read(dir.join("trace.txt")).expect("trace written");
    let second = run(&args);
    let trace_second = fs::read(dir.join("trace.txt")).expect("trace written");
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(trace_first, trace_second);
}

#[test]
fn solve_menu_prices_the_two_type_fixture() {
    let scenario = write_file("two-type-uniform.json", TWO_TYPE_UNIFORM);
    let dir = out_dir("menu-out");
    let output = run(&[
        "solve-menu",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("13/5 (= 2.6)"));
    assert!(text.contains("selection: unique optimum"));
    assert!(text.contains("expected principal payoff (ties against the principal): 5"));

    let csv = fs::read_to_string(dir.join("menu.csv")).expect("menu.csv written");
    assert!(csv.starts_with("# screenlab "));
    assert!(csv.contains("# seed: none (deterministic command)"));
    assert!(csv.contains("1,9/10,0.9,1,1,6,6,8,13/5,2.6"));
    assert!(csv.contains("2,19/10,1.9,3,3,2,2,4,1/5,0.2"));
}

#[test]
fn single_type_scenario_gets_one_first_best_row() {
    let scenario = write_file(
        "single-type.json",
        r#"{
  "name": "single-type",
  "gamma": 3,
  "m": 1,
  "b": 2,
  "value_function": { "quadratic": { "a": "2", "c": "1/4" } },
  "theta_p": { "min_index": 1, "max_index": 1 },
  "belief": { "message": { "min_index": 1, "max_index": 1 }, "probs": ["1"] }
}"#,
    );
    let dir = out_dir("single-out");
    let output = run(&[
        "solve-menu",
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let csv = fs::read_to_string(dir.join("menu.csv")).expect("menu.csv written");
    let data_rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("type,") && !l.is_empty())
        .collect();
    assert_eq!(data_rows, vec!["1,2/3,,1,1,2,2,2,2/3,"]);
}

#[test]
fn invalid_value_function_is_rejected_by_property_number() {
    let scenario = write_file(
        "convex.json",
        r#"{
  "name": "convex",
  "gamma": 10,
  "m": 2,
  "b": 8,
  "value_function": { "quadratic": { "a": "0", "c": "-1" } },
  "theta_p": { "min_index": 1, "max_index": 2 }
}"#,
    );
    let output = run(&["solve-menu", "--scenario", scenario.to_str().unwrap()]);
    assert!(!output.status.success());
    let text = stderr(&output);
    assert!(text.contains("property 3"), "stderr: {text}");
    assert!(text.contains("FAIL"), "stderr: {text}");
}

#[test]
fn solve_menu_without_belief_is_an_error() {
    let scenario = write_file("no-belief.json", TWO_TYPE_HIGH);
    let output = run(&["solve-menu", "--scenario", scenario.to_str().unwrap()]);
    assert!(!output.status.success());
    assert!(stderr(&output).contains("no `belief` entry"));
}

#[test]
fn oracle_check_batch_and_self_test_pass() {
    let batch = run(&["oracle-check", "--count", "3", "--seed", "5"]);
    assert!(batch.status.success(), "stderr: {}", stderr(&batch));
    let text = stdout(&batch);
    assert!(text.contains("seed: 5"));
    assert!(text.contains("PASS oracle-equivalence (3 cases)"));

    let self_test = run(&["oracle-check", "--self-test"]);
    assert!(self_test.status.success(), "stderr: {}", stderr(&self_test));
    let text = stdout(&self_test);
    assert!(text.contains("closed form: (6, 8), (2, 4) guaranteeing 5"));
    assert!(text.contains("fault detected: yes"));
}

#[test]
fn rationalize_reports_full_disclosure_for_a_high_side_scenario() {
    let scenario = write_file("rationalize-high.json", TWO_TYPE_HIGH);
    let output = run(&[
        "rationalize",
        "--scenario",
        scenario.to_str().unwrap(),
        "--weights",
        "2",
        "--levels",
        "8",
    ]);
    assert!(output.status.success(), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("fixed point at level"));
    assert!(text.contains("verdict: full disclosure"));
    assert!(text.contains("HOLDS"));
}
