//! End-to-end runs of the `mrr` binary.

use std::path::Path;
use std::process::{Command, Output};

use mrr_cli::report::{strip_wall_time, InductionResult, Report};
use mrr_core::explorer::{ReplayReport, Trace};
use mrr_core::{CheckReport, WalkReport};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn mrr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrr"))
        .args(args)
        .env_remove("MRR_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SMALL: [&str; 8] = ["--servers", "2", "--max-term", "2", "--max-log-len", "1", "--max-config-version", "2"];

fn with_small<'a>(head: &[&'a str], tail: &[&'a str]) -> Vec<&'a str> {
    head.iter().chain(SMALL.iter()).chain(tail.iter()).copied().collect()
}

/// Parses and re-serializes, demanding identical bytes.
fn assert_round_trip<T: Serialize + DeserializeOwned>(json: &str) -> Report<T> {
    let r: Report<T> = serde_json::from_str(json).expect("report parses");
    assert_eq!(r.to_json(), json.trim_end());
    r
}

#[test]
fn invariants_lists_all_names() {
    let o = mrr(&["invariants"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 22);
    assert!(text.starts_with("TypeOK"));
    let o = mrr(&["invariants", "--json"]);
    let list: Vec<serde_json::Value> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(list.len(), 22);
}

#[test]
fn check_example_run_exits_clean() {
    let o = mrr(&[
        "check", "--servers", "3", "--max-term", "2", "--max-log-len", "1", "--max-config-version", "2",
        "--invariants", "StateMachineSafety,LeaderCompleteness",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("no violations"));
}

#[test]
fn unknown_invariant_is_a_usage_error_naming_the_token() {
    let o = mrr(&with_small(&["check", "--invariants", "StateMachineSafety,Bogus"], &[]));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Bogus"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_and_bad_bounds_are_usage_errors() {
    let o = mrr(&["check", "--frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--frobnicate"));
    let o = mrr(&["check", "--servers", "0"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
}

#[test]
fn drop_conjunct_rejects_derived_properties() {
    for name in ["StateMachineSafety", "MRRInd"] {
        let o = mrr(&["induction", "--drop-conjunct", name]);
        assert_eq!(code(&o), 2);
        assert!(stderr(&o).contains(name));
    }
}

#[test]
fn check_report_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let o = mrr(&with_small(&["check"], &["--threads", threads, "--output", path.to_str().unwrap()]));
        assert_eq!(code(&o), 0);
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap();
    let ra = assert_round_trip::<CheckReport>(&ta);
    assert_eq!(ra.result.states_visited, 203);
    assert_eq!(ra.config.threads, 1);
    // Thread count is part of the config; everything else must agree.
    let normalize = |t: &str| strip_wall_time(t).replace("\"threads\":1", "\"threads\":3").replace("a.json", "b.json");
    assert_eq!(normalize(&ta), strip_wall_time(&tb));
}

#[test]
fn json_flag_prints_the_report() {
    let o = mrr(&with_small(&["check", "--json"], &[]));
    assert_eq!(code(&o), 0);
    let r = assert_round_trip::<CheckReport>(&stdout(&o));
    assert_eq!(r.tool, "mrr");
    assert_eq!(r.config.command, "check");
}

#[test]
fn threads_default_comes_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_mrr"))
        .args(with_small(&["check", "--json"], &[]))
        .env("MRR_THREADS", "2")
        .output()
        .unwrap();
    let r: Report<CheckReport> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.config.threads, 2);
    let o = Command::new(env!("CARGO_BIN_EXE_mrr"))
        .args(with_small(&["check", "--json", "--threads", "1"], &[]))
        .env("MRR_THREADS", "2")
        .output()
        .unwrap();
    let r: Report<CheckReport> = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r.config.threads, 1);
}

#[test]
fn mutated_check_writes_a_replayable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let o = mrr(&[
        "check", "--servers", "3", "--max-term", "2", "--max-log-len", "1", "--max-config-version", "2",
        "--disable-reconfig-guards", "--stop-at-first", "--trace-out", trace.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(stdout(&o).contains("VIOLATION"));
    let o = mrr(&["replay", trace.to_str().unwrap(), "--json"]);
    assert_eq!(code(&o), 1, "replay re-finds the violation");
    let r = assert_round_trip::<ReplayReport>(&stdout(&o));
    assert_eq!(r.result.violations.len(), 1);
    assert_eq!(r.result.violations[0].step, r.result.steps);
}

fn simulate_trace(dir: &Path, seed: &str) -> std::path::PathBuf {
    let trace = dir.join(format!("walk{seed}.json"));
    let o = mrr(&["simulate", "--steps", "30", "--seed", seed, "--trace-out", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    trace
}

#[test]
fn clean_trace_replays() {
    let dir = tempfile::tempdir().unwrap();
    let trace = simulate_trace(dir.path(), "5");
    let o = mrr(&["replay", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn tampered_trace_reports_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let path = simulate_trace(dir.path(), "7");
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let steps = v["steps"].as_array().unwrap().len();
    assert!(steps >= 4);
    let term = &mut v["steps"][3]["state"]["servers"][0]["term"];
    *term = serde_json::json!(term.as_u64().unwrap() + 1);
    std::fs::write(&path, serde_json::to_string(&v).unwrap()).unwrap();
    let o = mrr(&["replay", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("step 4"), "{}", stderr(&o));
}

#[test]
fn malformed_trace_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("junk.json");
    std::fs::write(&path, "{\"version\":1,\"bogus\":true}").unwrap();
    let o = mrr(&["replay", path.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("junk.json"));
    let o = mrr(&["replay", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_is_seed_deterministic() {
    let a = mrr(&["simulate", "--steps", "200", "--seed", "11", "--json"]);
    let b = mrr(&["simulate", "--steps", "200", "--seed", "11", "--json"]);
    assert_eq!(strip_wall_time(&stdout(&a)), strip_wall_time(&stdout(&b)));
    let r = assert_round_trip::<WalkReport>(&stdout(&a));
    assert_eq!(r.config.seed, Some(11));
    let t: Trace = r.result.trace;
    assert_eq!(t.seed, Some(11));
}

#[test]
fn sampled_induction_with_dropped_conjunct_finds_ctis() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ind.json");
    let o = mrr(&[
        "induction", "--mode", "sample", "--samples", "100000", "--seed", "42",
        "--drop-conjunct", "ElectionSafety", "--output", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let r = assert_round_trip::<InductionResult>(&text);
    let c = r.result.consecution.unwrap();
    assert!(c.cti_count > 0 && !c.ctis.is_empty());
    assert_eq!(r.config.drop_conjuncts.as_deref(), Some(&[mrr_core::InvariantId::ElectionSafety][..]));
}

#[test]
fn exhaustive_induction_over_budget_exits_three() {
    let o = mrr(&with_small(&["induction", "--mode", "exhaustive", "--budget", "1000", "--json"], &[]));
    assert_eq!(code(&o), 3);
    let r = assert_round_trip::<InductionResult>(&stdout(&o));
    assert!(r.result.consecution.is_none());
    assert!(r.result.refused.is_some());
}

#[test]
fn check_budget_exhaustion_exits_three() {
    let o = mrr(&["check", "--max-states", "500"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn help_exits_zero() {
    let o = mrr(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("induction"));
}
