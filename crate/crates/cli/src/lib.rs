//! Front end for the `mrr` binary: argument handling, run configuration,
//! report envelopes and exit codes.
//!
//! Exit codes: 0 completed cleanly, 1 violation or CTI found, 2 usage or
//! input error, 3 budget exhausted before the run could finish.

pub mod args;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use mrr_core::codec::{from_json, to_json};
use mrr_core::explorer::{bfs_check, random_walk, replay, BfsOptions, Trace, WalkOutcome};
use mrr_core::induction::{
    check_consecution_exhaustive, check_consecution_sampled, check_initiation, ExhaustiveOptions,
    InductionMode, Query, SampleOptions,
};
use mrr_core::invariants::ConjunctSet;
use mrr_core::{ActionKind, InvariantId, ModelError};
use serde::Serialize;

use args::{Cli, Command, Mode, OutputArgs};
pub use report::{Report, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FOUND: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Outcome of a command before it is printed.
struct Outcome<T> {
    code: i32,
    summary: String,
    report: Report<T>,
}

#[derive(Debug)]
struct Failure(String);

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure(e.to_string())
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Invariants(a) => {
            if a.json {
                let list: Vec<report::InvariantInfo> = InvariantId::ALL
                    .into_iter()
                    .map(|id| report::InvariantInfo { name: id, summary: id.summary().to_string() })
                    .collect();
                write_out(out, &(serde_json::to_string(&list).expect("serializable") + "\n"))?;
            } else {
                let width = InvariantId::ALL.iter().map(|i| i.name().len()).max().unwrap_or(0);
                let mut text = String::new();
                for id in InvariantId::ALL {
                    text.push_str(&format!("{:width$}  {}\n", id.name(), id.summary()));
                }
                write_out(out, &text)?;
            }
            Ok(EXIT_OK)
        }
        Command::Check(a) => {
            let cfg = RunConfig::for_check(&a)?;
            let o = cmd_check(&a, cfg)?;
            emit(o, &a.out, out)
        }
        Command::Induction(a) => {
            let cfg = RunConfig::for_induction(&a)?;
            let o = cmd_induction(&a, cfg)?;
            emit(o, &a.out, out)
        }
        Command::Simulate(a) => {
            let cfg = RunConfig::for_simulate(&a)?;
            let o = cmd_simulate(&a, cfg)?;
            emit(o, &a.out, out)
        }
        Command::Replay(a) => {
            let cfg = RunConfig::for_replay(&a);
            let o = cmd_replay(&a, cfg)?;
            emit(o, &a.out, out)
        }
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure(format!("cannot write output: {e}")))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn emit<T: Serialize>(o: Outcome<T>, opts: &OutputArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let json = o.report.to_json() + "\n";
    if let Some(path) = &opts.output {
        write_file(path, &json)?;
    }
    if opts.json {
        write_out(out, &json)?;
    } else {
        write_out(out, &o.summary)?;
    }
    Ok(o.code)
}

fn selected(list: &[InvariantId]) -> Vec<InvariantId> {
    if list.is_empty() {
        InvariantId::ALL.to_vec()
    } else {
        let mut v = list.to_vec();
        v.sort();
        v.dedup();
        v
    }
}

fn cmd_check(a: &args::CheckArgs, cfg: RunConfig) -> Result<Outcome<mrr_core::CheckReport>, Failure> {
    let bounds = a.bounds.bounds()?;
    let started = Instant::now();
    let r = bfs_check(
        bounds,
        a.mutations.mutations(),
        &selected(&a.invariants),
        BfsOptions { max_states: a.max_states, stop_at_first: a.stop_at_first, threads: a.out.threads },
    )?;
    let shallowest = r.violations.iter().min_by_key(|v| (v.depth, v.invariant));
    if let (Some(path), Some(v)) = (&a.trace_out, shallowest) {
        write_file(path, &(to_json(&v.trace) + "\n"))?;
    }
    let mut summary = format!(
        "{bounds}\nstates {} transitions {} diameter {} deadlocks {}{}\n",
        r.states_visited,
        r.transitions_explored,
        r.diameter,
        r.deadlocks,
        if r.complete { "" } else { " (state budget exhausted)" }
    );
    if r.ok() {
        summary.push_str("no violations\n");
    }
    for v in &r.violations {
        summary.push_str(&format!(
            "VIOLATION {} at depth {} ({} states)\n",
            v.invariant,
            v.depth,
            r.violation_counts.get(&v.invariant).copied().unwrap_or(0)
        ));
    }
    if let Some(v) = shallowest {
        summary.push_str(&format!("shallowest trace ({}):\n  init {}\n", v.invariant, v.trace.init));
        for s in &v.trace.steps {
            summary.push_str(&format!("  {} -> {}\n", s.action, s.state));
        }
    }
    let code = if !r.ok() {
        EXIT_FOUND
    } else if !r.complete {
        EXIT_BUDGET
    } else {
        EXIT_OK
    };
    let wall = started.elapsed().as_millis() as u64;
    Ok(Outcome { code, summary, report: Report::new(cfg, r, wall) })
}

/// Candidate, goal and action sets of an induction run.
fn induction_query(a: &args::InductionArgs) -> Result<Query, Failure> {
    let set = |names: &[InvariantId], what: &str| -> Result<Option<ConjunctSet>, Failure> {
        if names.is_empty() {
            return Ok(None);
        }
        for &n in names {
            if n.conjunct_index().is_none() && n != InvariantId::MrrInd {
                return Err(Failure(format!("{what}: `{n}` is not one of the twenty conjuncts")));
            }
        }
        Ok(Some(names.iter().copied().collect()))
    };
    let mut candidate = set(&a.candidate, "--candidate")?.unwrap_or(ConjunctSet::ALL);
    let mut goals = set(&a.goals, "--goals")?.unwrap_or(candidate);
    if let Some(&n) = a.drop_conjunct.iter().find(|n| n.conjunct_index().is_none()) {
        return Err(Failure(format!("--drop-conjunct: `{n}` is not one of the twenty conjuncts")));
    }
    for &d in &a.drop_conjunct {
        candidate = candidate.without(d);
        goals = goals.without(d);
    }
    let actions = if a.actions.is_empty() { ActionKind::ALL.to_vec() } else { a.actions.clone() };
    Ok(Query { candidate, goals, actions })
}

fn cmd_induction(a: &args::InductionArgs, cfg: RunConfig) -> Result<Outcome<report::InductionResult>, Failure> {
    let bounds = a.bounds.bounds()?;
    let query = induction_query(a)?;
    let started = Instant::now();
    let initiation = check_initiation(bounds)?;
    let consecution = match a.mode {
        Mode::Sample => check_consecution_sampled(
            bounds,
            a.mutations.mutations(),
            &query,
            SampleOptions {
                samples: a.samples,
                accepted_target: a.accepted,
                seed: a.seed,
                max_ctis: a.max_ctis,
                stop_at_first: a.stop_at_first,
                threads: a.out.threads,
            },
        ),
        Mode::Exhaustive => check_consecution_exhaustive(
            bounds,
            a.mutations.mutations(),
            &query,
            ExhaustiveOptions {
                budget: a.budget,
                max_ctis: a.max_ctis,
                stop_at_first: a.stop_at_first,
                threads: a.out.threads,
            },
        ),
    };
    let c = match consecution {
        Ok(c) => c,
        Err(e @ ModelError::BudgetExceeded { .. }) => {
            let summary = format!("{bounds}\nrefused: {e}\n");
            let report = Report::new(cfg, report::InductionResult::refused(initiation, e.to_string()), 0);
            return Ok(Outcome { code: EXIT_BUDGET, summary, report });
        }
        Err(e) => return Err(e.into()),
    };
    let mut summary = format!("{bounds}\n");
    let failed_init: Vec<String> = initiation
        .results
        .iter()
        .filter(|r| !r.holds)
        .map(|r| r.conjunct.to_string())
        .collect();
    if failed_init.is_empty() {
        summary.push_str("initiation: all 20 conjuncts hold\n");
    } else {
        summary.push_str(&format!("initiation FAILED: {}\n", failed_init.join(", ")));
    }
    let mode = match c.mode {
        InductionMode::Sample => "sampled",
        InductionMode::Exhaustive => "exhaustive",
    };
    summary.push_str(&format!(
        "consecution ({mode}): examined {} accepted {} discarded {} ({} ppm accepted), transitions {}\n",
        c.examined, c.accepted, c.discarded, c.acceptance_ppm, c.transitions_checked
    ));
    summary.push_str(&c.matrix.render_text());
    summary.push_str(&format!("CTIs {}{}\n", c.cti_count, if c.truncated { " (stopped early)" } else { "" }));
    if let Some(cti) = c.ctis.first() {
        summary.push_str(&format!(
            "first CTI: {} breaks {}\n  pre  {}\n  post {}\n",
            cti.action, cti.violated, cti.pre_state, cti.post_state
        ));
    }
    let code = if c.cti_count > 0 || !initiation.ok { EXIT_FOUND } else { EXIT_OK };
    let wall = started.elapsed().as_millis() as u64;
    Ok(Outcome { code, summary, report: Report::new(cfg, report::InductionResult::ran(initiation, c), wall) })
}

fn cmd_simulate(a: &args::SimulateArgs, cfg: RunConfig) -> Result<Outcome<mrr_core::WalkReport>, Failure> {
    let bounds = a.bounds.bounds()?;
    let started = Instant::now();
    let r = random_walk(bounds, a.mutations.mutations(), a.steps, a.seed, &selected(&a.invariants))?;
    if let Some(path) = &a.trace_out {
        write_file(path, &(to_json(&r.trace) + "\n"))?;
    }
    let outcome = match r.outcome {
        WalkOutcome::Violation => format!(
            "violation of {}",
            r.violated.iter().map(|i| i.name()).collect::<Vec<_>>().join(", ")
        ),
        WalkOutcome::Deadlock => "deadlock (no enabled action)".to_string(),
        WalkOutcome::StepBudget => "step budget reached".to_string(),
    };
    let summary = format!("{bounds}\nseed {} steps {}: {outcome}\n", a.seed, r.steps_taken);
    let code = if r.outcome == WalkOutcome::Violation { EXIT_FOUND } else { EXIT_OK };
    let wall = started.elapsed().as_millis() as u64;
    Ok(Outcome { code, summary, report: Report::new(cfg, r, wall) })
}

fn cmd_replay(a: &args::ReplayArgs, cfg: RunConfig) -> Result<Outcome<mrr_core::explorer::ReplayReport>, Failure> {
    let text = fs::read_to_string(&a.trace)
        .map_err(|e| Failure(format!("cannot read {}: {e}", a.trace.display())))?;
    let trace: Trace = from_json(&text).map_err(|e| Failure(format!("{}: {e}", a.trace.display())))?;
    let started = Instant::now();
    let r = replay(&trace, &selected(&a.invariants))?;
    let mut summary = format!("{} steps replayed\n", r.steps);
    for v in &r.violations {
        let names: Vec<&str> = v.violated.iter().map(|i| i.name()).collect();
        summary.push_str(&format!("step {}: {}\n", v.step, names.join(", ")));
    }
    let code = if r.violations.is_empty() { EXIT_OK } else { EXIT_FOUND };
    let wall = started.elapsed().as_millis() as u64;
    Ok(Outcome { code, summary, report: Report::new(cfg, r, wall) })
}
