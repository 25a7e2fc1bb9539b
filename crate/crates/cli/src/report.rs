//! Run configuration and the report envelope.
//!
//! Every report is `{"tool","toolVersion","config","result","wallTimeMs"}`
//! with keys in that order. `wallTimeMs` is the only field allowed to differ
//! between two runs of the same configuration.

use std::path::PathBuf;

use mrr_core::explorer::TOOL_VERSION;
use mrr_core::induction::{ConsecutionReport, InitiationReport};
use mrr_core::{ActionKind, InvariantId, ModelBounds, ModelError, Mutations};
use serde::{Deserialize, Serialize};

use crate::args::{CheckArgs, InductionArgs, Mode, ReplayArgs, SimulateArgs};

/// Everything that determines a run, embedded verbatim in its report.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ModelBounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutations: Option<Mutations>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariants: Option<Vec<InvariantId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate: Option<Vec<InvariantId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goals: Option<Vec<InvariantId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop_conjuncts: Option<Vec<InvariantId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<Vec<ActionKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accepted: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ctis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u128>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_states: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_at_first: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub threads: usize,
}

fn names(list: &[InvariantId]) -> Vec<InvariantId> {
    let mut v = if list.is_empty() { InvariantId::ALL.to_vec() } else { list.to_vec() };
    v.sort();
    v.dedup();
    v
}

impl RunConfig {
    pub fn for_check(a: &CheckArgs) -> Result<Self, ModelError> {
        Ok(RunConfig {
            command: "check".into(),
            bounds: Some(a.bounds.bounds()?),
            mutations: Some(a.mutations.mutations()),
            invariants: Some(names(&a.invariants)),
            max_states: Some(a.max_states),
            stop_at_first: Some(a.stop_at_first),
            trace_out: a.trace_out.clone(),
            output: a.out.output.clone(),
            threads: a.out.threads,
            ..Default::default()
        })
    }

    pub fn for_induction(a: &InductionArgs) -> Result<Self, ModelError> {
        let sorted = |v: &[InvariantId]| {
            let mut v = v.to_vec();
            v.sort();
            v.dedup();
            v
        };
        let mut actions = a.actions.clone();
        actions.sort();
        actions.dedup();
        let sample = a.mode == Mode::Sample;
        Ok(RunConfig {
            command: "induction".into(),
            bounds: Some(a.bounds.bounds()?),
            mutations: Some(a.mutations.mutations()),
            mode: Some(if sample { "sample" } else { "exhaustive" }.into()),
            candidate: Some(sorted(&a.candidate)),
            goals: Some(sorted(&a.goals)),
            drop_conjuncts: Some(sorted(&a.drop_conjunct)),
            actions: Some(actions),
            samples: sample.then_some(a.samples),
            accepted: if sample { a.accepted } else { None },
            seed: sample.then_some(a.seed),
            max_ctis: Some(a.max_ctis),
            budget: (!sample).then_some(a.budget),
            stop_at_first: Some(a.stop_at_first),
            output: a.out.output.clone(),
            threads: a.out.threads,
            ..Default::default()
        })
    }

    pub fn for_simulate(a: &SimulateArgs) -> Result<Self, ModelError> {
        Ok(RunConfig {
            command: "simulate".into(),
            bounds: Some(a.bounds.bounds()?),
            mutations: Some(a.mutations.mutations()),
            invariants: Some(names(&a.invariants)),
            steps: Some(a.steps),
            seed: Some(a.seed),
            trace_out: a.trace_out.clone(),
            output: a.out.output.clone(),
            threads: a.out.threads,
            ..Default::default()
        })
    }

    pub fn for_replay(a: &ReplayArgs) -> Self {
        RunConfig {
            command: "replay".into(),
            invariants: Some(names(&a.invariants)),
            trace: Some(a.trace.clone()),
            output: a.out.output.clone(),
            threads: a.out.threads,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Report<T> {
    pub tool: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub result: T,
    pub wall_time_ms: u64,
}

impl<T: Serialize> Report<T> {
    pub fn new(config: RunConfig, result: T, wall_time_ms: u64) -> Self {
        Report {
            tool: "mrr".into(),
            tool_version: TOOL_VERSION.into(),
            config,
            result,
            wall_time_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

/// Removes the trailing `wallTimeMs` field from a serialized report.
pub fn strip_wall_time(json: &str) -> String {
    let trimmed = json.trim_end();
    match trimmed.rfind(",\"wallTimeMs\":") {
        Some(i) => format!("{}}}", &trimmed[..i]),
        None => trimmed.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InductionResult {
    pub initiation: InitiationReport,
    pub consecution: Option<ConsecutionReport>,
    pub refused: Option<String>,
}

impl InductionResult {
    pub fn ran(initiation: InitiationReport, consecution: ConsecutionReport) -> Self {
        InductionResult { initiation, consecution: Some(consecution), refused: None }
    }

    pub fn refused(initiation: InitiationReport, reason: String) -> Self {
        InductionResult { initiation, consecution: None, refused: Some(reason) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvariantInfo {
    pub name: InvariantId,
    pub summary: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wall_time_is_stripped() {
        let r = Report::new(RunConfig { command: "replay".into(), ..Default::default() }, 5u32, 1234);
        let text = r.to_json();
        assert!(text.ends_with(",\"wallTimeMs\":1234}"));
        assert_eq!(strip_wall_time(&text), text.replace(",\"wallTimeMs\":1234", ""));
    }

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig {
            command: "induction".into(),
            bounds: Some(ModelBounds::new(3, 3, 2, 3).unwrap()),
            mutations: Some(Mutations::without_reconfig_guards()),
            budget: Some(u128::MAX),
            drop_conjuncts: Some(vec![InvariantId::ElectionSafety]),
            threads: 4,
            ..Default::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
