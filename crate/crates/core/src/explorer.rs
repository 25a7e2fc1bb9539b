//! Bounded explicit-state exploration.
//!
//! [`bfs_check`] runs a level-synchronous breadth-first search from the
//! initial state. Each level is expanded in fixed-size chunks; successor
//! generation, invariant checks and key encoding run on the worker pool, and
//! new states are merged into the visited set sequentially in frontier order.
//! State ids, statistics and reported traces therefore do not depend on the
//! number of threads.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::error::ModelError;
use crate::invariants::{eval_invariant, type_ok, InvariantId};
use crate::protocol::{Model, Mutations};
use crate::types::{ModelBounds, ReplicaSetState, Role};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TRACE_FORMAT_VERSION: u32 = 1;

/// Frontier states expanded per parallel batch.
const CHUNK: usize = 4096;

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

/// Injective byte encoding of a state: servers in id order, then committed
/// pairs in sorted order, every number as a LEB128 varint and every sequence
/// length-prefixed.
pub fn canonical_key(st: &ReplicaSetState) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + st.servers.len() * 10 + st.committed.len() * 2);
    put_varint(&mut out, st.servers.len() as u64);
    for n in &st.servers {
        put_varint(&mut out, n.log.len() as u64);
        for &e in &n.log {
            put_varint(&mut out, e as u64);
        }
        put_varint(&mut out, n.term as u64);
        out.push(match n.role {
            Role::Primary => 1,
            Role::Secondary => 0,
        });
        out.push(n.config.bits());
        put_varint(&mut out, n.config_version as u64);
        put_varint(&mut out, n.config_term as u64);
    }
    put_varint(&mut out, st.committed.len() as u64);
    for c in &st.committed {
        put_varint(&mut out, c.index as u64);
        put_varint(&mut out, c.term as u64);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStep {
    pub action: Action,
    pub state: ReplicaSetState,
}

/// A finite behavior: the initial state followed by action/state steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trace {
    pub version: u32,
    pub bounds: ModelBounds,
    pub mutations: Mutations,
    pub seed: Option<u64>,
    #[serde(rename = "toolVersion")]
    pub tool_version: String,
    pub init: ReplicaSetState,
    pub steps: Vec<TraceStep>,
}

impl Trace {
    pub fn new(model: &Model, seed: Option<u64>) -> Self {
        Trace {
            version: TRACE_FORMAT_VERSION,
            bounds: *model.bounds(),
            mutations: model.mutations().clone(),
            seed,
            tool_version: TOOL_VERSION.to_string(),
            init: model.initial_state(),
            steps: Vec::new(),
        }
    }

    pub fn last_state(&self) -> &ReplicaSetState {
        self.steps.last().map_or(&self.init, |s| &s.state)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Shortest trace to a state violating `invariant`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: InvariantId,
    pub depth: usize,
    pub trace: Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BfsOptions {
    pub max_states: u64,
    pub stop_at_first: bool,
    /// Worker threads; 0 uses the pool default.
    pub threads: usize,
}

impl Default for BfsOptions {
    fn default() -> Self {
        BfsOptions {
            max_states: 50_000_000,
            stop_at_first: false,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub bounds: ModelBounds,
    pub mutations: Mutations,
    pub invariants: Vec<InvariantId>,
    #[serde(rename = "statesVisited")]
    pub states_visited: u64,
    #[serde(rename = "transitionsExplored")]
    pub transitions_explored: u64,
    pub diameter: usize,
    pub deadlocks: u64,
    /// False when the state budget ran out before the reachable space did.
    pub complete: bool,
    #[serde(rename = "stoppedAtFirst")]
    pub stopped_at_first: bool,
    #[serde(rename = "violationCounts")]
    pub violation_counts: BTreeMap<InvariantId, u64>,
    pub violations: Vec<Violation>,
    pub deterministic: bool,
    #[serde(skip)]
    pub wall_time_ms: u64,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Node {
    parent: u32,
    action: Option<Action>,
}

struct Expanded {
    violated: Vec<InvariantId>,
    deadlock: bool,
    successors: Vec<(Action, ReplicaSetState, Vec<u8>)>,
    transitions: u64,
}

fn violated(st: &ReplicaSetState, bounds: &ModelBounds, invariants: &[InvariantId]) -> Vec<InvariantId> {
    invariants
        .iter()
        .copied()
        .filter(|&id| !eval_invariant(id, st, bounds))
        .collect()
}

fn build_pool(threads: usize) -> Result<rayon::ThreadPool, ModelError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ModelError::Malformed(format!("cannot start worker pool: {e}")))
}

/// Breadth-first reachability check of `invariants` from the initial state.
pub fn bfs_check(
    bounds: ModelBounds,
    mutations: Mutations,
    invariants: &[InvariantId],
    opts: BfsOptions,
) -> Result<CheckReport, ModelError> {
    bounds.validate()?;
    let started = Instant::now();
    let model = Model::with_mutations(bounds, mutations);
    let pool = build_pool(opts.threads)?;
    let mut invariants = invariants.to_vec();
    invariants.sort();
    invariants.dedup();

    let init = model.initial_state();
    let mut visited: HashMap<Box<[u8]>, u32> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    visited.insert(canonical_key(&init).into_boxed_slice(), 0);
    nodes.push(Node { parent: u32::MAX, action: None });

    let mut frontier: Vec<(u32, ReplicaSetState)> = vec![(0, init)];
    let mut depth = 0usize;
    let mut transitions = 0u64;
    let mut deadlocks = 0u64;
    let mut complete = true;
    let mut counts: BTreeMap<InvariantId, u64> = BTreeMap::new();
    // First violating state per invariant: (depth, key, id).
    let mut first: BTreeMap<InvariantId, (usize, Vec<u8>, u32)> = BTreeMap::new();
    let mut stop = false;

    while !frontier.is_empty() {
        let mut next: Vec<(u32, ReplicaSetState)> = Vec::new();
        let mut budget_hit = !complete;
        for chunk in frontier.chunks(CHUNK) {
            let expand = !budget_hit;
            let results: Vec<Expanded> = pool.install(|| {
                chunk
                    .par_iter()
                    .map(|(_, st)| {
                        let violated = violated(st, &bounds, &invariants);
                        let mut successors = Vec::new();
                        let mut transitions = 0;
                        let mut deadlock = false;
                        if expand {
                            let mut raw = Vec::new();
                            model.successors_into(st, &mut raw);
                            transitions = raw.len() as u64;
                            deadlock = raw.is_empty();
                            for (a, s) in raw {
                                let key = canonical_key(&s);
                                if !visited.contains_key(key.as_slice()) {
                                    successors.push((a, s, key));
                                }
                            }
                        }
                        Expanded { violated, deadlock, successors, transitions }
                    })
                    .collect()
            });
            for ((id, st), ex) in chunk.iter().zip(results) {
                transitions += ex.transitions;
                deadlocks += ex.deadlock as u64;
                if !ex.violated.is_empty() {
                    let key = canonical_key(st);
                    for inv in ex.violated {
                        *counts.entry(inv).or_default() += 1;
                        let candidate = (depth, key.clone(), *id);
                        first
                            .entry(inv)
                            .and_modify(|cur| {
                                if (candidate.0, &candidate.1) < (cur.0, &cur.1) {
                                    *cur = candidate.clone();
                                }
                            })
                            .or_insert(candidate);
                    }
                }
                for (action, succ, key) in ex.successors {
                    if budget_hit {
                        break;
                    }
                    if visited.contains_key(key.as_slice()) {
                        continue;
                    }
                    if visited.len() as u64 >= opts.max_states {
                        budget_hit = true;
                        complete = false;
                        break;
                    }
                    let new_id = nodes.len() as u32;
                    visited.insert(key.into_boxed_slice(), new_id);
                    nodes.push(Node { parent: *id, action: Some(action) });
                    next.push((new_id, succ));
                }
            }
        }
        if opts.stop_at_first && !first.is_empty() {
            stop = true;
            break;
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
        depth += 1;
    }

    let diameter = depth;
    let violations = first
        .into_iter()
        .map(|(invariant, (depth, _, id))| {
            let trace = reconstruct(&model, &nodes, id);
            Violation { invariant, depth, trace }
        })
        .collect();

    Ok(CheckReport {
        bounds,
        mutations: model.mutations().clone(),
        invariants,
        states_visited: visited.len() as u64,
        transitions_explored: transitions,
        diameter,
        deadlocks,
        complete,
        stopped_at_first: stop,
        violation_counts: counts,
        violations,
        deterministic: true,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

/// Rebuilds the trace to node `id` by replaying the recorded actions.
fn reconstruct(model: &Model, nodes: &[Node], id: u32) -> Trace {
    let mut actions = Vec::new();
    let mut cur = id;
    while let Some(action) = nodes[cur as usize].action {
        actions.push(action);
        cur = nodes[cur as usize].parent;
    }
    actions.reverse();
    let mut trace = Trace::new(model, None);
    let mut st = trace.init.clone();
    for action in actions {
        st = model
            .apply(&st, &action)
            .expect("recorded BFS actions are enabled in their predecessor");
        trace.steps.push(TraceStep { action, state: st.clone() });
    }
    trace
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkOutcome {
    Violation,
    Deadlock,
    StepBudget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkReport {
    pub bounds: ModelBounds,
    pub mutations: Mutations,
    pub invariants: Vec<InvariantId>,
    pub seed: u64,
    #[serde(rename = "stepsRequested")]
    pub steps_requested: u64,
    #[serde(rename = "stepsTaken")]
    pub steps_taken: u64,
    pub outcome: WalkOutcome,
    pub violated: Vec<InvariantId>,
    pub trace: Trace,
    pub deterministic: bool,
    #[serde(skip)]
    pub wall_time_ms: u64,
}

/// Seeded random walk from the initial state, choosing uniformly among the
/// enabled transitions and checking `invariants` after every step.
pub fn random_walk(
    bounds: ModelBounds,
    mutations: Mutations,
    steps: u64,
    seed: u64,
    invariants: &[InvariantId],
) -> Result<WalkReport, ModelError> {
    bounds.validate()?;
    let started = Instant::now();
    let model = Model::with_mutations(bounds, mutations);
    let mut invariants = invariants.to_vec();
    invariants.sort();
    invariants.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = Trace::new(&model, Some(seed));
    let mut st = trace.init.clone();
    let mut bad = violated(&st, &bounds, &invariants);
    let mut outcome = WalkOutcome::StepBudget;
    let mut taken = 0;
    let mut succs = Vec::new();
    if !bad.is_empty() {
        outcome = WalkOutcome::Violation;
    } else {
        while taken < steps {
            succs.clear();
            model.successors_into(&st, &mut succs);
            if succs.is_empty() {
                outcome = WalkOutcome::Deadlock;
                break;
            }
            let pick = rng.gen_range(0..succs.len() as u64) as usize;
            let (action, next) = succs.swap_remove(pick);
            st = next;
            trace.steps.push(TraceStep { action, state: st.clone() });
            taken += 1;
            bad = violated(&st, &bounds, &invariants);
            if !bad.is_empty() {
                outcome = WalkOutcome::Violation;
                break;
            }
        }
    }
    Ok(WalkReport {
        bounds,
        mutations: model.mutations().clone(),
        invariants,
        seed,
        steps_requested: steps,
        steps_taken: taken,
        outcome,
        violated: bad,
        trace,
        deterministic: true,
        wall_time_ms: started.elapsed().as_millis() as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepViolations {
    pub step: usize,
    pub violated: Vec<InvariantId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub steps: usize,
    /// Steps (0 = initial state) at which some checked invariant fails.
    pub violations: Vec<StepViolations>,
}

/// Re-validates a trace step by step and evaluates `invariants` on every
/// state. Structural problems are reported as [`ModelError::Replay`] with the
/// offending step (0 for the initial state).
pub fn replay(trace: &Trace, invariants: &[InvariantId]) -> Result<ReplayReport, ModelError> {
    let fail = |step: usize, reason: String| ModelError::Replay { step, reason };
    if trace.version != TRACE_FORMAT_VERSION {
        return Err(fail(0, format!("unsupported trace version {}", trace.version)));
    }
    let model = Model::with_mutations(trace.bounds, trace.mutations.clone());
    if trace.init != model.initial_state() {
        return Err(fail(0, "initial state does not match the model's initial state".into()));
    }
    let mut report = ReplayReport { steps: trace.steps.len(), violations: Vec::new() };
    let mut check = |step: usize, st: &ReplicaSetState| {
        let bad = violated(st, &trace.bounds, invariants);
        if !bad.is_empty() {
            report.violations.push(StepViolations { step, violated: bad });
        }
    };
    check(0, &trace.init);
    let mut prev = &trace.init;
    for (i, step) in trace.steps.iter().enumerate() {
        let n = i + 1;
        let next = model
            .apply_bounded(prev, &step.action)
            .map_err(|e| fail(n, e.to_string()))?;
        if next != step.state {
            return Err(fail(
                n,
                format!("recorded state differs from the result of {}", step.action),
            ));
        }
        if !type_ok(&step.state, &trace.bounds) {
            return Err(fail(n, "state is outside the trace bounds".into()));
        }
        check(n, &step.state);
        prev = &step.state;
    }
    Ok(report)
}
