//! Counterexample-to-induction search.
//!
//! A consecution query fixes a *candidate* conjunct set (assumed in the
//! pre-state), a *goal* set (checked in the post-state) and a set of action
//! kinds. A transition pre -> post is a CTI for goal `g` when pre satisfies
//! candidate and `g`, and post violates `g`. With candidate = goals = all
//! twenty conjuncts this is plain consecution of the full invariant.
//!
//! Results are aggregated into an 8 x 20 [`GoalMatrix`] (action kind by
//! conjunct). Sampling derives one generator per sample index from the run
//! seed, so the thread count never changes what is drawn.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::action::{Action, ActionKind};
use crate::error::ModelError;
use crate::invariants::{eval_invariant, holds_all, ConjunctSet, InvariantId};
use crate::protocol::{Model, Mutations};
use crate::quorum::some_quorum_within;
use crate::types::{
    CommitRecord, ModelBounds, ReplicaSetState, Role, ServerId, ServerSet, ServerState, Term,
};

/// Which transitions and conjuncts a consecution run examines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub candidate: ConjunctSet,
    pub goals: ConjunctSet,
    pub actions: Vec<ActionKind>,
}

impl Query {
    /// Consecution of the full invariant over every action.
    pub fn full() -> Self {
        Query {
            candidate: ConjunctSet::ALL,
            goals: ConjunctSet::ALL,
            actions: ActionKind::ALL.to_vec(),
        }
    }

    fn wants(&self, kind: ActionKind) -> bool {
        self.actions.contains(&kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoalCell {
    pub checked: u64,
    pub ctis: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    #[serde(rename = "pass")]
    Pass,
    #[serde(rename = "cti-found")]
    CtiFound,
    #[serde(rename = "not-exercised")]
    NotExercised,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Pass => "pass",
            CellStatus::CtiFound => "cti-found",
            CellStatus::NotExercised => "not-exercised",
        }
    }
}

/// Per-(action kind, conjunct) counts of checked transitions and CTIs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GoalMatrix {
    cells: [[GoalCell; 20]; 8],
}

impl GoalMatrix {
    pub const ROWS: usize = 8;
    pub const COLS: usize = 20;

    pub fn new() -> Self {
        Self::default()
    }

    fn coords(kind: ActionKind, goal: InvariantId) -> (usize, usize) {
        let col = goal
            .conjunct_index()
            .unwrap_or_else(|| panic!("{goal} is not a conjunct"));
        (kind.position(), col)
    }

    pub fn cell(&self, kind: ActionKind, goal: InvariantId) -> GoalCell {
        let (r, c) = Self::coords(kind, goal);
        self.cells[r][c]
    }

    pub fn record(&mut self, kind: ActionKind, goal: InvariantId, cti: bool) {
        let (r, c) = Self::coords(kind, goal);
        let cell = &mut self.cells[r][c];
        cell.checked += 1;
        cell.ctis += cti as u64;
    }

    pub fn merge(&mut self, other: &GoalMatrix) {
        for (row, orow) in self.cells.iter_mut().zip(&other.cells) {
            for (cell, o) in row.iter_mut().zip(orow) {
                cell.checked += o.checked;
                cell.ctis += o.ctis;
            }
        }
    }

    pub fn status(&self, kind: ActionKind, goal: InvariantId) -> CellStatus {
        let cell = self.cell(kind, goal);
        if cell.ctis > 0 {
            CellStatus::CtiFound
        } else if cell.checked > 0 {
            CellStatus::Pass
        } else {
            CellStatus::NotExercised
        }
    }

    pub fn count(&self, status: CellStatus) -> usize {
        self.goals().filter(|&(k, g)| self.status(k, g) == status).count()
    }

    pub fn total_ctis(&self) -> u64 {
        self.cells.iter().flatten().map(|c| c.ctis).sum()
    }

    /// Goals with at least one CTI, in row-major order.
    pub fn cti_goals(&self) -> Vec<(ActionKind, InvariantId)> {
        self.goals()
            .filter(|&(k, g)| self.status(k, g) == CellStatus::CtiFound)
            .collect()
    }

    fn goals(&self) -> impl Iterator<Item = (ActionKind, InvariantId)> {
        ActionKind::ALL
            .into_iter()
            .flat_map(|k| InvariantId::CONJUNCTS.into_iter().map(move |g| (k, g)))
    }

    /// Fixed-width text table; columns are conjunct numbers with a legend.
    pub fn render_text(&self) -> String {
        let width = ActionKind::ALL.iter().map(|k| k.name().len()).max().unwrap_or(0);
        let mut out = String::new();
        let _ = write!(out, "{:width$}", "");
        for i in 1..=Self::COLS {
            let _ = write!(out, " {i:>4}");
        }
        out.push('\n');
        for kind in ActionKind::ALL {
            let _ = write!(out, "{:width$}", kind.name());
            for goal in InvariantId::CONJUNCTS {
                let mark = match self.status(kind, goal) {
                    CellStatus::Pass => "ok",
                    CellStatus::CtiFound => "CTI",
                    CellStatus::NotExercised => "-",
                };
                let _ = write!(out, " {mark:>4}");
            }
            out.push('\n');
        }
        for (i, goal) in InvariantId::CONJUNCTS.into_iter().enumerate() {
            let _ = writeln!(out, "{:>4} {}", i + 1, goal.name());
        }
        let _ = writeln!(
            out,
            "pass {} / cti-found {} / not-exercised {}",
            self.count(CellStatus::Pass),
            self.count(CellStatus::CtiFound),
            self.count(CellStatus::NotExercised)
        );
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellWire {
    action: ActionKind,
    conjunct: InvariantId,
    status: CellStatus,
    checked: u64,
    ctis: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixWire {
    rows: Vec<ActionKind>,
    cols: Vec<InvariantId>,
    cells: Vec<Vec<CellWire>>,
}

impl Serialize for GoalMatrix {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let cells = ActionKind::ALL
            .into_iter()
            .map(|k| {
                InvariantId::CONJUNCTS
                    .into_iter()
                    .map(|g| {
                        let c = self.cell(k, g);
                        CellWire {
                            action: k,
                            conjunct: g,
                            status: self.status(k, g),
                            checked: c.checked,
                            ctis: c.ctis,
                        }
                    })
                    .collect()
            })
            .collect();
        MatrixWire {
            rows: ActionKind::ALL.to_vec(),
            cols: InvariantId::CONJUNCTS.to_vec(),
            cells,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for GoalMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let w = MatrixWire::deserialize(de)?;
        if w.rows != ActionKind::ALL || w.cols != InvariantId::CONJUNCTS {
            return Err(D::Error::custom("goal matrix rows or columns out of order"));
        }
        let mut m = GoalMatrix::new();
        if w.cells.len() != Self::ROWS {
            return Err(D::Error::custom("goal matrix must have 8 rows"));
        }
        for (r, row) in w.cells.iter().enumerate() {
            if row.len() != Self::COLS {
                return Err(D::Error::custom("goal matrix rows must have 20 cells"));
            }
            for (c, cell) in row.iter().enumerate() {
                let (kind, goal) = (ActionKind::ALL[r], InvariantId::CONJUNCTS[c]);
                if cell.action != kind || cell.conjunct != goal || cell.ctis > cell.checked {
                    return Err(D::Error::custom(format!("inconsistent cell ({kind}, {goal})")));
                }
                m.cells[r][c] = GoalCell { checked: cell.checked, ctis: cell.ctis };
                if m.status(kind, goal) != cell.status {
                    return Err(D::Error::custom(format!("status of ({kind}, {goal}) disagrees with counts")));
                }
            }
        }
        Ok(m)
    }
}

/// A transition from a candidate-satisfying state that breaks a goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CtiRecord {
    #[serde(rename = "preState")]
    pub pre_state: ReplicaSetState,
    pub action: Action,
    #[serde(rename = "postState")]
    pub post_state: ReplicaSetState,
    pub violated: InvariantId,
    pub goal: (ActionKind, InvariantId),
}

impl CtiRecord {
    /// Re-derives the record from scratch: the candidate and the goal hold
    /// before, the action is enabled and produces the recorded post-state,
    /// and the goal fails after.
    pub fn revalidate(&self, model: &Model, candidate: ConjunctSet) -> Result<(), String> {
        let b = model.bounds();
        if !holds_all(candidate.with(self.violated), &self.pre_state, b) {
            return Err("pre-state does not satisfy the candidate".into());
        }
        let post = model
            .apply_bounded(&self.pre_state, &self.action)
            .map_err(|e| e.to_string())?;
        if post != self.post_state {
            return Err("post-state differs from the action's effect".into());
        }
        if eval_invariant(self.violated, &post, b) {
            return Err(format!("{} holds in the post-state", self.violated));
        }
        if self.goal != (self.action.kind(), self.violated) {
            return Err("goal does not match action and conjunct".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConjunctResult {
    pub conjunct: InvariantId,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitiationReport {
    pub bounds: ModelBounds,
    pub results: Vec<ConjunctResult>,
    pub ok: bool,
}

/// Evaluates every conjunct on the initial state.
pub fn check_initiation(bounds: ModelBounds) -> Result<InitiationReport, ModelError> {
    bounds.validate()?;
    let init = crate::protocol::initial_state(&bounds);
    let results: Vec<ConjunctResult> = InvariantId::CONJUNCTS
        .into_iter()
        .map(|c| ConjunctResult { conjunct: c, holds: eval_invariant(c, &init, &bounds) })
        .collect();
    let ok = results.iter().all(|r| r.holds);
    Ok(InitiationReport { bounds, results, ok })
}

fn mix(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the pair
    let mut z = seed ^ index.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn below(rng: &mut ChaCha8Rng, n: u32) -> u32 {
    rng.gen_range(0..n as u64) as u32
}

fn chance(rng: &mut ChaCha8Rng, percent: u32) -> bool {
    below(rng, 100) < percent
}

fn random_subset(rng: &mut ChaCha8Rng, of: ServerSet) -> ServerSet {
    of.iter().filter(|_| rng.gen_range(0..2u64) == 1).collect()
}

/// Any TypeOK state, every field drawn uniformly from its domain.
fn uniform_state(b: &ModelBounds, rng: &mut ChaCha8Rng) -> ReplicaSetState {
    let all = b.server_set();
    let servers = (0..b.servers)
        .map(|_| {
            let len = below(rng, b.max_log_len + 1);
            ServerState {
                log: (0..len).map(|_| below(rng, b.max_term + 1)).collect(),
                term: below(rng, b.max_term + 1),
                role: if chance(rng, 50) { Role::Primary } else { Role::Secondary },
                config: random_subset(rng, all),
                config_version: below(rng, b.max_config_version + 1),
                config_term: below(rng, b.max_term + 1),
            }
        })
        .collect();
    let committed = (0..=b.max_log_len)
        .flat_map(|i| (0..=b.max_term).map(move |t| CommitRecord::new(i, t)))
        .filter(|_| chance(rng, 10))
        .collect();
    ReplicaSetState { servers, committed }
}

/// A state shaped like a plausible protocol history: logs are prefixes of
/// one non-decreasing spine with occasional forks, configs come from a short
/// chain of (version, term) stamps, and at most a couple of primaries exist.
/// Every choice is random, so unreachable shapes still appear.
fn shaped_state(b: &ModelBounds, rng: &mut ChaCha8Rng) -> ReplicaSetState {
    let all = b.server_set();
    let n = b.servers;
    let spine_len = below(rng, b.max_log_len + 1);
    let mut spine: Vec<Term> = Vec::new();
    let mut t = 1;
    for _ in 0..spine_len {
        if chance(rng, 40) {
            t += 1;
        }
        spine.push(t.min(b.max_term));
    }
    let top = spine.last().copied().unwrap_or(0);

    // A chain of configs with increasing stamps.
    let chain_len = 1 + below(rng, 3) as usize;
    let mut chain: Vec<(ServerSet, u32, Term)> = Vec::new();
    let mut version = below(rng, 2) + 1;
    let mut cterm = below(rng, top.max(1) + 1);
    let mut members = if chance(rng, 60) { all } else { random_subset(rng, all) };
    for _ in 0..chain_len {
        if members.is_empty() {
            members = ServerSet::singleton(ServerId(below(rng, n as u32) as u8));
        }
        chain.push((members, version.min(b.max_config_version), cterm.min(b.max_term)));
        if chance(rng, 50) {
            cterm += 1;
            version = if chance(rng, 50) { version } else { version + 1 };
        } else {
            version += 1;
        }
        let flip = ServerId(below(rng, n as u32) as u8);
        members = if members.contains(flip) && members.len() > 1 {
            members.difference(ServerSet::singleton(flip))
        } else {
            members.with(flip)
        };
    }
    let newest_term = chain.iter().map(|c| c.2).max().unwrap_or(0);
    let base_term = top.max(newest_term);

    let mut servers: Vec<ServerState> = (0..n)
        .map(|_| {
            let mut log: Vec<Term> = spine[..below(rng, spine.len() as u32 + 1) as usize].to_vec();
            if chance(rng, 15) && (log.len() as u32) < b.max_log_len {
                let last = log.last().copied().unwrap_or(1);
                log.push((last + below(rng, 2)).clamp(1, b.max_term));
            }
            let (config, config_version, config_term) = if chance(rng, 70) {
                chain[chain.len() - 1]
            } else {
                chain[below(rng, chain.len() as u32) as usize]
            };
            let term = (base_term + below(rng, 2)).min(b.max_term);
            ServerState {
                log,
                term: term.max(config_term),
                role: Role::Secondary,
                config,
                config_version,
                config_term,
            }
        })
        .collect();

    let primaries = if chance(rng, 30) { 0 } else if chance(rng, 85) { 1 } else { 2 };
    for _ in 0..primaries {
        let p = below(rng, n as u32) as usize;
        let srv = &mut servers[p];
        srv.role = Role::Primary;
        if chance(rng, 80) {
            srv.config_term = srv.term;
        }
    }

    let mut committed = std::collections::BTreeSet::new();
    for (i, &term) in spine.iter().enumerate() {
        let index = i as u32 + 1;
        let holders: ServerSet = (0..n)
            .filter(|&s| servers[s].log.get(i) == Some(&term))
            .map(|s| ServerId(s as u8))
            .collect();
        let config = chain[chain.len() - 1].0;
        let durable = some_quorum_within(config, holders);
        if (durable && chance(rng, 60)) || chance(rng, 3) {
            committed.insert(CommitRecord::new(index, term));
        }
    }
    ReplicaSetState { servers, committed }
}

/// A seeded TypeOK state. Most draws are history-shaped to raise the share
/// that satisfies the full invariant; one in eight is uniform over the
/// whole TypeOK domain, so every TypeOK state has nonzero probability.
pub fn random_state(bounds: &ModelBounds, seed: u64) -> ReplicaSetState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut st = if chance(&mut rng, 12) {
        uniform_state(bounds, &mut rng)
    } else {
        shaped_state(bounds, &mut rng)
    };
    clamp(&mut st, bounds);
    st
}

fn clamp(st: &mut ReplicaSetState, b: &ModelBounds) {
    for n in &mut st.servers {
        n.log.truncate(b.max_log_len as usize);
        for e in &mut n.log {
            *e = (*e).min(b.max_term);
        }
        n.term = n.term.min(b.max_term);
        n.config_term = n.config_term.min(b.max_term);
        n.config_version = n.config_version.min(b.max_config_version);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleOptions {
    /// Maximum number of states drawn.
    pub samples: u64,
    /// Stop once this many drawn states satisfied the candidate.
    pub accepted_target: Option<u64>,
    pub seed: u64,
    /// Cap on stored CTI records; the matrix still counts all of them.
    pub max_ctis: usize,
    /// Stop after the first batch containing a CTI.
    pub stop_at_first: bool,
    pub threads: usize,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions {
            samples: 100_000,
            accepted_target: None,
            seed: 0,
            max_ctis: 100,
            stop_at_first: false,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExhaustiveOptions {
    /// Largest admissible state-space estimate.
    pub budget: u128,
    pub max_ctis: usize,
    pub stop_at_first: bool,
    pub threads: usize,
}

impl Default for ExhaustiveOptions {
    fn default() -> Self {
        ExhaustiveOptions {
            budget: 100_000_000,
            max_ctis: 100,
            stop_at_first: false,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InductionMode {
    #[serde(rename = "sample")]
    Sample,
    #[serde(rename = "exhaustive")]
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsecutionReport {
    pub mode: InductionMode,
    pub bounds: ModelBounds,
    pub mutations: Mutations,
    pub candidate: Vec<InvariantId>,
    pub goals: Vec<InvariantId>,
    pub actions: Vec<ActionKind>,
    pub seed: Option<u64>,
    /// States drawn (sampling) or enumerated (exhaustive).
    pub examined: u64,
    /// States that satisfied the candidate.
    pub accepted: u64,
    pub discarded: u64,
    /// accepted per million examined, rounded down.
    #[serde(rename = "acceptancePpm")]
    pub acceptance_ppm: u64,
    #[serde(rename = "transitionsChecked")]
    pub transitions_checked: u64,
    #[serde(rename = "ctiCount")]
    pub cti_count: u64,
    /// True when the run stopped early at the first CTI.
    pub truncated: bool,
    pub matrix: GoalMatrix,
    pub ctis: Vec<CtiRecord>,
    #[serde(skip)]
    pub wall_time_ms: u64,
}

impl ConsecutionReport {
    pub fn ok(&self) -> bool {
        self.cti_count == 0
    }
}

#[derive(Default)]
struct Batch {
    examined: u64,
    accepted: u64,
    transitions: u64,
    matrix: GoalMatrix,
    ctis: Vec<CtiRecord>,
}

impl Batch {
    fn absorb(&mut self, other: Batch, max_ctis: usize) {
        self.examined += other.examined;
        self.accepted += other.accepted;
        self.transitions += other.transitions;
        self.matrix.merge(&other.matrix);
        let room = max_ctis.saturating_sub(self.ctis.len());
        self.ctis.extend(other.ctis.into_iter().take(room));
    }
}

/// Checks every selected transition out of `pre`, which already satisfies
/// the candidate.
fn check_state(model: &Model, query: &Query, pre: &ReplicaSetState, batch: &mut Batch, max_ctis: usize) {
    let b = model.bounds();
    let goals: Vec<InvariantId> = query
        .goals
        .iter()
        .filter(|&g| query.candidate.contains(g) || eval_invariant(g, pre, b))
        .collect();
    let mut succs = Vec::new();
    model.successors_into(pre, &mut succs);
    for (action, post) in succs {
        let kind = action.kind();
        if !query.wants(kind) {
            continue;
        }
        batch.transitions += 1;
        for &g in &goals {
            let broken = !eval_invariant(g, &post, b);
            batch.matrix.record(kind, g, broken);
            if broken && batch.ctis.len() < max_ctis {
                batch.ctis.push(CtiRecord {
                    pre_state: pre.clone(),
                    action,
                    post_state: post.clone(),
                    violated: g,
                    goal: (kind, g),
                });
            }
        }
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, ModelError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ModelError::Malformed(format!("cannot start worker pool: {e}")))
}

fn ppm(accepted: u64, examined: u64) -> u64 {
    if examined == 0 {
        0
    } else {
        (accepted as u128 * 1_000_000 / examined as u128) as u64
    }
}

const SAMPLE_CHUNK: u64 = 1 << 14;

/// Random-state consecution. Sample `i` is drawn with seed `mix(seed, i)`;
/// chunks run in parallel and are merged in index order, and the run stops
/// at the exact index where the accepted target is met.
pub fn check_consecution_sampled(
    bounds: ModelBounds,
    mutations: Mutations,
    query: &Query,
    opts: SampleOptions,
) -> Result<ConsecutionReport, ModelError> {
    bounds.validate()?;
    if opts.samples == 0 {
        return Err(ModelError::Malformed("samples must be at least 1".into()));
    }
    let started = Instant::now();
    let model = Model::with_mutations(bounds, mutations);
    let pool = pool(opts.threads)?;
    let mut total = Batch::default();
    let mut truncated = false;
    let mut next = 0u64;
    'outer: while next < opts.samples {
        let end = (next + SAMPLE_CHUNK).min(opts.samples);
        let per_sample: Vec<Option<Batch>> = pool.install(|| {
            (next..end)
                .into_par_iter()
                .map(|i| {
                    let st = random_state(&bounds, mix(opts.seed, i));
                    if !holds_all(query.candidate, &st, &bounds) {
                        return None;
                    }
                    let mut batch = Batch { accepted: 1, ..Batch::default() };
                    check_state(&model, query, &st, &mut batch, opts.max_ctis);
                    Some(batch)
                })
                .collect()
        });
        for result in per_sample {
            total.examined += 1;
            if let Some(batch) = result {
                total.absorb(batch, opts.max_ctis);
            }
            if opts.accepted_target.is_some_and(|t| total.accepted >= t) {
                break 'outer;
            }
        }
        next = end;
        if opts.stop_at_first && total.matrix.total_ctis() > 0 {
            truncated = next < opts.samples;
            break;
        }
    }
    Ok(finish(
        InductionMode::Sample,
        &model,
        query,
        Some(opts.seed),
        total,
        truncated,
        started,
    ))
}

fn finish(
    mode: InductionMode,
    model: &Model,
    query: &Query,
    seed: Option<u64>,
    total: Batch,
    truncated: bool,
    started: Instant,
) -> ConsecutionReport {
    ConsecutionReport {
        mode,
        bounds: *model.bounds(),
        mutations: model.mutations().clone(),
        candidate: query.candidate.iter().collect(),
        goals: query.goals.iter().collect(),
        actions: {
            let mut a = query.actions.clone();
            a.sort();
            a.dedup();
            a
        },
        seed,
        examined: total.examined,
        accepted: total.accepted,
        discarded: total.examined - total.accepted,
        acceptance_ppm: ppm(total.accepted, total.examined),
        transitions_checked: total.transitions,
        cti_count: total.matrix.total_ctis(),
        truncated,
        matrix: total.matrix,
        ctis: total.ctis,
        wall_time_ms: started.elapsed().as_millis() as u64,
    }
}

/// All single-server valuations within `b`, in canonical order.
fn server_states(b: &ModelBounds) -> Vec<ServerState> {
    let mut logs: Vec<Vec<Term>> = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..b.max_log_len {
        layer = layer
            .iter()
            .flat_map(|l: &Vec<Term>| {
                (0..=b.max_term).map(move |e| {
                    let mut l = l.clone();
                    l.push(e);
                    l
                })
            })
            .collect();
        logs.extend(layer.iter().cloned());
    }
    let mut out = Vec::new();
    for log in &logs {
        for term in 0..=b.max_term {
            for role in [Role::Secondary, Role::Primary] {
                for config in b.server_set().subsets() {
                    for config_version in 0..=b.max_config_version {
                        for config_term in 0..=b.max_term {
                            out.push(ServerState {
                                log: log.clone(),
                                term,
                                role,
                                config,
                                config_version,
                                config_term,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

/// Number of TypeOK states at `b`, saturating.
pub fn state_space_size(b: &ModelBounds) -> u128 {
    let t = b.max_term as u128 + 1;
    let logs: u128 = (0..=b.max_log_len).map(|l| t.saturating_pow(l)).sum();
    let per_server = logs * t * 2 * (1u128 << b.servers) * (b.max_config_version as u128 + 1) * t;
    let records = (b.max_log_len as u128 + 1) * t;
    let commits = if records >= 127 { u128::MAX } else { 1u128 << records };
    per_server
        .checked_pow(b.servers as u32)
        .and_then(|s| s.checked_mul(commits))
        .unwrap_or(u128::MAX)
}

/// The TypeOK state space at some bounds, enumerated as server tuples
/// (mixed-radix codes over single-server valuations) times committed sets.
struct Space {
    bounds: ModelBounds,
    singles: Vec<ServerState>,
    records: Vec<CommitRecord>,
    candidate: ConjunctSet,
    server_only: ConjunctSet,
    commit_part: ConjunctSet,
}

impl Space {
    fn new(bounds: &ModelBounds, candidate: ConjunctSet) -> Self {
        Space {
            bounds: *bounds,
            singles: server_states(bounds),
            records: (0..=bounds.max_log_len)
                .flat_map(|i| (0..=bounds.max_term).map(move |t| CommitRecord::new(i, t)))
                .collect(),
            candidate,
            server_only: candidate.server_only(),
            commit_part: candidate.iter().filter(|c| c.reads_committed()).collect(),
        }
    }

    fn tuples(&self) -> u64 {
        (self.singles.len() as u64).pow(self.bounds.servers as u32)
    }

    /// Visits the candidate states of one server tuple, committed sets in
    /// increasing mask order. Returns how many states the tuple stands for.
    fn expand(&self, code: u64, mut visit: impl FnMut(&ReplicaSetState)) -> u64 {
        let n = self.bounds.servers;
        let k = self.singles.len() as u64;
        let mut digits = vec![0u64; n];
        let mut rest = code;
        for d in digits.iter_mut().rev() {
            *d = rest % k;
            rest /= k;
        }
        let servers = digits.iter().map(|&d| self.singles[d as usize].clone()).collect();
        let mut st = ReplicaSetState { servers, committed: Default::default() };
        let examined = 1u64 << self.records.len();
        if !holds_all(self.server_only, &st, &self.bounds) {
            return examined;
        }
        let admissible: Vec<CommitRecord> = self
            .records
            .iter()
            .copied()
            .filter(|&r| {
                st.committed = [r].into_iter().collect();
                holds_all(self.commit_part, &st, &self.bounds)
            })
            .collect();
        for mask in 0..1u64 << admissible.len() {
            st.committed = admissible
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &r)| r)
                .collect();
            debug_assert!(holds_all(self.candidate, &st, &self.bounds));
            visit(&st);
        }
        examined
    }
}

/// Every TypeOK state at `bounds` that satisfies `candidate`, in
/// enumeration order. Refuses when the state-space size exceeds `budget`.
pub fn candidate_states(
    bounds: ModelBounds,
    candidate: ConjunctSet,
    budget: u128,
) -> Result<Vec<ReplicaSetState>, ModelError> {
    bounds.validate()?;
    let estimate = state_space_size(&bounds);
    if estimate > budget {
        return Err(ModelError::BudgetExceeded { estimate, budget });
    }
    let space = Space::new(&bounds, candidate);
    let mut out = Vec::new();
    for code in 0..space.tuples() {
        space.expand(code, |st| out.push(st.clone()));
    }
    Ok(out)
}

/// Enumerates every TypeOK state at `bounds` and checks consecution from
/// those satisfying the candidate. Server valuations are filtered by the
/// conjuncts that ignore the committed set before committed sets are
/// enumerated; the committed-set conjuncts are all universally quantified
/// over records, so only subsets of individually admissible records are
/// visited. Refuses when the state-space size exceeds the budget.
pub fn check_consecution_exhaustive(
    bounds: ModelBounds,
    mutations: Mutations,
    query: &Query,
    opts: ExhaustiveOptions,
) -> Result<ConsecutionReport, ModelError> {
    bounds.validate()?;
    let estimate = state_space_size(&bounds);
    if estimate > opts.budget {
        return Err(ModelError::BudgetExceeded { estimate, budget: opts.budget });
    }
    let started = Instant::now();
    let model = Model::with_mutations(bounds, mutations);
    let pool = pool(opts.threads)?;
    let space = Space::new(&bounds, query.candidate);
    let tuples = space.tuples();
    let chunk = (space.singles.len() as u64 * 4).max(1);
    let mut total = Batch::default();
    let mut truncated = false;
    let mut start = 0u64;
    while start < tuples {
        let end = (start + chunk).min(tuples);
        let batches: Vec<Batch> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|code| {
                    let mut batch = Batch::default();
                    batch.examined = space.expand(code, |st| {
                        batch.accepted += 1;
                        check_state(&model, query, st, &mut batch, opts.max_ctis);
                    });
                    batch
                })
                .collect()
        });
        for b in batches {
            total.absorb(b, opts.max_ctis);
        }
        start = end;
        if opts.stop_at_first && total.matrix.total_ctis() > 0 {
            truncated = start < tuples;
            break;
        }
    }
    Ok(finish(InductionMode::Exhaustive, &model, query, None, total, truncated, started))
}
