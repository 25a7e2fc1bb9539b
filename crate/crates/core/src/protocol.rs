//! Guards and effects of the eight protocol actions, and transition
//! enumeration under finite bounds.
//!
//! Every operation is a pure function of its inputs. An action whose guard
//! does not hold returns [`ModelError::NotEnabled`]; arguments that do not
//! name servers of the model return [`ModelError::Malformed`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::action::Action;
use crate::error::ModelError;
use crate::invariants;
use crate::quorum::{
    is_newer_config, is_newer_or_equal_config, is_quorum, quorums_of, quorums_overlap,
    some_quorum_within,
};
use crate::types::{
    last_term, CommitRecord, ModelBounds, ReplicaSetState, Role, ServerId, ServerSet, ServerState,
};

/// A protocol guard that can be switched off to reproduce known bug classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Guard {
    /// Reconfig: the new member set's quorums overlap the current ones.
    ReconfigQuorumsOverlap,
    /// Reconfig: a quorum of the current config holds the primary's config stamp.
    ReconfigConfigQuorum,
    /// Reconfig: a quorum of the current config is in exactly the primary's term.
    ReconfigTermQuorum,
    /// Reconfig: every committed entry is held by a quorum of the current config.
    ReconfigOplogCommitment,
    /// GetEntries and RollbackEntries only run on secondaries.
    SyncOnSecondary,
    /// RollbackEntries only removes an entry that diverges from the source log.
    RollbackDivergence,
}

impl Guard {
    pub const ALL: [Guard; 6] = [
        Guard::ReconfigQuorumsOverlap,
        Guard::ReconfigConfigQuorum,
        Guard::ReconfigTermQuorum,
        Guard::ReconfigOplogCommitment,
        Guard::SyncOnSecondary,
        Guard::RollbackDivergence,
    ];

    pub const RECONFIG: [Guard; 4] = [
        Guard::ReconfigQuorumsOverlap,
        Guard::ReconfigConfigQuorum,
        Guard::ReconfigTermQuorum,
        Guard::ReconfigOplogCommitment,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Guard::ReconfigQuorumsOverlap => "reconfig-quorums-overlap",
            Guard::ReconfigConfigQuorum => "reconfig-config-quorum",
            Guard::ReconfigTermQuorum => "reconfig-term-quorum",
            Guard::ReconfigOplogCommitment => "reconfig-oplog-commitment",
            Guard::SyncOnSecondary => "sync-on-secondary",
            Guard::RollbackDivergence => "rollback-divergence",
        }
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Guard {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Guard::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| ModelError::Malformed(format!("unknown guard `{s}`")))
    }
}

/// Set of disabled guards. The default disables nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Mutations {
    disabled: BTreeSet<Guard>,
}

impl Mutations {
    pub fn none() -> Self {
        Self::default()
    }

    /// Disables every Reconfig safety guard.
    pub fn without_reconfig_guards() -> Self {
        Mutations {
            disabled: Guard::RECONFIG.into_iter().collect(),
        }
    }

    pub fn disable(mut self, guard: Guard) -> Self {
        self.disabled.insert(guard);
        self
    }

    pub fn is_enabled(&self, guard: Guard) -> bool {
        !self.disabled.contains(&guard)
    }

    pub fn disabled(&self) -> impl Iterator<Item = Guard> + '_ {
        self.disabled.iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.disabled.is_empty()
    }
}

/// The protocol at fixed bounds, optionally with mutated guards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    bounds: ModelBounds,
    mutations: Mutations,
}

fn not_enabled(action: &Action, why: &str) -> ModelError {
    ModelError::NotEnabled(format!("{action}: {why}"))
}

impl Model {
    pub fn new(bounds: ModelBounds) -> Self {
        Model {
            bounds,
            mutations: Mutations::none(),
        }
    }

    pub fn with_mutations(bounds: ModelBounds, mutations: Mutations) -> Self {
        Model { bounds, mutations }
    }

    pub fn bounds(&self) -> &ModelBounds {
        &self.bounds
    }

    pub fn mutations(&self) -> &Mutations {
        &self.mutations
    }

    /// Every server starts as an empty-log secondary at term 0 holding the
    /// full member set at stamp (v1, t0).
    pub fn initial_state(&self) -> ReplicaSetState {
        initial_state(&self.bounds)
    }

    pub fn client_request(&self, st: &ReplicaSetState, s: ServerId) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::ClientRequest { s })
    }

    pub fn get_entries(&self, st: &ReplicaSetState, s: ServerId, t: ServerId) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::GetEntries { s, t })
    }

    pub fn rollback_entries(&self, st: &ReplicaSetState, s: ServerId, t: ServerId) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::RollbackEntries { s, t })
    }

    pub fn commit_entry(&self, st: &ReplicaSetState, s: ServerId, quorum: ServerSet) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::CommitEntry { s, quorum })
    }

    pub fn send_config(&self, st: &ReplicaSetState, s: ServerId, t: ServerId) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::SendConfig { s, t })
    }

    pub fn reconfig(&self, st: &ReplicaSetState, s: ServerId, members: ServerSet) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::Reconfig { s, members })
    }

    pub fn become_leader(&self, st: &ReplicaSetState, s: ServerId, quorum: ServerSet) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::BecomeLeader { s, quorum })
    }

    pub fn update_terms(&self, st: &ReplicaSetState, s: ServerId, t: ServerId) -> Result<ReplicaSetState, ModelError> {
        self.apply(st, &Action::UpdateTerms { s, t })
    }

    /// Applies `action` to `st`, ignoring bound pruning.
    pub fn apply(&self, st: &ReplicaSetState, action: &Action) -> Result<ReplicaSetState, ModelError> {
        self.check_shape(st)?;
        action.validate(self.bounds.server_set())?;
        if let Some(why) = self.blocked_by(st, action) {
            return Err(not_enabled(action, why));
        }
        Ok(effect(st, action))
    }

    /// Like [`Model::apply`], but also refuses steps that bound pruning
    /// removes from the enumerated transition relation.
    pub fn apply_bounded(&self, st: &ReplicaSetState, action: &Action) -> Result<ReplicaSetState, ModelError> {
        self.check_shape(st)?;
        action.validate(self.bounds.server_set())?;
        if let Some(why) = self.pruned(st, action) {
            return Err(not_enabled(action, why));
        }
        self.apply(st, action)
    }

    /// All enabled transitions of a TypeOK state, sorted by kind then arguments.
    pub fn enumerate_transitions(&self, st: &ReplicaSetState) -> Result<Vec<(Action, ReplicaSetState)>, ModelError> {
        if !invariants::type_ok(st, &self.bounds) {
            return Err(ModelError::Malformed(
                "state does not satisfy TypeOK under the model bounds".into(),
            ));
        }
        let mut out = Vec::new();
        self.successors_into(st, &mut out);
        Ok(out)
    }

    /// Enabled actions only, in enumeration order. Assumes TypeOK.
    pub fn enabled_actions(&self, st: &ReplicaSetState) -> Vec<Action> {
        let mut out = Vec::new();
        self.for_each_candidate(st, |a| {
            if self.pruned(st, &a).is_none() && self.blocked_by(st, &a).is_none() {
                out.push(a);
            }
        });
        out
    }

    /// Appends every enabled `(action, successor)` pair to `out`. Assumes the
    /// state has the model's shape; TypeOK is not rechecked.
    pub fn successors_into(&self, st: &ReplicaSetState, out: &mut Vec<(Action, ReplicaSetState)>) {
        self.for_each_candidate(st, |a| {
            if self.pruned(st, &a).is_none() && self.blocked_by(st, &a).is_none() {
                out.push((a, effect(st, &a)));
            }
        });
    }

    fn check_shape(&self, st: &ReplicaSetState) -> Result<(), ModelError> {
        if st.servers.len() != self.bounds.servers {
            return Err(ModelError::Malformed(format!(
                "state has {} servers, model has {}",
                st.servers.len(),
                self.bounds.servers
            )));
        }
        Ok(())
    }

    /// Visits the candidate parameter tuples of every kind in sorted order.
    /// Quorum arguments range over the quorums of `config[s]`, member sets
    /// over all non-empty subsets of the server set.
    fn for_each_candidate(&self, st: &ReplicaSetState, mut visit: impl FnMut(Action)) {
        let ids: Vec<ServerId> = self.bounds.server_ids().collect();
        let pairs = || ids.iter().flat_map(|&s| ids.iter().map(move |&t| (s, t)));
        for &s in &ids {
            visit(Action::ClientRequest { s });
        }
        for (s, t) in pairs() {
            visit(Action::GetEntries { s, t });
        }
        for (s, t) in pairs() {
            visit(Action::RollbackEntries { s, t });
        }
        for &s in &ids {
            for &quorum in quorums_of(st.server(s).config) {
                visit(Action::CommitEntry { s, quorum });
            }
        }
        for (s, t) in pairs() {
            visit(Action::SendConfig { s, t });
        }
        for &s in &ids {
            for members in self.bounds.server_set().subsets().skip(1) {
                visit(Action::Reconfig { s, members });
            }
        }
        for &s in &ids {
            for &quorum in quorums_of(st.server(s).config) {
                visit(Action::BecomeLeader { s, quorum });
            }
        }
        for (s, t) in pairs() {
            visit(Action::UpdateTerms { s, t });
        }
    }

    /// Reason the finite scope excludes this step, if any.
    fn pruned(&self, st: &ReplicaSetState, action: &Action) -> Option<&'static str> {
        let b = &self.bounds;
        let srv = st.server(action.server());
        match action {
            Action::ClientRequest { .. } if srv.log.len() as u64 >= b.max_log_len as u64 => {
                Some("log length bound reached")
            }
            Action::BecomeLeader { .. } if srv.term as u64 + 1 > b.max_term as u64 => {
                Some("term bound reached")
            }
            Action::Reconfig { .. } if srv.config_version as u64 + 1 > b.max_config_version as u64 => {
                Some("config version bound reached")
            }
            _ => None,
        }
    }

    /// The first failing guard clause, or `None` when the action is enabled.
    fn blocked_by(&self, st: &ReplicaSetState, action: &Action) -> Option<&'static str> {
        let g = &self.mutations;
        match *action {
            Action::ClientRequest { s } => {
                (!st.server(s).is_primary()).then_some("server is not primary")
            }
            Action::GetEntries { s, t } => {
                let (ls, lt) = (&st.server(s).log, &st.server(t).log);
                if s == t {
                    Some("source and target coincide")
                } else if g.is_enabled(Guard::SyncOnSecondary) && st.server(s).is_primary() {
                    Some("server is not secondary")
                } else if lt.len() <= ls.len() {
                    Some("source log is not longer")
                } else if !ls.is_empty() && ls[ls.len() - 1] != lt[ls.len() - 1] {
                    Some("last entry does not match source")
                } else {
                    None
                }
            }
            Action::RollbackEntries { s, t } => {
                let (ls, lt) = (&st.server(s).log, &st.server(t).log);
                if s == t {
                    Some("source and target coincide")
                } else if g.is_enabled(Guard::SyncOnSecondary) && st.server(s).is_primary() {
                    Some("server is not secondary")
                } else if ls.is_empty() {
                    Some("log is empty")
                } else if last_term(ls) >= last_term(lt) {
                    Some("last term is not older than source")
                } else if g.is_enabled(Guard::RollbackDivergence)
                    && ls.len() <= lt.len()
                    && ls[ls.len() - 1] == lt[ls.len() - 1]
                {
                    Some("log is a prefix of the source log")
                } else {
                    None
                }
            }
            Action::CommitEntry { s, quorum } => {
                let p = st.server(s);
                let ind = p.log.len();
                if !p.is_primary() {
                    Some("server is not primary")
                } else if !is_quorum(quorum, p.config) {
                    Some("not a quorum of the server's config")
                } else if ind == 0 {
                    Some("log is empty")
                } else if p.log[ind - 1] != p.term {
                    Some("last entry is not from the current term")
                } else if !quorum.iter().all(|n| {
                    let peer = st.server(n);
                    peer.log.len() >= ind && peer.log[ind - 1] == p.term && peer.term == p.term
                }) {
                    Some("entry is not immediately committed in the quorum")
                } else if st.committed.contains(&CommitRecord::new(ind as u32, p.term)) {
                    Some("entry already committed")
                } else {
                    None
                }
            }
            Action::SendConfig { s, t } => {
                if s == t {
                    Some("source and target coincide")
                } else if st.server(t).is_primary() {
                    Some("receiver is not secondary")
                } else if !is_newer_config(st.server(s).stamp(), st.server(t).stamp()) {
                    Some("config is not newer than the receiver's")
                } else {
                    None
                }
            }
            Action::Reconfig { s, members } => {
                let p = st.server(s);
                if !p.is_primary() {
                    Some("server is not primary")
                } else if members.is_empty() {
                    Some("empty member set")
                } else if !members.contains(s) {
                    Some("new config does not contain the primary")
                } else if members == p.config {
                    Some("new config equals the current config")
                } else if g.is_enabled(Guard::ReconfigQuorumsOverlap)
                    && !quorums_overlap(p.config, members)
                {
                    Some("quorums of the new config do not overlap the current ones")
                } else if g.is_enabled(Guard::ReconfigConfigQuorum)
                    && !some_quorum_within(p.config, st.servers_where(|n| n.stamp() == p.stamp()))
                {
                    Some("current config is not installed on a quorum")
                } else if g.is_enabled(Guard::ReconfigTermQuorum)
                    && !some_quorum_within(p.config, st.servers_where(|n| n.term == p.term))
                {
                    Some("current term is not propagated to a quorum")
                } else if g.is_enabled(Guard::ReconfigOplogCommitment)
                    && !some_quorum_within(p.config, holders_of_all_commits(st))
                {
                    Some("committed entries are not held by a quorum")
                } else {
                    None
                }
            }
            Action::BecomeLeader { s, quorum } => {
                let cand = st.server(s);
                let new_term = cand.term as u64 + 1;
                if !quorum.contains(s) {
                    Some("candidate is not in the voter set")
                } else if !is_quorum(quorum, cand.config) {
                    Some("voters are not a quorum of the candidate's config")
                } else if !quorum.iter().all(|v| (st.server(v).term as u64) < new_term) {
                    Some("a voter has already reached the new term")
                } else if !quorum
                    .iter()
                    .all(|v| is_newer_or_equal_config(cand.stamp(), st.server(v).stamp()))
                {
                    Some("a voter has a newer config")
                } else if !quorum.iter().all(|v| log_at_least_as_recent(&cand.log, &st.server(v).log)) {
                    Some("a voter has a more recent log")
                } else {
                    None
                }
            }
            Action::UpdateTerms { s, t } => {
                if s == t {
                    Some("source and target coincide")
                } else if st.server(s).term <= st.server(t).term {
                    Some("term is not newer")
                } else {
                    None
                }
            }
        }
    }
}

/// Initial state at the given bounds.
pub fn initial_state(bounds: &ModelBounds) -> ReplicaSetState {
    let all = bounds.server_set();
    let server = ServerState {
        log: Vec::new(),
        term: 0,
        role: Role::Secondary,
        config: all,
        config_version: 1,
        config_term: 0,
    };
    ReplicaSetState {
        servers: vec![server; bounds.servers],
        committed: BTreeSet::new(),
    }
}

fn log_at_least_as_recent(candidate: &[u32], voter: &[u32]) -> bool {
    let (lc, lv) = (last_term(candidate), last_term(voter));
    lc > lv || (lc == lv && candidate.len() >= voter.len())
}

/// Servers whose logs contain every committed entry.
fn holders_of_all_commits(st: &ReplicaSetState) -> ServerSet {
    st.servers_where(|n| {
        st.committed
            .iter()
            .all(|c| n.entry(c.index) == Some(c.term))
    })
}

/// Effect of an action whose guard holds.
fn effect(st: &ReplicaSetState, action: &Action) -> ReplicaSetState {
    let mut next = st.clone();
    match *action {
        Action::ClientRequest { s } => {
            let srv = next.server_mut(s);
            srv.log.push(srv.term);
        }
        Action::GetEntries { s, t } => {
            let len = st.server(s).log.len();
            let entry = st.server(t).log[len];
            next.server_mut(s).log.push(entry);
        }
        Action::RollbackEntries { s, .. } => {
            next.server_mut(s).log.pop();
        }
        Action::CommitEntry { s, .. } => {
            let p = st.server(s);
            next.committed
                .insert(CommitRecord::new(p.log.len() as u32, p.term));
        }
        Action::SendConfig { s, t } => {
            let src = st.server(s);
            let dst = next.server_mut(t);
            dst.config = src.config;
            dst.config_version = src.config_version;
            dst.config_term = src.config_term;
        }
        Action::Reconfig { s, members } => {
            let p = next.server_mut(s);
            p.config = members;
            p.config_version += 1;
            p.config_term = p.term;
        }
        Action::BecomeLeader { s, quorum } => {
            let new_term = st.server(s).term + 1;
            for v in quorum.iter() {
                let voter = next.server_mut(v);
                voter.term = new_term;
                voter.role = if v == s { Role::Primary } else { Role::Secondary };
            }
            next.server_mut(s).config_term = new_term;
        }
        Action::UpdateTerms { s, t } => {
            let term = st.server(s).term;
            let dst = next.server_mut(t);
            dst.term = term;
            dst.role = Role::Secondary;
        }
    }
    next
}
