//! State predicates: type correctness, the twenty conjuncts of the inductive
//! invariant, and the two top-level safety properties.
//!
//! Predicates never panic on malformed states. A lookup outside the state's
//! domain (a config naming a server the state does not have) makes the
//! predicate false.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::ModelError;
use crate::quorum::{every_quorum_meets, is_newer_config, quorums_of, quorums_overlap};
use crate::types::{CommitRecord, ModelBounds, ReplicaSetState, ServerId, ServerSet, MAX_SERVERS};

/// Registered predicate names. The first twenty, in declaration order, are the
/// conjuncts of [`InvariantId::MrrInd`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InvariantId {
    TypeOk,
    ElectionSafety,
    PrimaryConfigTermEqualToCurrentTerm,
    ConfigVersionAndTermUnique,
    PrimaryInTermContainsNewestConfigOfTerm,
    ActiveConfigsOverlap,
    ActiveConfigsSafeAtTerms,
    LogEntryInTermImpliesConfigInTerm,
    PrimaryHasEntriesItCreated,
    LogMatching,
    PrimaryTermAtLeastAsLargeAsLogTerms,
    TermsOfEntriesGrowMonotonically,
    UniformLogEntriesInTerm,
    CommittedEntryIndexesAreNonZero,
    CommittedTermMatchesEntry,
    LeaderCompleteness,
    LogsLaterThanCommittedMustHaveCommitted,
    ActiveConfigsOverlapWithCommittedEntry,
    NewerConfigsDisableCommitsInOlderTerm,
    ConfigsNonEmpty,
    StateMachineSafety,
    MrrInd,
}

use InvariantId::*;

impl InvariantId {
    pub const ALL: [InvariantId; 22] = [
        TypeOk,
        ElectionSafety,
        PrimaryConfigTermEqualToCurrentTerm,
        ConfigVersionAndTermUnique,
        PrimaryInTermContainsNewestConfigOfTerm,
        ActiveConfigsOverlap,
        ActiveConfigsSafeAtTerms,
        LogEntryInTermImpliesConfigInTerm,
        PrimaryHasEntriesItCreated,
        LogMatching,
        PrimaryTermAtLeastAsLargeAsLogTerms,
        TermsOfEntriesGrowMonotonically,
        UniformLogEntriesInTerm,
        CommittedEntryIndexesAreNonZero,
        CommittedTermMatchesEntry,
        LeaderCompleteness,
        LogsLaterThanCommittedMustHaveCommitted,
        ActiveConfigsOverlapWithCommittedEntry,
        NewerConfigsDisableCommitsInOlderTerm,
        ConfigsNonEmpty,
        StateMachineSafety,
        MrrInd,
    ];

    /// The conjuncts of the inductive invariant, in order.
    pub const CONJUNCTS: [InvariantId; 20] = {
        let mut out = [TypeOk; 20];
        let mut i = 0;
        while i < 20 {
            out[i] = InvariantId::ALL[i];
            i += 1;
        }
        out
    };

    pub fn name(self) -> &'static str {
        match self {
            TypeOk => "TypeOK",
            ElectionSafety => "ElectionSafety",
            PrimaryConfigTermEqualToCurrentTerm => "PrimaryConfigTermEqualToCurrentTerm",
            ConfigVersionAndTermUnique => "ConfigVersionAndTermUnique",
            PrimaryInTermContainsNewestConfigOfTerm => "PrimaryInTermContainsNewestConfigOfTerm",
            ActiveConfigsOverlap => "ActiveConfigsOverlap",
            ActiveConfigsSafeAtTerms => "ActiveConfigsSafeAtTerms",
            LogEntryInTermImpliesConfigInTerm => "LogEntryInTermImpliesConfigInTerm",
            PrimaryHasEntriesItCreated => "PrimaryHasEntriesItCreated",
            LogMatching => "LogMatching",
            PrimaryTermAtLeastAsLargeAsLogTerms => "PrimaryTermAtLeastAsLargeAsLogTerms",
            TermsOfEntriesGrowMonotonically => "TermsOfEntriesGrowMonotonically",
            UniformLogEntriesInTerm => "UniformLogEntriesInTerm",
            CommittedEntryIndexesAreNonZero => "CommittedEntryIndexesAreNonZero",
            CommittedTermMatchesEntry => "CommittedTermMatchesEntry",
            LeaderCompleteness => "LeaderCompleteness",
            LogsLaterThanCommittedMustHaveCommitted => "LogsLaterThanCommittedMustHaveCommitted",
            ActiveConfigsOverlapWithCommittedEntry => "ActiveConfigsOverlapWithCommittedEntry",
            NewerConfigsDisableCommitsInOlderTerm => "NewerConfigsDisableCommitsInOlderTerm",
            ConfigsNonEmpty => "ConfigsNonEmpty",
            StateMachineSafety => "StateMachineSafety",
            MrrInd => "MRRInd",
        }
    }

    /// One-line definition, as listed by `mrr invariants`.
    pub fn summary(self) -> &'static str {
        match self {
            TypeOk => "every variable has its declared type and lies within the model bounds",
            ElectionSafety => "no two distinct primaries share a term",
            PrimaryConfigTermEqualToCurrentTerm => "a primary's config term equals its current term",
            ConfigVersionAndTermUnique => "configs with equal (version, term) have equal member sets",
            PrimaryInTermContainsNewestConfigOfTerm => {
                "a primary's config version is the largest among configs of its term"
            }
            ActiveConfigsOverlap => "quorums of any two active configs intersect",
            ActiveConfigsSafeAtTerms => {
                "every quorum of an active config has a member at or above every config term"
            }
            LogEntryInTermImpliesConfigInTerm => "every log entry's term is at most some config term",
            PrimaryHasEntriesItCreated => "a primary holds every entry created in its term",
            LogMatching => "logs that agree at an index agree on the whole prefix",
            PrimaryTermAtLeastAsLargeAsLogTerms => "a primary's log terms are at most its current term",
            TermsOfEntriesGrowMonotonically => "terms in each log are non-decreasing",
            UniformLogEntriesInTerm => "entries of one term start at the same index in every log",
            CommittedEntryIndexesAreNonZero => "committed indexes are at least 1",
            CommittedTermMatchesEntry => "every committed entry appears in some log",
            LeaderCompleteness => "a primary holds every entry committed in an earlier term",
            LogsLaterThanCommittedMustHaveCommitted => {
                "a log with an entry newer than a committed entry contains that committed entry"
            }
            ActiveConfigsOverlapWithCommittedEntry => {
                "every quorum of an active config holds every committed entry"
            }
            NewerConfigsDisableCommitsInOlderTerm => {
                "a config from a newer term leaves older primaries no quorum at their term"
            }
            ConfigsNonEmpty => "every config has at least one member",
            StateMachineSafety => "committed entries at the same index have the same term",
            MrrInd => "conjunction of the twenty inductive-invariant conjuncts",
        }
    }

    /// Position among the twenty conjuncts, if this is one.
    pub fn conjunct_index(self) -> Option<usize> {
        let i = self as usize;
        (i < 20).then_some(i)
    }

    /// Whether the predicate reads the committed set.
    pub fn reads_committed(self) -> bool {
        matches!(
            self,
            TypeOk
                | CommittedEntryIndexesAreNonZero
                | CommittedTermMatchesEntry
                | LeaderCompleteness
                | LogsLaterThanCommittedMustHaveCommitted
                | ActiveConfigsOverlapWithCommittedEntry
                | StateMachineSafety
                | MrrInd
        )
    }
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InvariantId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InvariantId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| ModelError::UnknownInvariant(s.to_string()))
    }
}

/// A subset of the twenty conjuncts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ConjunctSet(u32);

impl ConjunctSet {
    pub const EMPTY: ConjunctSet = ConjunctSet(0);
    pub const ALL: ConjunctSet = ConjunctSet((1 << 20) - 1);

    pub fn only(id: InvariantId) -> Self {
        ConjunctSet::EMPTY.with(id)
    }

    pub fn with(self, id: InvariantId) -> Self {
        match id {
            MrrInd => ConjunctSet::ALL,
            _ => match id.conjunct_index() {
                Some(i) => ConjunctSet(self.0 | 1 << i),
                None => self,
            },
        }
    }

    pub fn without(self, id: InvariantId) -> Self {
        match id.conjunct_index() {
            Some(i) => ConjunctSet(self.0 & !(1 << i)),
            None => self,
        }
    }

    pub fn contains(self, id: InvariantId) -> bool {
        id.conjunct_index().is_some_and(|i| self.0 & (1 << i) != 0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: ConjunctSet) -> ConjunctSet {
        ConjunctSet(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = InvariantId> {
        InvariantId::CONJUNCTS
            .into_iter()
            .filter(move |id| self.contains(*id))
    }

    /// Conjuncts that only look at per-server variables.
    pub fn server_only(self) -> ConjunctSet {
        self.iter().filter(|id| !id.reads_committed()).collect()
    }
}

impl FromIterator<InvariantId> for ConjunctSet {
    fn from_iter<I: IntoIterator<Item = InvariantId>>(iter: I) -> Self {
        iter.into_iter().fold(ConjunctSet::EMPTY, ConjunctSet::with)
    }
}

/// Type correctness, bounded by `bounds`.
pub fn type_ok(st: &ReplicaSetState, bounds: &ModelBounds) -> bool {
    let all = bounds.server_set();
    st.servers.len() == bounds.servers
        && st.servers.iter().all(|n| {
            n.log.len() as u64 <= bounds.max_log_len as u64
                && n.log.iter().all(|&e| e <= bounds.max_term)
                && n.term <= bounds.max_term
                && n.config.is_subset(all)
                && n.config_version <= bounds.max_config_version
                && n.config_term <= bounds.max_term
        })
        && st
            .committed
            .iter()
            .all(|c| c.index <= bounds.max_log_len && c.term <= bounds.max_term)
}

/// Every config only names servers the state has.
fn well_formed(st: &ReplicaSetState) -> bool {
    !st.servers.is_empty()
        && st.servers.len() <= MAX_SERVERS
        && st.servers.iter().all(|n| n.config.is_subset(st.all_servers()))
}

pub fn in_log(index: u32, term: u32, st: &ReplicaSetState, s: ServerId) -> bool {
    st.servers
        .get(s.index())
        .is_some_and(|n| n.entry(index) == Some(term))
}

/// Every quorum of `config[s]` contains a server with a strictly newer config.
pub fn config_disabled(st: &ReplicaSetState, s: ServerId) -> bool {
    let stamp = st.server(s).stamp();
    let newer = st.servers_where(|n| is_newer_config(n.stamp(), stamp));
    every_quorum_meets(st.server(s).config, newer)
}

pub fn active_config_set(st: &ReplicaSetState) -> ServerSet {
    st.ids().filter(|&s| !config_disabled(st, s)).collect()
}

fn holders(st: &ReplicaSetState, c: &CommitRecord) -> ServerSet {
    st.servers_where(|n| n.entry(c.index) == Some(c.term))
}

fn primaries(st: &ReplicaSetState) -> impl Iterator<Item = ServerId> + '_ {
    st.ids().filter(|&s| st.server(s).is_primary())
}

/// Evaluates one registered predicate.
pub fn eval_invariant(id: InvariantId, st: &ReplicaSetState, bounds: &ModelBounds) -> bool {
    if id == TypeOk {
        return type_ok(st, bounds);
    }
    if id == MrrInd {
        return holds_all(ConjunctSet::ALL, st, bounds);
    }
    if !well_formed(st) {
        return false;
    }
    let ids = || st.ids();
    let srv = |s: ServerId| st.server(s);
    match id {
        TypeOk | MrrInd => unreachable!(),
        ElectionSafety => primaries(st).all(|s| {
            primaries(st).all(|t| s == t || srv(s).term != srv(t).term)
        }),
        PrimaryConfigTermEqualToCurrentTerm => {
            primaries(st).all(|s| srv(s).config_term == srv(s).term)
        }
        ConfigVersionAndTermUnique => ids().all(|s| {
            ids().all(|t| srv(s).stamp() != srv(t).stamp() || srv(s).config == srv(t).config)
        }),
        PrimaryInTermContainsNewestConfigOfTerm => primaries(st).all(|p| {
            ids().all(|t| {
                srv(t).config_term != srv(p).term || srv(t).config_version <= srv(p).config_version
            })
        }),
        ActiveConfigsOverlap => {
            let active = active_config_set(st);
            active.iter().all(|s| {
                active
                    .iter()
                    .all(|t| quorums_overlap(srv(s).config, srv(t).config))
            })
        }
        ActiveConfigsSafeAtTerms => {
            // Quantifies over every server's config term; a primary's config
            // term equals its current term, so primaries are covered too.
            let newest = st.servers.iter().map(|n| n.config_term).max().unwrap_or(0);
            let at_term = st.servers_where(|n| n.term >= newest);
            active_config_set(st)
                .iter()
                .all(|s| every_quorum_meets(srv(s).config, at_term))
        }
        LogEntryInTermImpliesConfigInTerm => {
            let newest = st.servers.iter().map(|n| n.config_term).max().unwrap_or(0);
            st.servers.iter().all(|n| n.log.iter().all(|&e| e <= newest))
        }
        PrimaryHasEntriesItCreated => primaries(st).all(|p| {
            let term = srv(p).term;
            st.servers.iter().all(|n| {
                n.log
                    .iter()
                    .enumerate()
                    .all(|(i, &e)| e != term || srv(p).log.get(i) == Some(&term))
            })
        }),
        LogMatching => st.servers.iter().all(|a| {
            st.servers.iter().all(|b| {
                let common = a.log.len().min(b.log.len());
                (0..common).all(|i| a.log[i] != b.log[i] || a.log[..i] == b.log[..i])
            })
        }),
        PrimaryTermAtLeastAsLargeAsLogTerms => {
            primaries(st).all(|p| srv(p).log.iter().all(|&e| e <= srv(p).term))
        }
        TermsOfEntriesGrowMonotonically => {
            st.servers.iter().all(|n| n.log.windows(2).all(|w| w[0] <= w[1]))
        }
        UniformLogEntriesInTerm => st.servers.iter().all(|a| {
            st.servers.iter().all(|b| {
                a.log.iter().enumerate().all(|(i, &e)| {
                    (i..b.log.len()).all(|j| b.log[j] != e || b.log[i] == e)
                })
            })
        }),
        CommittedEntryIndexesAreNonZero => st.committed.iter().all(|c| c.index >= 1),
        CommittedTermMatchesEntry => st.committed.iter().all(|c| !holders(st, c).is_empty()),
        LeaderCompleteness => primaries(st).all(|p| {
            st.committed
                .iter()
                .all(|c| c.term >= srv(p).term || in_log(c.index, c.term, st, p))
        }),
        LogsLaterThanCommittedMustHaveCommitted => st.ids().all(|s| {
            let newest = srv(s).log.iter().copied().max();
            st.committed.iter().all(|c| {
                newest.is_none_or(|e| e <= c.term) || in_log(c.index, c.term, st, s)
            })
        }),
        ActiveConfigsOverlapWithCommittedEntry => {
            let active = active_config_set(st);
            st.committed.iter().all(|c| {
                let h = holders(st, c);
                active.iter().all(|s| every_quorum_meets(srv(s).config, h))
            })
        }
        NewerConfigsDisableCommitsInOlderTerm => primaries(st).all(|p| {
            let term = srv(p).term;
            let newest_config_term = st.servers.iter().map(|n| n.config_term).max().unwrap_or(0);
            term >= newest_config_term
                || every_quorum_meets(srv(p).config, st.servers_where(|n| n.term > term))
        }),
        ConfigsNonEmpty => st.servers.iter().all(|n| !n.config.is_empty()),
        StateMachineSafety => {
            let mut by_index: BTreeMap<u32, u32> = BTreeMap::new();
            st.committed
                .iter()
                .all(|c| *by_index.entry(c.index).or_insert(c.term) == c.term)
        }
    }
}

/// Whether every conjunct in `set` holds.
pub fn holds_all(set: ConjunctSet, st: &ReplicaSetState, bounds: &ModelBounds) -> bool {
    first_failing(set, st, bounds).is_none()
}

/// First conjunct of `set` (in conjunct order) that fails on `st`.
pub fn first_failing(set: ConjunctSet, st: &ReplicaSetState, bounds: &ModelBounds) -> Option<InvariantId> {
    set.iter().find(|&id| !eval_invariant(id, st, bounds))
}

/// Evaluates every registered predicate without short-circuiting.
pub fn eval_all(st: &ReplicaSetState, bounds: &ModelBounds) -> BTreeMap<InvariantId, bool> {
    InvariantId::ALL
        .into_iter()
        .map(|id| (id, eval_invariant(id, st, bounds)))
        .collect()
}

/// Majority quorums of a server's config, for callers that already hold a state.
pub fn config_quorums(st: &ReplicaSetState, s: ServerId) -> &'static [ServerSet] {
    quorums_of(st.server(s).config)
}
