//! Naive reference semantics for cross-checking `mrr-core`.
//!
//! Everything here is written directly from the action definitions with
//! ordinary collections and no shortcuts: quorums are found by scanning all
//! subsets, every parameter tuple (including empty and non-quorum sets) is
//! tried, and reachability is a plain depth-first search. Only the data
//! types are shared with the core crate.

use std::collections::{BTreeSet, HashSet};

use mrr_core::{
    Action, CommitRecord, Guard, ModelBounds, Mutations, ReplicaSetState, Role, ServerId,
    ServerSet, ServerState,
};

type Members = BTreeSet<usize>;

fn members(set: ServerSet) -> Members {
    (0..8).filter(|&i| set.0 >> i & 1 == 1).collect()
}

fn to_set(m: &Members) -> ServerSet {
    ServerSet(m.iter().fold(0u8, |acc, &i| acc | 1 << i))
}

fn all_subsets(universe: &Members) -> Vec<Members> {
    let items: Vec<usize> = universe.iter().copied().collect();
    (0u32..1 << items.len())
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &i)| i)
                .collect()
        })
        .collect()
}

/// Majority subsets of `m`, found by scanning every subset.
pub fn quorums(m: &Members) -> Vec<Members> {
    all_subsets(m)
        .into_iter()
        .filter(|q| q.len() * 2 > m.len())
        .collect()
}

fn is_quorum(q: &Members, m: &Members) -> bool {
    quorums(m).contains(q)
}

fn stamp(n: &ServerState) -> (u32, u32) {
    // compared by term first, then version
    (n.config_term, n.config_version)
}

fn last(log: &[u32]) -> u32 {
    log.last().copied().unwrap_or(0)
}

fn has_entry(n: &ServerState, index: u32, term: u32) -> bool {
    index >= 1 && n.log.len() >= index as usize && n.log[index as usize - 1] == term
}

fn primary(n: &ServerState) -> bool {
    n.role == Role::Primary
}

/// Whether `action` is enabled in `st`, bounds pruning included.
pub fn enabled(st: &ReplicaSetState, b: &ModelBounds, muts: &Mutations, action: &Action) -> bool {
    let srv = |id: ServerId| &st.servers[id.0 as usize];
    let on = |g: Guard| muts.is_enabled(g);
    match *action {
        Action::ClientRequest { s } => primary(srv(s)) && (srv(s).log.len() as u32) < b.max_log_len,
        Action::GetEntries { s, t } => {
            let (a, c) = (&srv(s).log, &srv(t).log);
            s != t
                && (!on(Guard::SyncOnSecondary) || !primary(srv(s)))
                && c.len() > a.len()
                && (a.is_empty() || a[a.len() - 1] == c[a.len() - 1])
        }
        Action::RollbackEntries { s, t } => {
            let (a, c) = (&srv(s).log, &srv(t).log);
            let diverges = a.len() > c.len() || (!a.is_empty() && a[a.len() - 1] != c[a.len() - 1]);
            s != t
                && (!on(Guard::SyncOnSecondary) || !primary(srv(s)))
                && !a.is_empty()
                && last(a) < last(c)
                && (!on(Guard::RollbackDivergence) || diverges)
        }
        Action::CommitEntry { s, quorum } => {
            let p = srv(s);
            let q = members(quorum);
            let ind = p.log.len() as u32;
            primary(p)
                && is_quorum(&q, &members(p.config))
                && ind >= 1
                && p.log[ind as usize - 1] == p.term
                && q.iter().all(|&n| {
                    let peer = &st.servers[n];
                    has_entry(peer, ind, p.term) && peer.term == p.term
                })
                && !st.committed.contains(&CommitRecord { index: ind, term: p.term })
        }
        Action::SendConfig { s, t } => {
            s != t && !primary(srv(t)) && stamp(srv(s)) > stamp(srv(t))
        }
        Action::Reconfig { s, members: m } => {
            let p = srv(s);
            let old = members(p.config);
            let new = members(m);
            let overlap = quorums(&old)
                .iter()
                .all(|q1| quorums(&new).iter().all(|q2| q1.intersection(q2).next().is_some()));
            let some_quorum = |pred: &dyn Fn(&ServerState) -> bool| {
                quorums(&old).iter().any(|q| q.iter().all(|&n| pred(&st.servers[n])))
            };
            primary(p)
                && p.config_version < b.max_config_version
                && !new.is_empty()
                && new.contains(&(s.0 as usize))
                && new != old
                && (!on(Guard::ReconfigQuorumsOverlap) || overlap)
                && (!on(Guard::ReconfigConfigQuorum)
                    || some_quorum(&|n| {
                        n.config_version == p.config_version && n.config_term == p.config_term
                    }))
                && (!on(Guard::ReconfigTermQuorum) || some_quorum(&|n| n.term == p.term))
                && (!on(Guard::ReconfigOplogCommitment)
                    || some_quorum(&|n| st.committed.iter().all(|c| has_entry(n, c.index, c.term))))
        }
        Action::BecomeLeader { s, quorum } => {
            let c = srv(s);
            let q = members(quorum);
            let new_term = c.term + 1;
            new_term <= b.max_term
                && q.contains(&(s.0 as usize))
                && is_quorum(&q, &members(c.config))
                && q.iter().all(|&v| {
                    let voter = &st.servers[v];
                    voter.term < new_term
                        && stamp(c) >= stamp(voter)
                        && (last(&c.log) > last(&voter.log)
                            || (last(&c.log) == last(&voter.log) && c.log.len() >= voter.log.len()))
                })
        }
        Action::UpdateTerms { s, t } => s != t && srv(s).term > srv(t).term,
    }
}

/// Successor of an enabled action.
pub fn apply(st: &ReplicaSetState, action: &Action) -> ReplicaSetState {
    let mut next = st.clone();
    match *action {
        Action::ClientRequest { s } => {
            let term = st.servers[s.0 as usize].term;
            next.servers[s.0 as usize].log.push(term);
        }
        Action::GetEntries { s, t } => {
            let k = st.servers[s.0 as usize].log.len();
            let e = st.servers[t.0 as usize].log[k];
            next.servers[s.0 as usize].log.push(e);
        }
        Action::RollbackEntries { s, .. } => {
            next.servers[s.0 as usize].log.pop();
        }
        Action::CommitEntry { s, .. } => {
            let p = &st.servers[s.0 as usize];
            next.committed.insert(CommitRecord { index: p.log.len() as u32, term: p.term });
        }
        Action::SendConfig { s, t } => {
            let src = st.servers[s.0 as usize].clone();
            let dst = &mut next.servers[t.0 as usize];
            dst.config = src.config;
            dst.config_version = src.config_version;
            dst.config_term = src.config_term;
        }
        Action::Reconfig { s, members } => {
            let p = &mut next.servers[s.0 as usize];
            p.config = members;
            p.config_version += 1;
            p.config_term = p.term;
        }
        Action::BecomeLeader { s, quorum } => {
            let new_term = st.servers[s.0 as usize].term + 1;
            for v in self::members(quorum) {
                next.servers[v].term = new_term;
                next.servers[v].role = if v == s.0 as usize { Role::Primary } else { Role::Secondary };
            }
            next.servers[s.0 as usize].config_term = new_term;
        }
        Action::UpdateTerms { s, t } => {
            next.servers[t.0 as usize].term = st.servers[s.0 as usize].term;
            next.servers[t.0 as usize].role = Role::Secondary;
        }
    }
    next
}

/// Every action over every parameter tuple: servers for `s` and `t`, and
/// every subset of the server set (empty included) for set arguments.
pub fn all_actions(b: &ModelBounds) -> Vec<Action> {
    let ids: Vec<ServerId> = (0..b.servers as u8).map(ServerId).collect();
    let universe: Members = (0..b.servers).collect();
    let sets: Vec<ServerSet> = all_subsets(&universe).iter().map(to_set).collect();
    let mut out = Vec::new();
    for &s in &ids {
        out.push(Action::ClientRequest { s });
        for &t in &ids {
            out.push(Action::GetEntries { s, t });
            out.push(Action::RollbackEntries { s, t });
            out.push(Action::SendConfig { s, t });
            out.push(Action::UpdateTerms { s, t });
        }
        for &set in &sets {
            out.push(Action::CommitEntry { s, quorum: set });
            out.push(Action::Reconfig { s, members: set });
            out.push(Action::BecomeLeader { s, quorum: set });
        }
    }
    out.sort();
    out
}

/// Enabled transitions, sorted by action.
pub fn transitions(st: &ReplicaSetState, b: &ModelBounds, muts: &Mutations) -> Vec<(Action, ReplicaSetState)> {
    all_actions(b)
        .into_iter()
        .filter(|a| enabled(st, b, muts, a))
        .map(|a| {
            let next = apply(st, &a);
            (a, next)
        })
        .collect()
}

pub fn initial(b: &ModelBounds) -> ReplicaSetState {
    let all = ServerSet(((1u16 << b.servers) - 1) as u8);
    ReplicaSetState {
        servers: (0..b.servers)
            .map(|_| ServerState {
                log: vec![],
                term: 0,
                role: Role::Secondary,
                config: all,
                config_version: 1,
                config_term: 0,
            })
            .collect(),
        committed: BTreeSet::new(),
    }
}

/// Reachable states by depth-first search.
pub fn reachable(b: &ModelBounds, muts: &Mutations) -> HashSet<ReplicaSetState> {
    let init = initial(b);
    let mut seen = HashSet::new();
    let mut stack = vec![init.clone()];
    seen.insert(init);
    while let Some(st) = stack.pop() {
        for (_, next) in transitions(&st, b, muts) {
            if seen.insert(next.clone()) {
                stack.push(next);
            }
        }
    }
    seen
}

/// Every state within the type bounds, for very small scopes only.
pub fn all_type_ok_states(b: &ModelBounds) -> Vec<ReplicaSetState> {
    let universe: Members = (0..b.servers).collect();
    let mut logs: Vec<Vec<u32>> = vec![vec![]];
    let mut frontier: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..b.max_log_len {
        let mut grown = Vec::new();
        for l in &frontier {
            for e in 0..=b.max_term {
                let mut l2 = l.clone();
                l2.push(e);
                grown.push(l2);
            }
        }
        logs.extend(grown.iter().cloned());
        frontier = grown;
    }
    let mut singles = Vec::new();
    for log in &logs {
        for term in 0..=b.max_term {
            for role in [Role::Secondary, Role::Primary] {
                for cfg in all_subsets(&universe) {
                    for v in 0..=b.max_config_version {
                        for ct in 0..=b.max_term {
                            singles.push(ServerState {
                                log: log.clone(),
                                term,
                                role,
                                config: to_set(&cfg),
                                config_version: v,
                                config_term: ct,
                            });
                        }
                    }
                }
            }
        }
    }
    let records: Vec<CommitRecord> = (0..=b.max_log_len)
        .flat_map(|i| (0..=b.max_term).map(move |t| CommitRecord { index: i, term: t }))
        .collect();
    let mut tuples: Vec<Vec<ServerState>> = vec![vec![]];
    for _ in 0..b.servers {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                singles.iter().map(move |s| {
                    let mut t = t.clone();
                    t.push(s.clone());
                    t
                })
            })
            .collect();
    }
    let mut out = Vec::new();
    for servers in tuples {
        for mask in 0u32..1 << records.len() {
            let committed = records
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, r)| *r)
                .collect();
            out.push(ReplicaSetState { servers: servers.clone(), committed });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quorum_scan_matches_majority_counts() {
        let m: Members = (0..5).collect();
        // C(5,3) + C(5,4) + C(5,5)
        assert_eq!(quorums(&m).len(), 16);
        assert!(quorums(&Members::new()).is_empty());
    }

    #[test]
    fn single_server_reaches_four_states() {
        let b = ModelBounds::new(1, 1, 1, 1).unwrap();
        assert_eq!(reachable(&b, &Mutations::none()).len(), 4);
    }

    #[test]
    fn type_ok_enumeration_size() {
        let b = ModelBounds::new(1, 1, 1, 1).unwrap();
        assert_eq!(all_type_ok_states(&b).len(), 96 * 16);
    }
}
