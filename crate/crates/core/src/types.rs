//! Value types for replica-set states.
//!
//! Servers are identified by a small index and displayed as `n1`, `n2`, ...
//! Member sets are bitmasks over those indices, so a model holds at most
//! [`MAX_SERVERS`] servers.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::ModelError;

pub type Term = u32;
pub type Version = u32;
pub type LogIndex = u32;

/// Largest supported replica set.
pub const MAX_SERVERS: usize = 8;

/// Server identifier. `ServerId(0)` is rendered as `n1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServerId(pub u8);

impl ServerId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    fn bit(self) -> u8 {
        1u8 << self.0
    }
}

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0 as u32 + 1)
    }
}

impl FromStr for ServerId {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::Malformed(format!("invalid server id `{s}`"));
        let digits = s.strip_prefix('n').ok_or_else(bad)?;
        let n: usize = digits.parse().map_err(|_| bad())?;
        if n == 0 || n > MAX_SERVERS || digits.starts_with('0') {
            return Err(bad());
        }
        Ok(ServerId((n - 1) as u8))
    }
}

/// A set of servers as a bitmask. Ordering is by mask value, which is the
/// binary-counter enumeration order used everywhere subsets are listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ServerSet(pub u8);

impl ServerSet {
    pub const EMPTY: ServerSet = ServerSet(0);

    /// `{n1, ..., nk}`.
    pub fn first(k: usize) -> ServerSet {
        assert!(k <= MAX_SERVERS);
        ServerSet(((1u16 << k) - 1) as u8)
    }

    pub fn singleton(s: ServerId) -> ServerSet {
        ServerSet(s.bit())
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, s: ServerId) -> bool {
        s.index() < MAX_SERVERS && self.0 & s.bit() != 0
    }

    pub fn insert(&mut self, s: ServerId) {
        self.0 |= s.bit();
    }

    pub fn with(mut self, s: ServerId) -> ServerSet {
        self.insert(s);
        self
    }

    pub fn is_subset(self, other: ServerSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: ServerSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn union(self, other: ServerSet) -> ServerSet {
        ServerSet(self.0 | other.0)
    }

    pub fn difference(self, other: ServerSet) -> ServerSet {
        ServerSet(self.0 & !other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = ServerId> {
        (0..MAX_SERVERS as u8)
            .filter(move |i| self.0 & (1 << i) != 0)
            .map(ServerId)
    }

    /// Every subset of `self`, including the empty set, in increasing mask order.
    pub fn subsets(self) -> impl Iterator<Item = ServerSet> {
        let full = self.0 as u16;
        (0..=full)
            .filter(move |m| m & !full == 0)
            .map(|m| ServerSet(m as u8))
    }
}

impl FromIterator<ServerId> for ServerSet {
    fn from_iter<I: IntoIterator<Item = ServerId>>(iter: I) -> Self {
        let mut set = ServerSet::EMPTY;
        for s in iter {
            set.insert(s);
        }
        set
    }
}

impl fmt::Display for ServerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

/// Configuration stamp. Stamps compare by term first, then version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConfigStamp {
    pub version: Version,
    pub term: Term,
}

impl ConfigStamp {
    pub fn new(version: Version, term: Term) -> Self {
        ConfigStamp { version, term }
    }
}

impl Ord for ConfigStamp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.term, self.version).cmp(&(other.term, other.version))
    }
}

impl PartialOrd for ConfigStamp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ConfigStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(v{},t{})", self.version, self.term)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Primary,
    Secondary,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Primary => "Primary",
            Role::Secondary => "Secondary",
        }
    }
}

/// A committed log entry, identified by its 1-based index and its term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommitRecord {
    pub index: LogIndex,
    pub term: Term,
}

impl CommitRecord {
    pub fn new(index: LogIndex, term: Term) -> Self {
        CommitRecord { index, term }
    }
}

/// Per-server slice of the replica-set state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ServerState {
    /// Entry terms, 1-indexed in the protocol (`log[0]` is index 1).
    pub log: Vec<Term>,
    pub term: Term,
    pub role: Role,
    pub config: ServerSet,
    pub config_version: Version,
    pub config_term: Term,
}

impl ServerState {
    pub fn stamp(&self) -> ConfigStamp {
        ConfigStamp::new(self.config_version, self.config_term)
    }

    pub fn last_term(&self) -> Term {
        last_term(&self.log)
    }

    pub fn is_primary(&self) -> bool {
        self.role == Role::Primary
    }

    /// Entry term at a 1-based index.
    pub fn entry(&self, index: LogIndex) -> Option<Term> {
        if index == 0 {
            return None;
        }
        self.log.get(index as usize - 1).copied()
    }
}

/// Last entry's term, or 0 for an empty log.
pub fn last_term(log: &[Term]) -> Term {
    log.last().copied().unwrap_or(0)
}

/// Full protocol state. `servers[i]` belongs to `ServerId(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReplicaSetState {
    pub servers: Vec<ServerState>,
    pub committed: BTreeSet<CommitRecord>,
}

impl ReplicaSetState {
    pub fn server(&self, s: ServerId) -> &ServerState {
        &self.servers[s.index()]
    }

    pub fn server_mut(&mut self, s: ServerId) -> &mut ServerState {
        &mut self.servers[s.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = ServerId> {
        (0..self.servers.len() as u8).map(ServerId)
    }

    pub fn all_servers(&self) -> ServerSet {
        ServerSet::first(self.servers.len().min(MAX_SERVERS))
    }

    /// Servers whose mask bit satisfies `pred`.
    pub fn servers_where(&self, mut pred: impl FnMut(&ServerState) -> bool) -> ServerSet {
        let mut set = ServerSet::EMPTY;
        for (i, srv) in self.servers.iter().enumerate().take(MAX_SERVERS) {
            if pred(srv) {
                set.insert(ServerId(i as u8));
            }
        }
        set
    }
}

impl fmt::Display for ReplicaSetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, srv) in self.servers.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            let role = if srv.is_primary() { "P" } else { "S" };
            write!(
                f,
                "{}:(log={:?}, tm={}, {}, cfg={}@{})",
                ServerId(i as u8),
                srv.log,
                srv.term,
                role,
                srv.config,
                srv.stamp()
            )?;
        }
        f.write_str("; committed={")?;
        for (i, c) in self.committed.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},{})", c.index, c.term)?;
        }
        f.write_str("}")
    }
}

/// Finite scope for checking. The server set is always `n1..=nN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModelBounds {
    pub servers: usize,
    pub max_term: Term,
    pub max_log_len: u32,
    pub max_config_version: Version,
}

impl ModelBounds {
    pub fn new(
        servers: usize,
        max_term: Term,
        max_log_len: u32,
        max_config_version: Version,
    ) -> Result<Self, ModelError> {
        let b = ModelBounds {
            servers,
            max_term,
            max_log_len,
            max_config_version,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.servers == 0 || self.servers > MAX_SERVERS {
            return Err(ModelError::InvalidBounds(format!(
                "server count must be in 1..={MAX_SERVERS}, got {}",
                self.servers
            )));
        }
        if self.max_term < 1 {
            return Err(ModelError::InvalidBounds("maxTerm must be >= 1".into()));
        }
        if self.max_config_version < 1 {
            return Err(ModelError::InvalidBounds(
                "maxConfigVersion must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn server_set(&self) -> ServerSet {
        ServerSet::first(self.servers)
    }

    pub fn server_ids(&self) -> impl Iterator<Item = ServerId> {
        (0..self.servers as u8).map(ServerId)
    }
}

impl fmt::Display for ModelBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "servers={} maxTerm={} maxLogLen={} maxConfigVersion={}",
            self.servers, self.max_term, self.max_log_len, self.max_config_version
        )
    }
}
