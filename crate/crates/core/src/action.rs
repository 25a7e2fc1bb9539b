//! Protocol action instances.

use std::fmt;
use std::str::FromStr;

use crate::error::ModelError;
use crate::types::{ServerId, ServerSet};

/// The eight actions of the next-state relation, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionKind {
    ClientRequest,
    GetEntries,
    RollbackEntries,
    CommitEntry,
    SendConfig,
    Reconfig,
    BecomeLeader,
    UpdateTerms,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::ClientRequest,
        ActionKind::GetEntries,
        ActionKind::RollbackEntries,
        ActionKind::CommitEntry,
        ActionKind::SendConfig,
        ActionKind::Reconfig,
        ActionKind::BecomeLeader,
        ActionKind::UpdateTerms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::ClientRequest => "ClientRequest",
            ActionKind::GetEntries => "GetEntries",
            ActionKind::RollbackEntries => "RollbackEntries",
            ActionKind::CommitEntry => "CommitEntry",
            ActionKind::SendConfig => "SendConfig",
            ActionKind::Reconfig => "Reconfig",
            ActionKind::BecomeLeader => "BecomeLeader",
            ActionKind::UpdateTerms => "UpdateTerms",
        }
    }

    pub fn position(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ModelError::Malformed(format!("unknown action kind `{s}`")))
    }
}

/// One parametrized protocol step. The derived order sorts by kind, then by
/// arguments, which is the order transitions are enumerated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    ClientRequest { s: ServerId },
    GetEntries { s: ServerId, t: ServerId },
    RollbackEntries { s: ServerId, t: ServerId },
    CommitEntry { s: ServerId, quorum: ServerSet },
    SendConfig { s: ServerId, t: ServerId },
    Reconfig { s: ServerId, members: ServerSet },
    BecomeLeader { s: ServerId, quorum: ServerSet },
    UpdateTerms { s: ServerId, t: ServerId },
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        match self {
            Action::ClientRequest { .. } => ActionKind::ClientRequest,
            Action::GetEntries { .. } => ActionKind::GetEntries,
            Action::RollbackEntries { .. } => ActionKind::RollbackEntries,
            Action::CommitEntry { .. } => ActionKind::CommitEntry,
            Action::SendConfig { .. } => ActionKind::SendConfig,
            Action::Reconfig { .. } => ActionKind::Reconfig,
            Action::BecomeLeader { .. } => ActionKind::BecomeLeader,
            Action::UpdateTerms { .. } => ActionKind::UpdateTerms,
        }
    }

    pub fn server(&self) -> ServerId {
        match *self {
            Action::ClientRequest { s }
            | Action::GetEntries { s, .. }
            | Action::RollbackEntries { s, .. }
            | Action::CommitEntry { s, .. }
            | Action::SendConfig { s, .. }
            | Action::Reconfig { s, .. }
            | Action::BecomeLeader { s, .. }
            | Action::UpdateTerms { s, .. } => s,
        }
    }

    /// Second server argument, for the kinds that take one.
    pub fn target(&self) -> Option<ServerId> {
        match *self {
            Action::GetEntries { t, .. }
            | Action::RollbackEntries { t, .. }
            | Action::SendConfig { t, .. }
            | Action::UpdateTerms { t, .. } => Some(t),
            _ => None,
        }
    }

    /// Quorum argument of CommitEntry and BecomeLeader.
    pub fn quorum(&self) -> Option<ServerSet> {
        match *self {
            Action::CommitEntry { quorum, .. } | Action::BecomeLeader { quorum, .. } => {
                Some(quorum)
            }
            _ => None,
        }
    }

    /// New member set of Reconfig.
    pub fn members(&self) -> Option<ServerSet> {
        match *self {
            Action::Reconfig { members, .. } => Some(members),
            _ => None,
        }
    }

    /// Checks that every server argument is inside `servers` and set
    /// arguments are non-empty.
    pub fn validate(&self, servers: ServerSet) -> Result<(), ModelError> {
        let check = |id: ServerId| {
            if servers.contains(id) {
                Ok(())
            } else {
                Err(ModelError::Malformed(format!("server {id} is not in the model")))
            }
        };
        check(self.server())?;
        if let Some(t) = self.target() {
            check(t)?;
        }
        if let Some(set) = self.quorum().or(self.members()) {
            if set.is_empty() {
                return Err(ModelError::Malformed(format!("{}: empty server set", self.kind())));
            }
            if !set.is_subset(servers) {
                return Err(ModelError::Malformed(format!(
                    "{}: {set} is not a subset of the model's servers",
                    self.kind()
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Action::ClientRequest { s } => write!(f, "ClientRequest({s})"),
            Action::GetEntries { s, t } => write!(f, "GetEntries({s}, {t})"),
            Action::RollbackEntries { s, t } => write!(f, "RollbackEntries({s}, {t})"),
            Action::CommitEntry { s, quorum } => write!(f, "CommitEntry({s}, {quorum})"),
            Action::SendConfig { s, t } => write!(f, "SendConfig({s}, {t})"),
            Action::Reconfig { s, members } => write!(f, "Reconfig({s}, {members})"),
            Action::BecomeLeader { s, quorum } => write!(f, "BecomeLeader({s}, {quorum})"),
            Action::UpdateTerms { s, t } => write!(f, "UpdateTerms({s}, {t})"),
        }
    }
}
