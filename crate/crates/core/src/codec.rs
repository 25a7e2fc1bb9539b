//! JSON wire format for states, bounds, actions and traces.
//!
//! Object keys are emitted in a fixed order, per-server data as arrays sorted
//! by server id, and sets as sorted arrays, so serialization is a
//! deterministic function of the value.

use std::collections::BTreeSet;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::action::{Action, ActionKind};
use crate::error::ModelError;
use crate::protocol::{Guard, Mutations};
use crate::types::{CommitRecord, ModelBounds, ReplicaSetState, Role, ServerId, ServerSet, ServerState};

impl Serialize for ServerId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ServerId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(D::Error::custom)
    }
}

impl Serialize for ServerSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ServerSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let ids = Vec::<ServerId>::deserialize(d)?;
        let set: ServerSet = ids.iter().copied().collect();
        if set.len() != ids.len() || ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(D::Error::custom("server sets must be sorted and duplicate-free"));
        }
        Ok(set)
    }
}

impl Serialize for Role {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "Primary" => Ok(Role::Primary),
            "Secondary" => Ok(Role::Secondary),
            other => Err(D::Error::custom(format!("unknown role `{other}`"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServerWire {
    id: ServerId,
    log: Vec<u32>,
    term: u32,
    role: Role,
    config: ServerSet,
    #[serde(rename = "configVersion")]
    config_version: u32,
    #[serde(rename = "configTerm")]
    config_term: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateWire {
    servers: Vec<ServerWire>,
    committed: Vec<(u32, u32)>,
}

impl Serialize for ReplicaSetState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire = StateWire {
            servers: self
                .servers
                .iter()
                .enumerate()
                .map(|(i, n)| ServerWire {
                    id: ServerId(i as u8),
                    log: n.log.clone(),
                    term: n.term,
                    role: n.role,
                    config: n.config,
                    config_version: n.config_version,
                    config_term: n.config_term,
                })
                .collect(),
            committed: self.committed.iter().map(|c| (c.index, c.term)).collect(),
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ReplicaSetState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = StateWire::deserialize(d)?;
        let mut servers = Vec::with_capacity(wire.servers.len());
        for (i, n) in wire.servers.into_iter().enumerate() {
            if n.id.index() != i {
                return Err(D::Error::custom(format!(
                    "server entries must be n1, n2, ... in order; found {} at position {}",
                    n.id,
                    i + 1
                )));
            }
            servers.push(ServerState {
                log: n.log,
                term: n.term,
                role: n.role,
                config: n.config,
                config_version: n.config_version,
                config_term: n.config_term,
            });
        }
        if wire.committed.windows(2).any(|w| w[0] >= w[1]) {
            return Err(D::Error::custom("committed pairs must be sorted and duplicate-free"));
        }
        let committed: BTreeSet<CommitRecord> = wire
            .committed
            .into_iter()
            .map(|(i, t)| CommitRecord::new(i, t))
            .collect();
        Ok(ReplicaSetState { servers, committed })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsWire {
    servers: Vec<ServerId>,
    #[serde(rename = "maxTerm")]
    max_term: u32,
    #[serde(rename = "maxLogLen")]
    max_log_len: u32,
    #[serde(rename = "maxConfigVersion")]
    max_config_version: u32,
}

impl Serialize for ModelBounds {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        BoundsWire {
            servers: self.server_ids().collect(),
            max_term: self.max_term,
            max_log_len: self.max_log_len,
            max_config_version: self.max_config_version,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelBounds {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = BoundsWire::deserialize(d)?;
        if wire.servers.iter().enumerate().any(|(i, id)| id.index() != i) {
            return Err(D::Error::custom("bounds servers must be n1, n2, ... in order"));
        }
        ModelBounds::new(
            wire.servers.len(),
            wire.max_term,
            wire.max_log_len,
            wire.max_config_version,
        )
        .map_err(D::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionWire {
    kind: String,
    s: ServerId,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    t: Option<ServerId>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none", default)]
    quorum: Option<ServerSet>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    m: Option<ServerSet>,
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ActionWire {
            kind: self.kind().name().to_string(),
            s: self.server(),
            t: self.target(),
            quorum: self.quorum(),
            m: self.members(),
        }
        .serialize(s)
    }
}

fn action_from_wire(w: ActionWire) -> Result<Action, ModelError> {
    let kind: ActionKind = w.kind.parse()?;
    let s = w.s;
    let missing = |arg: &str| ModelError::Malformed(format!("{kind} requires argument `{arg}`"));
    let extra = |arg: &str| ModelError::Malformed(format!("{kind} does not take argument `{arg}`"));
    let needs_t = matches!(
        kind,
        ActionKind::GetEntries | ActionKind::RollbackEntries | ActionKind::SendConfig | ActionKind::UpdateTerms
    );
    let needs_q = matches!(kind, ActionKind::CommitEntry | ActionKind::BecomeLeader);
    let needs_m = kind == ActionKind::Reconfig;
    if !needs_t && w.t.is_some() {
        return Err(extra("t"));
    }
    if !needs_q && w.quorum.is_some() {
        return Err(extra("Q"));
    }
    if !needs_m && w.m.is_some() {
        return Err(extra("m"));
    }
    let t = || w.t.ok_or_else(|| missing("t"));
    let q = || match w.quorum {
        Some(q) if q.is_empty() => Err(ModelError::Malformed(format!("{kind}: `Q` is empty"))),
        Some(q) => Ok(q),
        None => Err(missing("Q")),
    };
    Ok(match kind {
        ActionKind::ClientRequest => Action::ClientRequest { s },
        ActionKind::GetEntries => Action::GetEntries { s, t: t()? },
        ActionKind::RollbackEntries => Action::RollbackEntries { s, t: t()? },
        ActionKind::CommitEntry => Action::CommitEntry { s, quorum: q()? },
        ActionKind::SendConfig => Action::SendConfig { s, t: t()? },
        ActionKind::Reconfig => match w.m {
            Some(m) if m.is_empty() => {
                return Err(ModelError::Malformed("Reconfig: `m` is empty".into()))
            }
            Some(members) => Action::Reconfig { s, members },
            None => return Err(missing("m")),
        },
        ActionKind::BecomeLeader => Action::BecomeLeader { s, quorum: q()? },
        ActionKind::UpdateTerms => Action::UpdateTerms { s, t: t()? },
    })
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        action_from_wire(ActionWire::deserialize(d)?).map_err(D::Error::custom)
    }
}

impl Serialize for Guard {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Guard {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl Serialize for Mutations {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.disabled())
    }
}

impl<'de> Deserialize<'de> for Mutations {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let guards = Vec::<Guard>::deserialize(d)?;
        Ok(guards.into_iter().fold(Mutations::none(), Mutations::disable))
    }
}

impl Serialize for crate::invariants::InvariantId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for crate::invariants::InvariantId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl Serialize for ActionKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for ActionKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

/// Compact JSON text of any serializable value.
pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("model values always serialize")
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, ModelError> {
    serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))
}
