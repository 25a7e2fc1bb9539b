//! Executable model of a logless dynamic-reconfiguration protocol for a
//! primary-backup replicated log, plus the machinery to check it: a bounded
//! explicit-state explorer and an inductive-invariant checker.

pub mod action;
pub mod codec;
pub mod error;
pub mod explorer;
pub mod induction;
pub mod invariants;
pub mod protocol;
pub mod quorum;
pub mod types;

pub use action::{Action, ActionKind};
pub use error::ModelError;
pub use explorer::{bfs_check, random_walk, replay, BfsOptions, CheckReport, Trace, WalkReport};
pub use induction::{check_consecution_exhaustive, check_consecution_sampled, check_initiation, random_state, ConsecutionReport, CtiRecord, GoalMatrix, Query};
pub use invariants::{ConjunctSet, InvariantId};
pub use protocol::{Guard, Model, Mutations};
pub use types::{
    CommitRecord, ConfigStamp, ModelBounds, ReplicaSetState, Role, ServerId, ServerSet,
    ServerState,
};
