//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mrr_core::{ActionKind, Guard, InvariantId, ModelBounds, ModelError, Mutations};

#[derive(Debug, Parser)]
#[command(name = "mrr", version, about = "Model checker and induction checker for logless Raft reconfiguration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Breadth-first search of the reachable states, checking invariants.
    Check(CheckArgs),
    /// Initiation and consecution of the inductive invariant.
    Induction(InductionArgs),
    /// Seeded random walk from the initial state.
    Simulate(SimulateArgs),
    /// Re-validate a trace file and evaluate invariants at every step.
    Replay(ReplayArgs),
    /// List the invariant names with one-line definitions.
    Invariants(InvariantsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// Number of servers (n1..nN).
    #[arg(long, default_value_t = 3)]
    pub servers: usize,
    #[arg(long, default_value_t = 3)]
    pub max_term: u32,
    #[arg(long, default_value_t = 2)]
    pub max_log_len: u32,
    #[arg(long, default_value_t = 3)]
    pub max_config_version: u32,
}

impl BoundsArgs {
    pub fn bounds(&self) -> Result<ModelBounds, ModelError> {
        ModelBounds::new(self.servers, self.max_term, self.max_log_len, self.max_config_version)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MutationArgs {
    /// Drop every Reconfig safety guard.
    #[arg(long)]
    pub disable_reconfig_guards: bool,
    /// Drop one guard; may be repeated.
    #[arg(long = "disable-guard", value_name = "GUARD")]
    pub disable_guard: Vec<Guard>,
}

impl MutationArgs {
    pub fn mutations(&self) -> Mutations {
        let base = if self.disable_reconfig_guards {
            Mutations::without_reconfig_guards()
        } else {
            Mutations::none()
        };
        self.disable_guard.iter().fold(base, |m, &g| m.disable(g))
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the JSON report to this file.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Print the JSON report on stdout instead of a summary.
    #[arg(long)]
    pub json: bool,
    /// Worker threads; 0 picks one per core.
    #[arg(long, env = "MRR_THREADS", default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub bounds: BoundsArgs,
    /// Comma-separated invariant names; defaults to all.
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub invariants: Vec<InvariantId>,
    #[arg(long, default_value_t = 50_000_000)]
    pub max_states: u64,
    /// Stop after the level where the first violation appears.
    #[arg(long)]
    pub stop_at_first: bool,
    /// Write the shallowest violating trace to this file.
    #[arg(long, value_name = "FILE")]
    pub trace_out: Option<PathBuf>,
    #[command(flatten)]
    pub mutations: MutationArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sample,
    Exhaustive,
}

#[derive(Debug, Args)]
pub struct InductionArgs {
    #[arg(long, value_enum, default_value_t = Mode::Sample)]
    pub mode: Mode,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    /// Conjuncts assumed in the pre-state; defaults to all twenty.
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub candidate: Vec<InvariantId>,
    /// Conjuncts checked in the post-state; defaults to the candidate.
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub goals: Vec<InvariantId>,
    /// Remove a conjunct from both candidate and goals; may be repeated.
    #[arg(long = "drop-conjunct", value_name = "NAME")]
    pub drop_conjunct: Vec<InvariantId>,
    /// Comma-separated action kinds; defaults to all.
    #[arg(long, value_delimiter = ',', value_name = "KINDS")]
    pub actions: Vec<ActionKind>,
    /// States drawn at most (sample mode).
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    /// Stop once this many drawn states satisfied the candidate.
    #[arg(long)]
    pub accepted: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CTI records kept in the report; the matrix counts all of them.
    #[arg(long, default_value_t = 100)]
    pub max_ctis: usize,
    /// Largest state-space size exhaustive mode accepts.
    #[arg(long, default_value_t = 100_000_000)]
    pub budget: u128,
    /// Stop at the first batch that contains a CTI.
    #[arg(long)]
    pub stop_at_first: bool,
    #[command(flatten)]
    pub mutations: MutationArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[arg(long, default_value_t = 1_000)]
    pub steps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub invariants: Vec<InvariantId>,
    #[arg(long, value_name = "FILE")]
    pub trace_out: Option<PathBuf>,
    #[command(flatten)]
    pub mutations: MutationArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Trace file as written by `check --trace-out` or `simulate --trace-out`.
    pub trace: PathBuf,
    #[arg(long, value_delimiter = ',', value_name = "NAMES")]
    pub invariants: Vec<InvariantId>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct InvariantsArgs {
    #[arg(long)]
    pub json: bool,
}
