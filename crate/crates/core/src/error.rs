use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    /// The action's guard does not hold in the given state.
    #[error("not enabled: {0}")]
    NotEnabled(String),
    #[error("empty config")]
    EmptyConfig,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("unknown invariant `{0}`")]
    UnknownInvariant(String),
    #[error("state space of {estimate} states exceeds the budget of {budget}")]
    BudgetExceeded { estimate: u128, budget: u128 },
    #[error("replay failed at step {step}: {reason}")]
    Replay { step: usize, reason: String },
}

impl ModelError {
    pub fn is_not_enabled(&self) -> bool {
        matches!(self, ModelError::NotEnabled(_))
    }
}
