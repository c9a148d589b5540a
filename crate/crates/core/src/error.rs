use thiserror::Error;

/// Errors raised by samplers, factors, couplings and the counting formulas.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside the domain of the operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A density profile whose Möbius transform has a negative cell.
    #[error("inconsistent density profile: cell {cell:#b} has mass {value}")]
    InconsistentProfile { cell: usize, value: f64 },

    /// A profile or edge profile violates a named constraint.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// The factor needs a larger neighbourhood than the one supplied.
    #[error("neighbourhood radius {have} is smaller than factor radius {need}")]
    RadiusTooSmall { have: usize, need: usize },

    /// Rejection sampling never accepted an outer trial.
    #[error("conditioning event not observed in {trials} outer trials")]
    ConditioningNotObserved { trials: u64 },

    /// The target value is not bracketed by the scanned moment curve.
    #[error("no crossing in [0,1] for target {target}")]
    NoCrossing { target: f64 },

    /// Exhaustive enumeration was asked for an instance that is too large.
    #[error("instance exceeds enumeration guard: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
