use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("syntax error at {line}:{col}: found {found}, expected {expected}")]
    Syntax {
        line: usize,
        col: usize,
        found: String,
        expected: String,
    },

    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        col: usize,
    },

    #[error("unbound variable `{name}`")]
    UnboundVariable { name: String },

    #[error("domain error in `{subexpr}`: {message}")]
    Domain { message: String, subexpr: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("slice is empty at x = {at}")]
    EmptySlice { at: String },

    #[error("loop base point outside the inner tube: {0}")]
    BaseOutsideTube(String),

    #[error("no loop shape parameters satisfy the containment conditions: {0}")]
    LoopShapeSearch(String),

    #[error("sampled loop containment violated: {0}")]
    ContainmentViolation(String),

    #[error("loop average does not match the current partial derivative: {0}")]
    AverageMismatch(String),

    #[error("direction {0} is already holonomic")]
    DirectionAlreadyHolonomic(usize),

    #[error("frequency search exceeded cap {cap} in direction {direction}: {detail}")]
    FrequencyCapExceeded {
        cap: u32,
        direction: usize,
        detail: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
