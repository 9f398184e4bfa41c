//! Crate-wide error type.
//!
//! Budget exhaustion (`BudgetExceeded`, `SelectionStalled`) is an honest
//! outcome of a certified search, not a bug; callers are expected to surface
//! it rather than retry blindly.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A rational could not be parsed from its `num/den` string form.
    #[error("invalid rational {input:?}: {reason}")]
    InvalidRational { input: String, reason: String },

    /// A constructor rejected a value that would make an expression or
    /// sequence ill-defined (divergent p-series leaf, zero base with negative
    /// exponent, geometric ratio not certified below one, exponent out of
    /// range, ...).
    #[error("invalid construction: {0}")]
    InvalidConstruction(String),

    /// A precondition documented on the operation was violated by the caller.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Sequences with different ambient exponents were mixed.
    #[error("exponent mismatch: expected p = {expected}, got p = {got}")]
    MismatchedExponent { expected: String, got: String },

    /// A certified search ran out of its configured budget without reaching a
    /// decision. `context` states which search and at which stage.
    #[error("budget exceeded: {context}")]
    BudgetExceeded { context: String },

    /// The sparse index selection could not certify any admissible index
    /// within its scan window at level `level`.
    #[error("selection stalled at level {level}: {context}")]
    SelectionStalled { level: u32, context: String },

    /// A decision that the operation requires to be exact (a head coordinate
    /// compared with zero, for instance) was only available as Inconclusive.
    #[error("undecidable without further structure: {0}")]
    Undecidable(String),

    /// A JSON descriptor did not match the documented schema.
    #[error("descriptor error: {0}")]
    Descriptor(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code for CLI error envelopes.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidRational { .. } => "bad-rational",
            Error::InvalidConstruction(_) => "bad-construction",
            Error::Precondition(_) => "precondition",
            Error::MismatchedExponent { .. } => "exponent-mismatch",
            Error::BudgetExceeded { .. } => "budget-exceeded",
            Error::SelectionStalled { .. } => "selection-stalled",
            Error::Undecidable(_) => "undecidable",
            Error::Descriptor(_) => "descriptor",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
