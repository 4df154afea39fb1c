use thiserror::Error;

/// Everything that can go wrong while building or checking geodesic families.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("malformed bush: {0}")]
    Structural(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("bush is not normalized: {0}")]
    NotNormalized(String),

    #[error("depth {requested} exceeds the available depth {available} ({reason})")]
    Depth {
        requested: usize,
        available: usize,
        reason: &'static str,
    },

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("pasting error at breakpoint {breakpoint}: {reason}")]
    Pasting { breakpoint: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// Errors caused by running out of depth or iteration budget, as opposed
    /// to bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::Depth { .. } | Error::Budget(_) | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
