//! Error types for the library.

use thiserror::Error;

/// All failure modes surfaced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("anharmonicity must be positive, got {0}")]
    NonPositiveDelta(f64),

    #[error("Rabi amplitude must be non-negative, got {0}")]
    NegativeRabi(f64),

    #[error("pulse duration must be positive, got {0}")]
    NonPositiveDuration(f64),

    #[error("propagation time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("systematic error must be greater than -1, got {0}")]
    EpsOutOfRange(f64),

    #[error("matrix is not Hermitian: max deviation {0:.3e} exceeds tolerance")]
    NonHermitian(f64),

    #[error("matrix is not unitary: max deviation {0:.3e} exceeds tolerance")]
    NonUnitary(f64),

    #[error("sequence must contain at least one pulse")]
    EmptySequence,

    #[error("sequences have different system parameters and cannot be joined")]
    MismatchedParams,

    #[error("transfer target populations must lie in [0, 1], got ({0}, {1})")]
    InvalidTransferTarget(f64, f64),

    #[error("unknown gate name {0:?} (expected X, H or T)")]
    UnknownGate(String),

    #[error("no single-pulse reference is defined for gate {0:?}")]
    NoSinglePulseReference(String),

    #[error("unknown catalog entry {0:?} (expected one of P1, half, X, H, T)")]
    UnknownCatalogEntry(String),

    #[error("invalid epsilon grid: {0}")]
    InvalidGrid(String),

    #[error("profile grid does not bracket epsilon = 0")]
    GridExcludesZero,

    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),

    #[error("invalid optimization problem: {0}")]
    InvalidProblem(String),

    #[error("optimization budget must be positive")]
    ZeroBudget,

    #[error("parameter vector length {got} does not fit {pulses} pulses (expected {expected_fixed} or {expected_full})")]
    DimensionMismatch {
        got: usize,
        pulses: usize,
        expected_fixed: usize,
        expected_full: usize,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
