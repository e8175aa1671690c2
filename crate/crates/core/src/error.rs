use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum PgwError {
    #[error("point set is empty")]
    EmptyPointSet,

    #[error("weight at index {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weight at index {index} is not finite")]
    NonFiniteWeight { index: usize },

    #[error("coordinate ({row}, {col}) is not finite")]
    NonFiniteCoordinate { row: usize, col: usize },

    #[error("cost entry ({row}, {col}) is invalid: {reason}")]
    InvalidCost {
        row: usize,
        col: usize,
        reason: &'static str,
    },

    #[error("total mass is zero")]
    ZeroMass,

    #[error("invalid exponent {0}: must be finite and >= 1")]
    InvalidExponent(f64),

    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("unbalanced transport instance: supply {supply} vs demand {demand}")]
    Unbalanced { supply: f64, demand: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("plan is infeasible: largest marginal violation {violation:e}")]
    Infeasible { violation: f64 },

    #[error("{what} exceeds size cap ({size} > {cap})")]
    SizeCapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("loss has no factored decomposition; use the dense kernel")]
    NotDecomposable,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("transport LP failed: {0}")]
    Lp(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, PgwError>;
