use thiserror::Error;

/// Errors produced by the simulator and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("register `{0}` not found in layout")]
    UnknownRegister(String),

    #[error("register `{name}` has width {width}, operation needs width {needed}")]
    RegisterMismatch {
        name: String,
        width: usize,
        needed: usize,
    },

    #[error("black box capability `{0}` is disabled")]
    CapabilityDisabled(&'static str),

    #[error("circuit needs {needed} qubits, limit is {max} (raise --max-width)")]
    WidthLimit { needed: usize, max: usize },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("gap check failed: {0}")]
    GapViolation(String),

    #[error("uniqueness premise 2^m > 2*p_b*p_(b-1) unmet: need m >= {required_m}")]
    PremiseViolation { required_m: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid fixture: {0}")]
    InvalidFixture(String),

    #[error("regression assertion failed: {0}")]
    Regression(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
