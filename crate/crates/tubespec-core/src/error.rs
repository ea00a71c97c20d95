use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Operator or configuration data violates a structural invariant.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A lattice enumeration would exceed the configured point budget.
    #[error("resource cap exceeded: {requested} points requested, cap is {cap}")]
    ResourceExhausted { requested: u128, cap: u64 },

    /// Exact arithmetic domain error (e.g. inversion of zero).
    #[error("domain error: {0}")]
    Domain(String),

    /// Dimension mismatch between interacting values.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The datum has mass on the kernel of the operator.
    #[error("compatibility violated at {} kernel mode(s)", violations.len())]
    CompatibilityViolated {
        /// Offending frequencies with the inner product against the kernel element.
        violations: Vec<(Vec<i64>, f64)>,
    },

    /// Truncation or quadrature resolution too low for the requested input.
    #[error("resolution too low: {0}")]
    Resolution(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
