use thiserror::Error;

/// Errors raised by the simulation and reconstruction routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum UictError {
    #[error("boundary length must be at least 1 (got {0})")]
    ZeroBoundary(u64),

    #[error("(-)-move at index {index} applied to a boundary of length 1")]
    IllegalMove { index: usize },

    #[error("kernel argument out of domain: {0}")]
    Domain(String),

    #[error("trajectory exhausted after {found} strip stops; {wanted} requested")]
    InsufficientLength { found: usize, wanted: usize },

    #[error("stopping-time characterizations disagree at step {step}")]
    StopMismatch { step: u64 },

    #[error("strip {strip} exceeds its own length: max boundary {max} > {length}")]
    StripBound { strip: usize, max: u64, length: u64 },

    #[error("triangulation is not growth-representable (triangle {index})")]
    NotGrowthRepresentable { index: usize },

    #[error("triangulation is not stopped at a strip boundary")]
    NotStopped,

    #[error("invalid triangulation: {0}")]
    Invalid(String),

    #[error("clock horizon {reached} shorter than requested {requested}")]
    ClockTruncated { reached: f64, requested: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, UictError>;
