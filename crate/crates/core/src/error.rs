use thiserror::Error;

/// Errors produced anywhere in the engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("evaluation at a pole z = {0}")]
    PoleEvaluation(String),

    #[error("unexpected pole at {0}")]
    UnexpectedPole(String),

    #[error("logarithmic term: nonzero residue at {0}")]
    LogarithmicTerm(String),

    #[error("unsupported ramification at {0}: critical point of x is not simple")]
    UnsupportedRamification(String),

    #[error("unsupported curve: {0}")]
    UnsupportedCurve(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("degenerate curve: {0}")]
    DegenerateCurve(String),

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("insufficient series order: tried {tried}")]
    InsufficientOrder { tried: usize },

    #[error("invariant violation in W({g},{n}) slot {slot}: {what}")]
    InvariantViolation {
        g: usize,
        n: usize,
        slot: usize,
        what: String,
    },

    #[error("fiber normalization fails for F({g},{n}) slot {slot}")]
    Normalization { g: usize, n: usize, slot: usize },

    #[error("bad sample point: {0}")]
    BadSample(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("not a spectral curve: {0}")]
    NotASpectralCurve(String),

    #[error("consistency condition fails: {0}")]
    Consistency(String),

    #[error("incomplete table: missing ({g},{n})")]
    IncompleteTable { g: usize, n: usize },

    #[error("quantization failure at hbar^{order}: residual {residual}")]
    QuantizationFailure { order: usize, residual: String },

    #[error("bad sheet: y0^2 != -s2(x0)")]
    BadSheet,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
