use thiserror::Error;

/// Failures surfaced by model construction, sampling steps, and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("correlation is degenerate (|rho| = 1)")]
    DegenerateCorrelation,

    #[error("empty dataset")]
    EmptyDataset,

    #[error("no draws retained")]
    EmptyChain,

    #[error("chains have unequal lengths")]
    ChainLengthMismatch,

    #[error("zero within-chain variance for parameter {0}")]
    ZeroWithinVariance(String),

    #[error("need at least two chains")]
    TooFewChains,

    #[error("unknown parameter {0}")]
    UnknownParameter(String),

    #[error("degrees-of-freedom update does not apply to this chain")]
    NuNotSampled,

    #[error(
        "no interior mode for the degrees-of-freedom conditional on \
         [{lo:e}, {hi:e}] (slope {dlo:.3e} at lo, {dhi:.3e} at hi)"
    )]
    ModeNotFound { lo: f64, hi: f64, dlo: f64, dhi: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rejection sampler exhausted its iteration budget in {0}")]
    RejectionBudget(&'static str),
}
