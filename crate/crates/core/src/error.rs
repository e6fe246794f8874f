use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero polynomial has no well-defined roots")]
    ZeroPolynomial,

    #[error("denominator is identically zero")]
    ZeroDenominator,

    #[error("transfer function evaluated at a pole: z = {re} + {im}j")]
    EvaluatedAtPole { re: f64, im: f64 },

    #[error("transfer function is unstable; its H-infinity norm is unbounded")]
    Unstable,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient samples: {samples} rows but the largest lag is {max_lag}")]
    InsufficientSamples { samples: usize, max_lag: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("ARMAX noise regressors cannot be solved; only the ARX case is supported")]
    ArmaxUnsupported,

    #[error(
        "output matrix C is rank deficient (rank {rank} < {rows}); \
         use a general-C DSF extraction method (Chetty et al. 2015)"
    )]
    RankDeficientOutput { rank: usize, rows: usize },

    #[error("matrix is not positive definite ({context}); condition estimate {condition:e}")]
    NotPositiveDefinite { context: String, condition: f64 },

    #[error("infeasible structure request: {0}")]
    InfeasibleStructure(String),

    #[error("network generation failed after {attempts} attempts (seed {seed})")]
    GenerationFailed { attempts: usize, seed: u64 },

    #[error("simulation diverged at step {step} (seed {seed})")]
    Diverged { step: usize, seed: u64 },

    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
