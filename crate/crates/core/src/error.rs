use thiserror::Error;

/// Errors produced by the design library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("moments diverge: slope {beta1} must be below the exponential rate {rate}")]
    MomentDivergence { beta1: f64, rate: f64 },

    #[error("singular design: standardized determinant {0} is not positive")]
    SingularDesign(f64),

    #[error("Newton iteration did not converge ({regime}): residual {residual:e} after {iterations} iterations")]
    NoConvergence {
        regime: &'static str,
        residual: f64,
        iterations: usize,
    },

    #[error("no regime passed the equivalence check at alpha={alpha}, beta1={beta1}")]
    Unverified { alpha: f64, beta1: f64 },

    #[error("transition not bracketed on [{lo}, {hi}]")]
    NotBracketed { lo: f64, hi: f64 },

    #[error(
        "greedy fill cycled between two active sets (log det {first_log_det} vs {second_log_det})"
    )]
    CycleDetected {
        first_set: Vec<usize>,
        first_log_det: f64,
        second_set: Vec<usize>,
        second_log_det: f64,
    },

    #[error("the design accepted no observations")]
    EmptySubsample,

    #[error("maximum likelihood fit did not converge after {iterations} iterations (score norm {score_norm:e})")]
    NonConvergence { iterations: usize, score_norm: f64 },

    #[error("design matrix is degenerate: {0}")]
    DegenerateDesignMatrix(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
