use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("vector has no entries")]
    EmptyVector,

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("norm exponent must lie in [1, inf], got {0}")]
    InvalidNorm(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis of {columns} columns has numerical rank {rank}")]
    RankDeficient { columns: usize, rank: usize },

    #[error("chain is not strictly nested between levels {lower} and {upper}: {reason}")]
    InvalidChain {
        lower: usize,
        upper: usize,
        reason: String,
    },

    #[error("chain has {available} levels, {required} required")]
    ChainTooShort { required: usize, available: usize },

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("oracle supports rank <= {max}, got {rank}")]
    RankTooLarge { rank: usize, max: usize },

    #[error("{solver} did not converge after {iterations} iterations (value {value:e}, gap {gap:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        value: f64,
        gap: f64,
    },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("norming functional misses its norm: ‖f‖·ρ(x1, Q) = {product}")]
    NormMismatch { product: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid target sequence: {0}")]
    InvalidTargets(String),

    #[error("construction needs a finitely supported target sequence")]
    InvalidTail,

    #[error("sufficient condition fails for the target tail")]
    ConditionFails,

    #[error("could not bracket target {target:e} at level {level}")]
    BracketFailure { level: usize, target: f64 },

    #[error("level {level}: residual {residual:e} exceeds tolerance {tol:e}")]
    ToleranceNotMet { level: usize, residual: f64, tol: f64 },

    #[error("scenario: {0}")]
    Scenario(String),
}

impl Error {
    /// Input problems as opposed to solver breakdowns.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Lp(_)
                | Error::NormMismatch { .. }
                | Error::BracketFailure { .. }
                | Error::ToleranceNotMet { .. }
        )
    }
}
