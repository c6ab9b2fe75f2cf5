use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("no sideband reaches the selected frequency {0} GHz")]
    NoOverlap(f64),

    #[error("integration grid too coarse: error estimate {0:.3e}")]
    ResolutionTooCoarse(f64),

    #[error("fit diverged: {0}")]
    FitDiverged(String),

    #[error("bins {0} and {1} are not adjacent")]
    NonAdjacentPair(usize, usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
