use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular Gram matrix")]
    SingularGram,
    #[error("divergence at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("degenerate support")]
    DegenerateSupport,
    #[error("singular reweighted system")]
    SingularReweighted,
    #[error("null space condition violated: gamma = {0} must lie in [0, 1)")]
    NullSpaceViolated(f64),
    #[error("instance too large for exact oracle: {0}")]
    OracleBudget(String),
    #[error("infeasible measurement: no x satisfies Ax = y")]
    Infeasible,
    #[error("zero signal power")]
    ZeroSignalPower,
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical routines themselves, as opposed to
    /// bad configuration or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularGram
                | Error::Divergence { .. }
                | Error::DegenerateSupport
                | Error::SingularReweighted
                | Error::Lp(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
