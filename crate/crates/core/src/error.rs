use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid structure parameters: {0}")]
    InvalidStructure(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{what} is rank deficient: numerical rank {rank}, expected {expected}")]
    RankDeficient {
        what: &'static str,
        rank: usize,
        expected: usize,
    },

    #[error("not enough samples: {0}")]
    InsufficientSamples(String),

    #[error("singular moment matrix: {0}")]
    SingularMoments(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// The objective is unbounded below at this point (log det of a singular numerator).
    #[error("objective is outside its domain: {0}")]
    Domain(String),

    #[error("model is not stable: spectral radius {0}")]
    Unstable(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures caused by numerics rather than by malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::SingularMoments(_)
                | Error::NotPositiveDefinite(_)
                | Error::Domain(_)
                | Error::Unstable(_)
        )
    }
}
