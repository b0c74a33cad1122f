use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid anisotropy: {}", .0.join("; "))]
    InvalidAnisotropy(Vec<String>),

    /// Hurst index outside `(0, min(lambda1, lambda2))`.
    #[error("inadmissible hurst index {hurst}: must lie in (0, {bound}) = (0, min({lambda1}, {lambda2}))")]
    Inadmissible {
        hurst: f64,
        bound: f64,
        lambda1: f64,
        lambda2: f64,
    },

    /// A statistic vanished where a power law was expected.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the caller's arguments rather than by the computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::InvalidAnisotropy(_) | Error::Inadmissible { .. }
        )
    }
}
