use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A specification failed validation at construction time.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Two distribution parameters contradict each other (e.g. E[θ] > M*).
    #[error("inconsistent distribution: {0}")]
    InconsistentDistribution(String),

    #[error("weight row length {weights} does not match sample length {samples}")]
    LengthMismatch { weights: usize, samples: usize },

    /// The weight scheme produces a moment sum too close to zero to take roots of.
    #[error("degenerate weight scheme: {0}")]
    DegenerateScheme(String),

    /// A truncated power series was evaluated outside the region where it can be trusted.
    #[error("series domain error: truncation diagnostic {diagnostic:.3e} at t = {t}")]
    SeriesDomain { t: f64, diagnostic: f64 },

    #[error("numerical failure in {context}: {diagnostics}")]
    Numeric {
        context: &'static str,
        diagnostics: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}
