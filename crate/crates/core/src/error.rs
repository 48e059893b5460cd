use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("geometry mismatch: {0}")]
    Geometry(String),

    #[error("Picard iteration did not converge on slab {slab} after {iterations} sweeps (residual {residual:.3e})")]
    NonConvergence {
        slab: usize,
        iterations: usize,
        residual: f64,
    },

    #[error("insufficient data for an order fit: {positive} positive norms, need at least 4")]
    InsufficientData { positive: usize },

    #[error("mollifier construction failed: {reason} (condition estimate {condition:.3e})")]
    Construction { reason: String, condition: f64 },

    #[error("hypothesis violation: {0}")]
    Hypothesis(String),

    #[error("cellization error: {0}")]
    Cellization(String),

    #[error("ladder member {index} (eps = {eps:e}): {source}")]
    Member {
        index: usize,
        eps: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn member(index: usize, eps: f64, source: Error) -> Self {
        Error::Member {
            index,
            eps,
            source: Box::new(source),
        }
    }
}
