use thiserror::Error;

/// Errors raised by the QDO toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QdoError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("sites {first} and {second} coincide (separation {separation:e})")]
    CoincidentSites {
        first: usize,
        second: usize,
        separation: f64,
    },

    #[error("potential matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("perturbation series diverges: max |w| = {max_abs} >= 1")]
    SeriesDivergent { max_abs: f64 },

    #[error("unphysical two-mode state: {0}")]
    UnphysicalState(String),

    #[error("all reference tangles vanish between QDOs {mu} and {xi}")]
    DegenerateDenominator { mu: usize, xi: usize },

    #[error("problem size {size} exceeds budget {budget}")]
    TooLarge { size: usize, budget: usize },

    #[error("no sign change of the objective in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for QdoError {
    fn from(err: std::io::Error) -> Self {
        QdoError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for QdoError {
    fn from(err: serde_json::Error) -> Self {
        QdoError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QdoError>;
