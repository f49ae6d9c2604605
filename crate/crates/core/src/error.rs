use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver did not converge for eigenvalue {index} after {iterations} iterations")]
    EigenNoConvergence { index: usize, iterations: usize },

    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e}, error {error:e})")]
    QuadratureNoConvergence { tol: f64, estimate: f64, error: f64 },

    #[error("chain mapping lost orthogonality at step {step} (overlap {overlap:e})")]
    PrecisionLoss { step: usize, overlap: f64 },

    #[error("divergence fit failed: {0}")]
    FitFailure(String),

    #[error("level flow never crossed threshold {threshold} (max level-1 value {max_value})")]
    NoCrossing { threshold: f64, max_value: f64 },

    #[error("truncation kept {kept} states, more than twice the target {target}")]
    PathologicalDegeneracy { kept: usize, target: usize },

    #[error("exact diagonalization dimension {dim} exceeds the guard {limit}")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("NRG iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }
}
