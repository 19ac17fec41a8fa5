use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A function evaluated to NaN or infinity where a finite value is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error(
        "quadrature did not converge within {subdivisions} subdivisions \
         (best estimate {estimate:e}, error bound {error_bound:e})"
    )]
    QuadratureNonConvergence {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    /// Monotone root finding failed to bracket or converge.
    #[error("root finding failed for target {target}: {reason}")]
    RootFind { target: f64, reason: String },

    /// The truncated coefficient series of the density expansion is not
    /// positive, so its logarithm is undefined at this point.
    #[error("expansion truncation breakdown: coefficient sum {partial_sum:e} is not positive")]
    TruncationBreakdown { partial_sum: f64 },

    /// A matrix square root or similar was requested on an indefinite matrix.
    #[error("matrix is not positive definite (smallest eigenvalue {lambda_min:e})")]
    NotPositiveDefinite { lambda_min: f64 },

    /// A model does not implement an optional capability that was required.
    #[error("model '{model}' does not provide {capability}")]
    UnsupportedCapability {
        model: String,
        capability: &'static str,
    },

    /// Optimizer could not satisfy its convergence criterion.
    #[error("optimization did not converge: {0}")]
    NonConvergence(String),

    /// Invalid experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn unsupported(model: &dyn crate::model::DiffusionModel, capability: &'static str) -> Self {
        Error::UnsupportedCapability {
            model: model.id().to_string(),
            capability,
        }
    }
}
