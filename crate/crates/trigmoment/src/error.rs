//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenient result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode of the library. Numerical routines never return NaN;
/// they surface one of these variants instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function or distribution.
    #[error("domain error: {0}")]
    Domain(String),
    /// Adaptive quadrature failed to reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate:e}, error bound {bound:e}")]
    Quadrature {
        /// Last integral estimate.
        estimate: f64,
        /// Last error bound.
        bound: f64,
    },
    /// A root finder or estimator did not converge.
    #[error("estimation failed: {message} (residual {residual:e})")]
    Estimation {
        /// Description of the failure.
        message: String,
        /// Largest absolute residual at the last iterate.
        residual: f64,
    },
    /// The sample has no spread (all observations equal) or is too small.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    /// A matrix that must be inverted is singular or badly conditioned.
    #[error("singular matrix: {0}")]
    Singular(String),
    /// Unsupported family / estimator / mask combination.
    #[error("configuration error: {0}")]
    Config(String),
    /// Random variate generation failed.
    #[error("sampling error: {0}")]
    Sampling(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
