use thiserror::Error;

use crate::riesz_basis::SpectralCoefficients;
use crate::solver::SolveDiagnostics;

/// Last iterate of a solve that did not reach its tolerance.
#[derive(Debug, Clone)]
pub struct Unconverged {
    pub coeffs: SpectralCoefficients,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("non-finite value at quadrature node {node} while evaluating {context}")]
    Numeric { node: usize, context: &'static str },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("no admissible ground-state eigenpair: {0}")]
    NoGroundState(String),

    #[error("did not converge: {message}")]
    NonConvergence {
        message: String,
        last: Box<Unconverged>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
