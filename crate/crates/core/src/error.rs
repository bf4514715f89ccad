use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("opinion {0} lies outside [-1, 1]")]
    OpinionOutOfRange(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty population: {0}")]
    EmptyPopulation(String),

    #[error("bound certificate not satisfied: {0}")]
    CertificateFailed(String),

    #[error("mean system has a repeated eigenvalue {0}; the exponential closed form does not apply")]
    DegenerateEigenvalues(f64),

    #[error("grid minimum sits on the bracket boundary at u = {0}")]
    BracketBoundary(f64),

    #[error("quadrature did not converge on [{lo}, {hi}] (error estimate {estimate:e})")]
    QuadratureDiverged { lo: f64, hi: f64, estimate: f64 },

    #[error("mass mismatch: histogram {histogram}, density {density}")]
    MassMismatch { histogram: f64, density: f64 },

    #[error("initial law could not produce a sample inside [-1, 1] after {0} draws")]
    SamplerExhausted(usize),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
