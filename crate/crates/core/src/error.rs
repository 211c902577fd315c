use thiserror::Error;

/// Errors raised by the numerical and physical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature did not reach the requested tolerance within its budget.
    #[error("quadrature did not converge: value {value:e} with error estimate {abs_error:e} after {evaluations} evaluations")]
    Quadrature {
        value: f64,
        abs_error: f64,
        evaluations: usize,
    },

    /// The integrand produced NaN or an infinity at an interior point.
    #[error("integrand is not finite at x = {at:e}")]
    NonFinite { at: f64 },

    /// The principal value diverges at the left endpoint of the radial density.
    #[error("principal value diverges at the k -> 0 endpoint (fitted exponent {exponent:.6})")]
    DivergentEndpoint { exponent: f64 },

    /// The principal value diverges because the density decays too slowly.
    #[error("principal value diverges in the tail (fitted exponent {exponent:.6})")]
    DivergentTail { exponent: f64 },

    /// The plain improper integral diverges logarithmically at the resonance.
    #[error("plain integral diverges logarithmically with slope {slope:e} in log(1/eps)")]
    DivergentLogarithmic { slope: f64 },

    /// A numerical test could not reach a definite conclusion.
    #[error("inconclusive: {0}")]
    Inconclusive(String),

    /// A numerical procedure produced an unreliable result; the message carries the evidence.
    #[error("diagnostic: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
