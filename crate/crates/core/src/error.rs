use thiserror::Error;

use crate::numerics::QuadratureResult;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature budget of {panels} panels exceeded (partial value {:.6e}, error estimate {:.3e})",
        partial.value,
        partial.error_estimate
    )]
    BudgetExceeded {
        panels: usize,
        partial: QuadratureResult,
    },

    #[error("point lies on the singular locus (distance {distance:.3e})")]
    OnSingularity { distance: f64 },

    #[error("finite-difference stencil comes within {distance:.3e} of the singular locus (need at least {required:.3e})")]
    StencilTooClose { distance: f64, required: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("integrand is not finite at x = {at}")]
    NonFinite { at: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
