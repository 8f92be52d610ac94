//! Special functions, root bracketing and quadrature.
//!
//! Everything here is a pure function of its inputs; the mode solver and the
//! spectral integrals in [`crate::emission`] are the main consumers.

mod bessel;
mod quadrature;
mod roots;

pub use bessel::{bessel_deriv, bessel_j, bessel_k, BesselKind};
pub use quadrature::{integrate_1d, QuadratureGrid};
pub use roots::{find_roots, Interval};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("argument outside function domain: {0}")]
    Domain(String),
    #[error("order {0} exceeds supported maximum of {1}")]
    OrderTooLarge(u32, u32),
    #[error("invalid interval: lo={lo}, hi={hi} (need finite lo < hi)")]
    BadInterval { lo: f64, hi: f64 },
    #[error("two roots closer than the scan step near x={0}; refine the scan resolution")]
    AmbiguousRoots(f64),
    #[error("found more than {max} roots in the interval")]
    TooManyRoots { max: usize },
    #[error("integrand evaluated to a non-finite value at x={0}")]
    NonFiniteIntegrand(f64),
    #[error("invalid quadrature grid: {0}")]
    BadQuadrature(String),
}
