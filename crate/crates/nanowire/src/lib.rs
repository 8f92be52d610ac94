//! Design and analysis toolkit for diamond nanowire single-photon sources.
//!
//! The crate models an NV-center-like dipole emitter embedded in a dielectric
//! nanowire and quantifies how efficiently its emission couples to the guided
//! mode and reaches a collection objective:
//!
//! - [`numerics`]: Bessel functions, root bracketing and Gauss-Legendre
//!   quadrature used by the mode solver and the spectral integrals.
//! - [`waveguide`]: exact guided-mode theory of the step-index circular
//!   dielectric waveguide (full-vectorial dispersion relation).
//! - [`fdtd`]: 3D Yee-scheme finite-difference time-domain engine with CPML
//!   absorbing boundaries and frequency-domain field monitors.
//! - [`emission`]: turns monitor data into coupling efficiency, far fields,
//!   collection efficiency, enhancement factors and the figure of merit Z.
//! - [`sweep`]: parameter-sweep orchestration with persistent, reproducible
//!   result directories.
//! - [`fab`]: derived-metric analytics for reactive-ion-etch process tables.

pub mod emission;
pub mod fab;
pub mod fdtd;
pub mod numerics;
pub mod sweep;
pub mod waveguide;

/// Vacuum permittivity (F/m).
pub const EPS0: f64 = 8.8541878128e-12;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.25663706212e-6;
/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum wave impedance (ohm).
pub const Z0: f64 = 376.730313668;
