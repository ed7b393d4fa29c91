//! Self-energy, spectral and dynamical analysis of Friedrichs-Lee models:
//! a finite set of two-level emitters at positions `x_j` coupled to a
//! one-dimensional bosonic continuum with dispersion `ω(k)` and form factor
//! `F(k)`, restricted to the single-excitation sector.
//!
//! The numerical kernels ([`quadrature`], [`phase`], [`ode`], [`linalg`]) are
//! generic over the real scalar (see [`Real`]); the physics layer works in
//! `f64` and is exposed through the aliases below.

// `!(x > 0.0)` is used on purpose so that NaN fails validation; tabulated
// quadrature nodes keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod dispersion_analysis;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod phase;
pub mod quadrature;
pub mod scalar;
pub mod self_energy;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{principal_sqrt, Real};

/// Double-precision complex scalar.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix in double precision.
pub type CMatrix64 = linalg::CMatrix<f64>;
/// Phase matrix in double precision.
pub type PhaseMatrix64 = phase::PhaseMatrix<f64>;
/// Phase spectrum in double precision.
pub type PhaseSpectrum64 = phase::PhaseSpectrum<f64>;
/// Quadrature configuration in double precision.
pub type QuadConfig64 = quadrature::QuadConfig<f64>;
