//! Synthesis and anisotropic regularity estimation for operator scaling
//! Gaussian random fields (OSGRF) on the unit square.
//!
//! The crate is organised bottom-up:
//!
//! * [`anisotropy`] holds the shared domain types and matrix powers `a^D`.
//! * [`homog`] builds the `E0`-homogeneous spectral gauge `rho` and checks admissibility.
//! * [`synth`] draws fields by aliased spectral synthesis and evaluates the exact variogram.
//! * [`besov`] estimates directional and anisotropic critical exponents.
//! * [`hywave`] computes hyperbolic wavelet pyramids and their scale-ratio ridge.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anisotropy;
pub mod besov;
pub mod error;
pub mod homog;
pub mod hywave;
pub mod quad;
pub mod stats;
pub mod synth;

pub use anisotropy::{matrix_power, validate_anisotropy, Anisotropy, FieldSpec, Mat2, SampledField};
pub use error::{Error, Result};
