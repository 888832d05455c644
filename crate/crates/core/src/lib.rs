//! Numerical workbench for twisted (σ-)spectral triples.
//!
//! Two settings are covered:
//!
//! * the crossed product `C∞(S¹) ⋊ Γ` acting on `L²(S¹)` with the Dirac
//!   operator `(1/i) d/dx`, truncated to Fourier modes `|k| ≤ N`, together with
//!   heat-kernel regularized traces and the local cocycles they define;
//! * finite-dimensional graded twisted triples, where every trace identity is
//!   exact and can be checked to rounding error.

// Tolerance tests are written as `!(err <= tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circle_cocycles;
pub mod circle_kernel;
pub mod cochain_calculus;
pub mod crossed_product;
pub mod operator_rep;
pub mod spectral_traces;
pub mod error;
pub mod matrix_triples;

pub use error::{Error, Result};
