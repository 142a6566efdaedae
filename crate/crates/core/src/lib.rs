//! Carleman-type simultaneous approximation of a function and its first `m`
//! derivatives by a single polynomial, with a pointwise error envelope that
//! may shrink away from the origin.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: a small expression language with exact symbolic derivatives.
//! - [`poly`]: complex-coefficient polynomials and their calculus.
//! - [`quadrature`] and [`functionals`]: point evaluations and iterated-integral
//!   moments, exact on polynomials and numerical on expressions.
//! - [`walsh`]: polynomial fitting on a disk plus real intervals under exact
//!   linear equality constraints.
//! - [`carleman`]: the staged construction over growing windows `[-k, k]`.
//! - [`hoischen`]: the full pipeline (Taylor reduction, stage engine on the top
//!   derivative, repeated antidifferentiation) and its certificate.

pub mod carleman;
mod error;
pub mod expr;
pub mod functionals;
pub mod hoischen;
pub mod poly;
pub mod quadrature;
pub mod walsh;

pub use error::{Error, Result};

/// Complex double used for every value in the crate.
pub type C64 = num_complex::Complex<f64>;
