//! Numerical toolkit for multi-body (`j`-)polarity of convex bodies and
//! functions: elementary symmetric polarity forms, exact polytope geometry,
//! generalized polars, Steiner symmetrization, volumes and moments, Ball-type
//! functionals, and functional polarity checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ball;
pub mod bodies;
pub mod error;
pub mod functional;
pub mod hull;
pub mod linalg;
pub mod measure;
pub mod polar;
pub mod quadrature;
pub mod symfun;

pub use error::{GeomError, Result};
