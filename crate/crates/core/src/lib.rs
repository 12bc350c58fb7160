//! Derivative-free differentiation for black-box scalar functions.
//!
//! The crate computes generalized simplex gradients, nested-set Hessians,
//! quadratic interpolation models over minimal poised sets and calculus-rule
//! Hessians (product, quotient, power), together with their a-priori error
//! bounds and a small harness that measures the empirical order of accuracy.
//!
//! Vectors and matrices are `nalgebra` dynamic types. Direction sets are
//! stored column-wise: each column of the `n x m` matrix is one direction.

pub mod approx;
pub mod bounds;
pub mod calculus;
mod error;
pub mod eval;
pub mod linalg;
pub mod quadmodel;
pub mod registry;
pub mod sets;
mod settings;
pub mod study;
pub mod verify;

pub use error::{Error, Result};
pub use settings::NumericSettings;

pub use nalgebra::{DMatrix, DVector};
