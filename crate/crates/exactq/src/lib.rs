// `!(x > 0.0)` is used deliberately in validation: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod model;
pub mod subspace;

pub use error::Error;

/// Shorthand used throughout the crate.
pub type C64 = num_complex::Complex64;
pub type Result<T> = std::result::Result<T, Error>;
