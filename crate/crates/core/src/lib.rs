//! Pointwise G2 linear algebra on a 7-dimensional oriented inner-product space.

pub mod bryant;
pub mod cli;
pub mod error;
pub mod exterior;
pub mod g2core;
pub mod liegroup;
pub mod linalg;
pub mod models;
pub mod report;
pub mod sampling;
pub mod scalar;
pub mod selftest;

pub use error::{G2Error, Result};
pub use scalar::{Mode, Rational, Scalar};
