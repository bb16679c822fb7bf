//! One-dimensional adaptive quadrature and compensated summation.

mod quadrature;
mod summation;

pub use quadrature::{integrate, QuadResult, MAX_DEPTH};
pub use summation::{ComplexSum, NeumaierSum};
