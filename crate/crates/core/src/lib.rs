//! Dyadic Haar analysis and Calderón–Zygmund operators on finite Haar expansions.

pub mod dyadic;
pub mod error;
pub mod haar;
pub mod kernel;
pub mod operators;
pub mod quadrature;
pub mod sigma;
pub mod sum;

pub use error::{Error, Result};
