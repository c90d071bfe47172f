//! Numerical toolkit for the heat-semigroup functional calculus of finite
//! symmetric positive-semidefinite operators.
//!
//! Spectral multipliers `phi(H)` are approximated through Gamma-kernel
//! averages of `H^N e^{-tH}`; the same machinery produces smoothed spectral
//! densities and their `lambda`-derivatives, and drives measurements of
//! restriction-type `L^p -> L^{p'}` bounds and dispersive bound chains.

pub mod calculus;
pub mod dispersive;
pub mod error;
pub mod exponent;
pub mod gamma_kernel;
pub mod linalg;
pub mod multiplier;
pub mod quadrature;
mod reduce;
pub mod report;
pub mod restriction;

pub use error::{Error, Result};
pub use exponent::ExponentConfig;
pub use linalg::{Spectrum, SymmetricOperator};
