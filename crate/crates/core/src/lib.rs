//! Trotter-Suzuki splitting of the semiclassical Schrödinger equation
//! `i h ∂_t ψ = (−h²/2 ∂² + V) ψ`, with tools to measure how splitting
//! errors of observables and unitaries depend on `dt` and `h`.
//!
//! The operators are `A = −κ h ∂²` and `B = V/h` on a periodic grid, so
//! `H = A + B` generates the dynamics in rescaled time.

pub mod commutator_lab;
pub mod discretize;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod extended;
pub mod linalg;
pub mod model;
pub mod splitting;
pub mod symbolic;

pub use discretize::{Grid, SchemeKind};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, C64};
