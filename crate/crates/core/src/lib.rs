//! Finite-window laboratory for operators that essentially commute with a
//! fixed unitary on `ℓ²(ℤ²)` or `ℓ²(ℤ)`.
//!
//! Everything lives on a [`operator::TruncationWindow`]: a finite ball of
//! lattice sites with a fixed enumeration. Geometry predicates are exact
//! integer arithmetic; operators are dense complex matrices.

pub mod ensembles;
pub mod error;
pub mod geometry;
pub mod homotopy;
pub mod index;
pub mod locality;
pub mod operator;
pub mod report;
pub mod surgery;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
