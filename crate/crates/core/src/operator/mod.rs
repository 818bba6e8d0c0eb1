//! Truncation windows, dense operators, model unitaries and functional calculus.

pub mod linalg;
mod matrix;
mod models;
pub mod opmat;
mod window;

pub use matrix::{Operator, Projection, TOL_IDEM};
pub use models::{
    apply_circle_function, apply_circle_function_tol, evaluate_laurent, laughlin_operator, polar_part,
    polar_part_tol, shift_operator, Boundary, CircleFunction, PolarDecomposition, TOL_INV, TOL_UNITARY,
};
pub use opmat::{export_operator, import_operator, Encoding};
pub use window::{Representation, TruncationWindow};
