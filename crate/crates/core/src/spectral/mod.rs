//! Spectral substrate: grid, parity-aware transforms, differentiation,
//! dealiasing and the constant-coefficient inverse Laplacian.

mod domain;
mod field;
mod grid;

pub use domain::{Dim, DomainError, DomainSpec, Parity, Wall, LZ};
pub use field::{Axis3, FieldError, ScalarField, VectorField};
pub use grid::Grid;
