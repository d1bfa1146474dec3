//! Special-function kernels for the elliptic Helmholtz problem.

pub mod bessel;
pub mod mathieu;
pub mod tridiag;

pub use bessel::{bessel_j, bessel_j_seq};
pub use mathieu::{
    angular_solve, recurrence_matrix, AngularSolution, HarmonicClass, ModeSpec, Parity,
    DEFAULT_TERMS, Q_MAX,
};
