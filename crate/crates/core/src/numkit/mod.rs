//! Seeded sampling, dense matrices and the linear-algebra helpers the estimators use.

pub mod linalg;
pub mod matrix;
pub mod rng;

pub use linalg::{cholesky, invert_spd, operator_norm, symmetric_eigenvalues};
pub use matrix::{axpy, dot, norm1, norm2, Matrix};
pub use rng::{cauchy_from_uniform, derive_seed, sample_cauchy, sample_sphere, sample_standard_normal, Rng};
