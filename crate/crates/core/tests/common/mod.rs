#![allow(dead_code)]

use robust_gan::numkit::{sample_standard_normal, Matrix, Rng};

pub const FD_STEP: f64 = 1e-6;
pub const REL_TOL: f64 = 1e-5;
pub const ABS_TOL: f64 = 1e-8;

pub fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, sample_standard_normal(rng, rows * cols)).unwrap()
}

/// Central differences of `f` at `x` for each coordinate in `coords`, compared
/// with `analytic`. Returns the offending coordinates with both values.
pub fn fd_mismatches<F>(
    x: &[f64],
    analytic: &[f64],
    coords: impl IntoIterator<Item = usize>,
    f: F,
) -> Vec<(usize, f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    let mut bad = Vec::new();
    for i in coords {
        probe[i] = x[i] + FD_STEP;
        let up = f(&probe);
        probe[i] = x[i] - FD_STEP;
        let down = f(&probe);
        probe[i] = x[i];
        let fd = (up - down) / (2.0 * FD_STEP);
        let err = (fd - analytic[i]).abs();
        if err > ABS_TOL && err > REL_TOL * fd.abs().max(analytic[i].abs()) {
            bad.push((i, analytic[i], fd));
        }
    }
    bad
}
