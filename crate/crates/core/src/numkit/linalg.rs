//! Small dense linear-algebra helpers: spectral norm, Cholesky, SPD inverse and a
//! Jacobi eigensolver for symmetric matrices.

use crate::error::{Error, Result};
use crate::numkit::matrix::{dot, norm2, Matrix};
use crate::numkit::rng::{sample_standard_normal, Rng};

pub const POWER_ITERATION_CAP: usize = 10_000;
pub const POWER_ITERATION_TOL: f64 = 1e-10;

/// Largest singular value, by power iteration on `mᵀm`.
///
/// Stops once the relative change of the Rayleigh quotient drops below
/// [`POWER_ITERATION_TOL`].
pub fn operator_norm(m: &Matrix) -> Result<f64> {
    if !m.all_finite() {
        return Err(Error::InvalidConfig("operator_norm of a non-finite matrix".into()));
    }
    if m.rows() == 0 || m.cols() == 0 || m.as_slice().iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    // Fixed pseudo-random start: a structured start vector can be orthogonal to
    // the top right-singular vector.
    let mut v = sample_standard_normal(&mut Rng::new(0x5eed_0f0e_u64), m.cols());
    normalize(&mut v);
    let mut rayleigh = 0.0;
    for iter in 0..POWER_ITERATION_CAP {
        let mv = m.matvec(&v)?;
        let mut next = m.tr_matvec(&mv)?;
        let rq = dot(&v, &next);
        let nrm = norm2(&next);
        if nrm == 0.0 {
            // start vector landed in the null space; perturb deterministically
            next = sample_standard_normal(&mut Rng::new(iter as u64 + 1), m.cols());
            normalize(&mut next);
            v = next;
            continue;
        }
        next.iter_mut().for_each(|x| *x /= nrm);
        v = next;
        if iter > 0 && (rq - rayleigh).abs() <= POWER_ITERATION_TOL * rq.abs() {
            return Ok(rq.max(0.0).sqrt());
        }
        rayleigh = rq;
    }
    Err(Error::NoConvergence {
        what: "operator_norm power iteration",
        iterations: POWER_ITERATION_CAP,
        detail: format!("last Rayleigh quotient {rayleigh:e}; matrix may have a near-degenerate top singular pair"),
    })
}

fn normalize(v: &mut [f64]) {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Lower-triangular Cholesky factor `l` with `l lᵀ = m`. Reads the lower triangle only.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    m.require_square("cholesky")?;
    let n = m.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Inverse of a symmetric positive-definite matrix via Cholesky.
///
/// The result is symmetrized so transposed entries are bit-identical.
pub fn invert_spd(m: &Matrix) -> Result<Matrix> {
    let l = cholesky(m)?;
    let n = m.rows();
    // Solve l y = e_k, then lᵀ x = y, column by column.
    let mut inv = Matrix::zeros(n, n);
    let mut y = vec![0.0; n];
    for col in 0..n {
        for i in 0..n {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = avg;
            inv[(j, i)] = avg;
        }
    }
    Ok(inv)
}

/// Eigenvalues of a symmetric matrix in ascending order (cyclic Jacobi rotations).
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    m.require_square("symmetric_eigenvalues")?;
    let n = m.rows();
    let mut a = m.clone();
    const SWEEPS: usize = 100;
    for _ in 0..SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let scale: f64 = a.as_slice().iter().map(|x| x * x).sum();
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
            eig.sort_by(f64::total_cmp);
            return Ok(eig);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        what: "Jacobi eigensolver",
        iterations: SWEEPS,
        detail: format!("{n}x{n} matrix"),
    })
}
