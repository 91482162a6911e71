//! Linear algebra and sampling checked against nalgebra and statrs.

use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{Cauchy, ContinuousCDF, Normal};

use robust_gan::data::structured_covariance;
use robust_gan::numkit::{
    cholesky, invert_spd, operator_norm, sample_cauchy, sample_sphere, sample_standard_normal, symmetric_eigenvalues,
    Matrix, Rng,
};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(rows, cols, sample_standard_normal(rng, rows * cols)).unwrap()
}

fn random_spd(rng: &mut Rng, p: usize) -> Matrix {
    let a = random_matrix(rng, p, p);
    let mut s = a.matmul(&a.transpose()).unwrap();
    for i in 0..p {
        s[(i, i)] += 0.5;
    }
    s
}

/// Two-sided Kolmogorov–Smirnov statistic of `x` against `cdf`.
fn ks_statistic(mut x: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at level 1e-3: sqrt(-ln(α/2)/2) / sqrt(n).
fn ks_critical(n: usize) -> f64 {
    (-(0.5e-3f64).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[test]
fn standard_normal_passes_ks() {
    let normal = Normal::new(0.0, 1.0).unwrap();
    for seed in [11, 12, 13] {
        let x = sample_standard_normal(&mut Rng::new(seed), 100_000);
        let d = ks_statistic(x, |v| normal.cdf(v));
        assert!(d < ks_critical(100_000), "seed {seed}: D = {d}");
    }
}

#[test]
fn cauchy_passes_ks() {
    let cauchy = Cauchy::new(2.0, 1.0).unwrap();
    let x = sample_cauchy(&mut Rng::new(5), 2.0, 50_000);
    let d = ks_statistic(x, |v| cauchy.cdf(v));
    assert!(d < ks_critical(50_000), "D = {d}");
}

#[test]
fn sphere_draws_are_unit_and_centred() {
    let mut rng = Rng::new(8);
    let p = 5;
    let mut mean = vec![0.0; p];
    let m = 20_000;
    for _ in 0..m {
        let u = sample_sphere(&mut rng, p);
        assert!((u.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12);
        mean.iter_mut().zip(&u).for_each(|(a, b)| *a += b / m as f64);
    }
    // Each coordinate has variance 1/p, so the mean's sd is about 0.003.
    assert!(mean.iter().all(|v| v.abs() < 0.02), "{mean:?}");
}

#[test]
fn derived_streams_are_reproducible_and_distinct() {
    let root = Rng::new(42);
    let a: Vec<u64> = (0..4).map(|_| root.derive(1).next_u64()).collect();
    assert!(a.windows(2).all(|w| w[0] == w[1]));
    assert_ne!(root.derive(1).next_u64(), root.derive(2).next_u64());
}

#[test]
fn operator_norm_matches_svd() {
    let mut rng = Rng::new(3);
    for (r, c) in [(1, 1), (3, 7), (10, 10), (25, 4)] {
        let m = random_matrix(&mut rng, r, c);
        let ours = operator_norm(&m).unwrap();
        let svd = to_na(&m).singular_values().max();
        assert!((ours - svd).abs() < 1e-8 * svd.max(1.0), "{r}x{c}: {ours} vs {svd}");
    }
}

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = Rng::new(4);
    for p in [1, 2, 6, 20] {
        let s = random_spd(&mut rng, p);
        let ours = symmetric_eigenvalues(&s).unwrap();
        let mut theirs: Vec<f64> = to_na(&s).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "p={p}: {a} vs {b}");
        }
    }
}

#[test]
fn spd_inverse_and_cholesky_match_nalgebra() {
    let mut rng = Rng::new(6);
    for p in [1, 3, 12] {
        let s = random_spd(&mut rng, p);
        let inv = invert_spd(&s).unwrap();
        let theirs = to_na(&s).try_inverse().unwrap();
        assert!((to_na(&inv) - &theirs).amax() < 1e-8 * theirs.amax());
        let l = cholesky(&s).unwrap();
        assert!(to_na(&l.matmul(&l.transpose()).unwrap()).relative_eq(&to_na(&s), 1e-12, 1e-12));
    }
}

#[test]
fn non_spd_is_rejected() {
    let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
    assert!(invert_spd(&m).is_err());
}

#[test]
fn structured_sigma_recipe() {
    for p in [10, 50] {
        for seed in 0..100 {
            let sc = structured_covariance(p, seed);
            let sigma = &sc.sigma;
            for i in 0..p {
                for j in 0..p {
                    assert_eq!(sigma[(i, j)].to_bits(), sigma[(j, i)].to_bits(), "p={p} seed={seed}");
                }
            }
            let min_eig = symmetric_eigenvalues(&sc.precision).unwrap()[0];
            assert!(min_eig >= 0.0499, "p={p} seed={seed}: min eig {min_eig}");
            let round_trip = sigma.matmul(&sc.precision).unwrap().max_abs_diff(&Matrix::identity(p));
            assert!(round_trip < 1e-8, "p={p} seed={seed}: {round_trip:e}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn operator_norm_is_transpose_invariant(seed in any::<u64>(), r in 1usize..12, c in 1usize..12) {
        let m = random_matrix(&mut Rng::new(seed), r, c);
        let a = operator_norm(&m).unwrap();
        let b = operator_norm(&m.transpose()).unwrap();
        prop_assert!((a - b).abs() < 1e-8 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn double_inverse_is_identity(seed in any::<u64>(), p in 1usize..15) {
        let s = random_spd(&mut Rng::new(seed), p);
        let back = invert_spd(&invert_spd(&s).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&s) < 1e-6);
    }

    #[test]
    fn same_seed_same_draws(seed in any::<u64>()) {
        let a = sample_standard_normal(&mut Rng::new(seed), 50);
        let b = sample_standard_normal(&mut Rng::new(seed), 50);
        prop_assert_eq!(a, b);
    }
}
