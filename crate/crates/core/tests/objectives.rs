//! Objective values against quadrature and brute-force oracles, symmetry of the
//! two divergences, and the concave restricted problem.

mod common;

use proptest::prelude::*;
use statrs::distribution::{Continuous, Normal};

use common::{fd_mismatches, random_matrix};
use robust_gan::nets::{Activation, InitScheme, Layer, Mlp};
use robust_gan::numkit::{sample_standard_normal, Matrix, Rng};
use robust_gan::objectives::{
    discriminator_value_and_grad, js_value, optimal_discriminator, restricted_js, restricted_js_argmax,
    restricted_js_objective, tv_value, BatchPair, ObjectiveKind, RegStat,
};

fn normal_sample(rng: &mut Rng, n: usize, mean: f64) -> Matrix {
    let v = sample_standard_normal(rng, n).into_iter().map(|z| z + mean).collect();
    Matrix::from_vec(n, 1, v).unwrap()
}

/// Negates the output layer, so the sigmoid output becomes `1 − D`.
fn flipped(d: &Mlp) -> Mlp {
    let mut out = d.clone();
    let last = out.layers_mut().last_mut().unwrap();
    last.weights = last.weights.scaled(-1.0);
    if let Some(b) = last.bias.as_mut() {
        b.iter_mut().for_each(|v| *v = -*v);
    }
    out
}

/// Trapezoid rule on `[lo, hi]` with `steps` panels.
fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let inner: f64 = (1..steps).map(|k| f(lo + k as f64 * h)).sum();
    h * (0.5 * f(lo) + inner + 0.5 * f(hi))
}

fn features_x1(x: &[f64]) -> Vec<f64> {
    vec![x[0], 1.0]
}

/// The logistic objective written out directly, independent of the library.
fn logistic_value(real: &[f64], fake: &[f64], w: [f64; 2]) -> f64 {
    let log_sig = |z: f64| -(1.0 + (-z).exp()).ln();
    let r = real.iter().map(|x| log_sig(w[0] * x + w[1])).sum::<f64>() / real.len() as f64;
    let f = fake.iter().map(|x| log_sig(-(w[0] * x + w[1]))).sum::<f64>() / fake.len() as f64;
    r + f + 4f64.ln()
}

#[test]
fn optimal_discriminator_recovers_twice_js_divergence() {
    let (theta, eta) = (0.0, 1.5);
    let (p, q) = (Normal::new(theta, 1.0).unwrap(), Normal::new(eta, 1.0).unwrap());
    let half_kl = |a: &Normal, x: f64| {
        let (pa, m) = (a.pdf(x), 0.5 * (p.pdf(x) + q.pdf(x)));
        if pa > 0.0 {
            0.5 * pa * (pa / m).ln()
        } else {
            0.0
        }
    };
    let jsd = integrate(|x| half_kl(&p, x) + half_kl(&q, x), -12.0, 14.0, 20_000);

    let mut rng = Rng::new(17);
    let n = 200_000;
    let b = BatchPair::new(normal_sample(&mut rng, n, theta), normal_sample(&mut rng, n, eta)).unwrap();
    let d = optimal_discriminator(&[theta], &[eta]).unwrap();
    let value = js_value(&d, &b).unwrap();
    assert!((value - 2.0 * jsd).abs() < 5e-3, "{value} vs {}", 2.0 * jsd);
}

#[test]
fn tv_value_matches_quadrature() {
    let (a, c) = (1.3, -0.4);
    let d = Mlp::new(vec![Layer {
        weights: Matrix::from_rows(&[vec![a]]).unwrap(),
        bias: Some(vec![c]),
        act: Activation::Sigmoid,
    }])
    .unwrap();
    let sig = |x: f64| 1.0 / (1.0 + (-(a * x + c)).exp());
    let (p, q) = (Normal::new(0.5, 1.0).unwrap(), Normal::new(-1.0, 1.0).unwrap());
    let exact = integrate(|x| sig(x) * (p.pdf(x) - q.pdf(x)), -14.0, 14.0, 20_000);

    let mut rng = Rng::new(3);
    let n = 200_000;
    let b = BatchPair::new(normal_sample(&mut rng, n, 0.5), normal_sample(&mut rng, n, -1.0)).unwrap();
    let value = tv_value(&d, &b).unwrap();
    assert!((value - exact).abs() < 5e-3, "{value} vs {exact}");
}

#[test]
fn restricted_js_matches_grid_search() {
    let mut rng = Rng::new(41);
    let real = normal_sample(&mut rng, 400, 0.0);
    let fake = normal_sample(&mut rng, 400, 0.7);
    let cap = 2.0;
    let (rv, fv) = (real.column(0), fake.column(0));

    let mut best = f64::NEG_INFINITY;
    for i in 0..=400 {
        for j in 0..=400 {
            let w = [-cap + i as f64 * cap / 200.0, -cap + j as f64 * cap / 200.0];
            if w[0].hypot(w[1]) <= cap {
                best = best.max(logistic_value(&rv, &fv, w));
            }
        }
    }
    let (value, w) = restricted_js_argmax(&real, &fake, features_x1, cap).unwrap();
    assert!(w[0].hypot(w[1]) <= cap * (1.0 + 1e-12));
    assert!(value >= best - 1e-12, "{value} below grid {best}");
    assert!(value - best < 1e-3, "{value} far above grid {best}");
    assert!((value - logistic_value(&rv, &fv, [w[0], w[1]])).abs() < 1e-12);
}

#[test]
fn restricted_objective_is_concave() {
    let mut rng = Rng::new(8);
    let real = random_matrix(&mut rng, 60, 2);
    let fake = normal_sample(&mut rng, 60, 0.5);
    let fake = Matrix::from_vec(30, 2, fake.as_slice().to_vec()).unwrap();
    let feats = |x: &[f64]| vec![x[0], x[1], x[0] * x[1], 1.0];
    for _ in 0..1000 {
        let a: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 3.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.normal(0.0, 3.0)).collect();
        let t = rng.uniform();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let fa = restricted_js_objective(&real, &fake, feats, &a).unwrap();
        let fb = restricted_js_objective(&real, &fake, feats, &b).unwrap();
        let fm = restricted_js_objective(&real, &fake, feats, &mid).unwrap();
        assert!(fm >= t * fa + (1.0 - t) * fb - 1e-12, "{fm} < chord at t={t}");
    }
}

#[test]
fn discriminator_gradients_with_penalty() {
    let mut rng = Rng::new(12);
    let d = Mlp::discriminator(3, &[4], Activation::Sigmoid, InitScheme::Xavier, &mut rng).unwrap();
    let b = BatchPair::new(random_matrix(&mut rng, 7, 3), random_matrix(&mut rng, 7, 3)).unwrap();
    for kind in [
        ObjectiveKind::JS,
        ObjectiveKind::TV,
        ObjectiveKind::JS.with_penalty(0.7),
        ObjectiveKind {
            reg_stat: RegStat::MedianMatch,
            ..ObjectiveKind::TV.with_penalty(0.3)
        },
    ] {
        let theta = d.params();
        let g = discriminator_value_and_grad(&d, &b, &kind, true)
            .unwrap()
            .grad
            .flatten();
        let bad = fd_mismatches(&theta, &g, 0..theta.len(), |t| {
            let mut n = d.clone();
            n.set_params(t).unwrap();
            discriminator_value_and_grad(&n, &b, &kind, true).unwrap().value.value
        });
        assert!(bad.is_empty(), "{kind:?}: {bad:?}");
    }
}

#[test]
fn saturated_logs_are_clamped_and_counted() {
    let d = optimal_discriminator(&[0.0], &[80.0]).unwrap();
    let far = Matrix::from_vec(2, 1, vec![80.0, 80.0]).unwrap();
    let near = Matrix::from_vec(2, 1, vec![0.0, 0.0]).unwrap();
    let b = BatchPair::new(far, near).unwrap();
    let eval = discriminator_value_and_grad(&d, &b, &ObjectiveKind::JS, false).unwrap();
    assert!(eval.value.value.is_finite());
    assert_eq!(eval.value.clamp_count, 4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn js_is_symmetric_under_output_flip(seed in any::<u64>(), hidden in 0usize..3) {
        let mut rng = Rng::new(seed);
        let widths: Vec<usize> = (0..hidden).map(|_| 1 + rng.below(4)).collect();
        let d = Mlp::discriminator(2, &widths, Activation::Sigmoid, InitScheme::Xavier, &mut rng).unwrap();
        let (x, y) = (random_matrix(&mut rng, 9, 2), random_matrix(&mut rng, 9, 2));
        let forward = js_value(&d, &BatchPair::new(x.clone(), y.clone()).unwrap()).unwrap();
        let swapped = js_value(&flipped(&d), &BatchPair::new(y, x).unwrap()).unwrap();
        prop_assert!((forward - swapped).abs() < 1e-12, "{} vs {}", forward, swapped);
    }

    #[test]
    fn tv_negates_under_swap(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let d = Mlp::discriminator(2, &[3], Activation::Ramp, InitScheme::Xavier, &mut rng).unwrap();
        let (x, y) = (random_matrix(&mut rng, 8, 2), random_matrix(&mut rng, 8, 2));
        let forward = tv_value(&d, &BatchPair::new(x.clone(), y.clone()).unwrap()).unwrap();
        let swapped = tv_value(&d, &BatchPair::new(y, x).unwrap()).unwrap();
        prop_assert_eq!(forward.to_bits(), (-swapped).to_bits());
    }

    #[test]
    fn restricted_js_is_nonnegative(seed in any::<u64>(), shift in -3.0f64..3.0, cap in 0.1f64..10.0) {
        let mut rng = Rng::new(seed);
        let real = normal_sample(&mut rng, 50, 0.0);
        let fake = normal_sample(&mut rng, 70, shift);
        let v = restricted_js(&real, &fake, features_x1, cap).unwrap();
        prop_assert!(v >= -1e-10, "{}", v);
    }
}
