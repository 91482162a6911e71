//! Self-check suites: analytic gradients against central differences, the
//! moment-matching property of the restricted JS divergence, and the 1-D depth
//! estimator against the sort median.

use std::fmt;

use robust_gan::baselines::{median, tv_learning_1d};
use robust_gan::generators::{gen_loss_and_grad, Generator, NoiseLaw};
use robust_gan::nets::{grad_input, grad_params, Activation, InitScheme, Mlp};
use robust_gan::numkit::{Matrix, Rng};
use robust_gan::objectives::{discriminator_value_and_grad, restricted_js, BatchPair, ObjectiveKind, RegStat};
use robust_gan::Result;

const FD_STEP: f64 = 1e-6;
pub const FD_REL_TOL: f64 = 1e-5;
pub const FD_ABS_TOL: f64 = 1e-8;

const ALL_ACTIVATIONS: [Activation; 5] = [
    Activation::Sigmoid,
    Activation::Relu,
    Activation::Ramp,
    Activation::Identity,
    Activation::Abs,
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Running tally of finite-difference comparisons.
#[derive(Debug, Default, Clone)]
pub struct FdTally {
    pub checked: usize,
    /// Coordinates skipped because the two one-sided slopes disagree (a kink
    /// lies within one step).
    pub kinks_skipped: usize,
    pub worst_rel: f64,
    pub worst_abs: f64,
    pub failures: Vec<String>,
}

impl FdTally {
    /// Compares `analytic[i]` with the central difference of `f` at `x` for
    /// every index in `coords`.
    pub fn compare<F>(&mut self, label: &str, x: &[f64], analytic: &[f64], coords: impl Iterator<Item = usize>, f: F)
    where
        F: Fn(&[f64]) -> f64,
    {
        let f0 = f(x);
        let mut probe = x.to_vec();
        for i in coords {
            probe[i] = x[i] + FD_STEP;
            let up = f(&probe);
            probe[i] = x[i] - FD_STEP;
            let down = f(&probe);
            probe[i] = x[i];
            let forward = (up - f0) / FD_STEP;
            let backward = (f0 - down) / FD_STEP;
            let central = (up - down) / (2.0 * FD_STEP);
            if (forward - backward).abs() > 1e-3 * (1.0 + central.abs()) {
                self.kinks_skipped += 1;
                continue;
            }
            self.checked += 1;
            let err = (analytic[i] - central).abs();
            self.worst_abs = self.worst_abs.max(err);
            if err <= FD_ABS_TOL {
                continue;
            }
            let rel = err / analytic[i].abs().max(central.abs());
            self.worst_rel = self.worst_rel.max(rel);
            if rel > FD_REL_TOL && self.failures.len() < 10 {
                self.failures
                    .push(format!("{label}[{i}]: analytic {:e} vs fd {central:e}", analytic[i]));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }
}

fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
    let v = (0..rows * cols).map(|_| rng.standard_normal()).collect();
    Matrix::from_vec(rows, cols, v).expect("shape")
}

/// A random net with 0..=3 hidden layers and random activations everywhere.
pub fn random_net(rng: &mut Rng) -> Mlp {
    let hidden = rng.below(4);
    let mut dims = vec![1 + rng.below(4)];
    dims.extend((0..hidden).map(|_| 1 + rng.below(5)));
    dims.push(1);
    let acts: Vec<Activation> = (0..=hidden).map(|_| ALL_ACTIVATIONS[rng.below(5)]).collect();
    Mlp::init(&dims, &acts, InitScheme::GaussianSmall { std: 0.8 }, rng).expect("valid random layout")
}

/// Parameter and input gradients of `Σ uᵢ·net(xᵢ)` for `count` random nets,
/// plus the JS discriminator objective with a penalty on sigmoid-output nets.
pub fn check_net_gradients(count: usize, seed: u64) -> Result<FdTally> {
    let mut rng = Rng::new(seed);
    let mut tally = FdTally::default();
    for k in 0..count {
        let net = random_net(&mut rng);
        let p = net.input_dim();
        let m = 1 + rng.below(6);
        let x = random_matrix(&mut rng, m, p);
        let u: Vec<f64> = (0..m).map(|_| rng.standard_normal()).collect();
        let weighted = |n: &Mlp, x: &Matrix| -> f64 {
            n.forward_batch(x)
                .expect("shape")
                .iter()
                .zip(&u)
                .map(|(a, b)| a * b)
                .sum()
        };

        let g = grad_params(&net, &x, &u)?.flatten();
        let theta = net.params();
        tally.compare(&format!("net{k}.params"), &theta, &g, 0..theta.len(), |t| {
            let mut n = net.clone();
            n.set_params(t).expect("layout");
            weighted(&n, &x)
        });

        let gx = grad_input(&net, &x, &u)?;
        tally.compare(
            &format!("net{k}.input"),
            x.as_slice(),
            gx.as_slice(),
            0..x.as_slice().len(),
            |v| weighted(&net, &Matrix::from_vec(m, p, v.to_vec()).expect("shape")),
        );
    }

    // Discriminator objectives (JS with both penalties, TV) on sigmoid-output nets.
    for (k, kind) in [
        ObjectiveKind::JS.with_penalty(0.3),
        ObjectiveKind {
            reg_stat: RegStat::MedianMatch,
            ..ObjectiveKind::JS.with_penalty(0.3)
        },
        ObjectiveKind::TV,
    ]
    .into_iter()
    .enumerate()
    {
        let p = 3;
        let d = Mlp::discriminator(
            p,
            &[4, 3],
            Activation::Sigmoid,
            InitScheme::GaussianSmall { std: 0.7 },
            &mut rng,
        )?;
        let batch = BatchPair::new(random_matrix(&mut rng, 6, p), random_matrix(&mut rng, 6, p))?;
        let g = discriminator_value_and_grad(&d, &batch, &kind, true)?.grad.flatten();
        let theta = d.params();
        tally.compare(&format!("objective{k}"), &theta, &g, 0..theta.len(), |t| {
            let mut n = d.clone();
            n.set_params(t).expect("layout");
            discriminator_value_and_grad(&n, &batch, &kind, true)
                .expect("eval")
                .value
                .value
        });
    }
    Ok(tally)
}

/// Indices of trainable generator coordinates: the scatter factor is lower-triangular.
fn trainable(g: &Generator) -> Vec<usize> {
    let p = g.dim();
    let total = g.params().len();
    let mut idx: Vec<usize> = (0..p).collect();
    let mut offset = p;
    if g.scatter_factor().is_some() {
        for r in 0..p {
            for c in 0..=r {
                idx.push(offset + r * p + c);
            }
        }
        offset += p * p;
    }
    idx.extend(offset..total);
    idx
}

/// Generator-loss gradients for the location, affine and elliptical generators
/// under JS (with penalty) and TV.
pub fn check_generator_gradients(seed: u64) -> Result<FdTally> {
    let mut rng = Rng::new(seed);
    let mut tally = FdTally::default();
    let p = 3;
    let eta: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
    let mut affine = Generator::affine(eta.clone());
    if let Generator::Affine { a, .. } = &mut affine {
        for r in 0..p {
            for c in 0..=r {
                a[(r, c)] += 0.3 * rng.standard_normal();
            }
        }
    }
    let generators = [
        Generator::location(eta.clone()),
        affine,
        Generator::elliptical(eta.clone(), false, NoiseLaw::Gaussian, &mut rng)?,
        Generator::elliptical(eta, true, NoiseLaw::Uniform, &mut rng)?,
    ];
    let real = random_matrix(&mut rng, 6, p);
    for (k, g) in generators.iter().enumerate() {
        for kind in [ObjectiveKind::JS.with_penalty(0.5), ObjectiveKind::TV] {
            let d = Mlp::discriminator(
                p,
                &[4],
                Activation::Sigmoid,
                InitScheme::GaussianSmall { std: 0.7 },
                &mut rng,
            )?;
            let (_, noise) = g.sample(&mut rng, 5)?;
            let (_, grad) = gen_loss_and_grad(g, &d, &noise, Some(&real), &kind)?;
            let theta = g.params();
            let analytic = grad.flatten();
            tally.compare(
                &format!("generator{k}"),
                &theta,
                &analytic,
                trainable(g).into_iter(),
                |t| {
                    let mut h = g.clone();
                    h.set_params(t).expect("layout");
                    gen_loss_and_grad(&h, &d, &noise, Some(&real), &kind).expect("eval").0
                },
            );
        }
    }
    Ok(tally)
}

pub fn gradient_suite(nets: usize, seed: u64) -> SuiteReport {
    let run = || -> Result<(FdTally, FdTally)> {
        Ok((check_net_gradients(nets, seed)?, check_generator_gradients(seed ^ 1)?))
    };
    match run() {
        Ok((a, b)) => SuiteReport {
            name: "gradient",
            passed: a.passed() && b.passed(),
            detail: format!(
                "{} net + {} generator coordinates, {} kink skips, worst abs {:.2e}, worst rel above abs floor {:.2e}{}",
                a.checked,
                b.checked,
                a.kinks_skipped + b.kinks_skipped,
                a.worst_abs.max(b.worst_abs),
                a.worst_rel.max(b.worst_rel),
                a.failures.iter().chain(&b.failures).map(|f| format!("; {f}")).collect::<String>()
            ),
        },
        Err(e) => SuiteReport { name: "gradient", passed: false, detail: e.to_string() },
    }
}

/// Moment-matching values: `(matched, offset)` restricted JS with features
/// `(x, 1)`. The matched case draws real data from `0.8·N(1, 1) + 0.2·N(10, 1)`
/// in `p` dimensions against fakes from `N(sample mean, I)`. The offset case is
/// 1-D: real `N(0, 1)` against fakes `N(sample mean + 0.5, 1)`.
pub fn moment_matching_values(p: usize, n: usize, seed: u64) -> Result<(f64, f64)> {
    let root = Rng::new(seed);
    let features = |x: &[f64]| {
        let mut g = x.to_vec();
        g.push(1.0);
        g
    };
    let draw = |rng: &mut Rng, dim: usize, centre: &dyn Fn(&mut Rng, usize) -> f64| -> Matrix {
        let v = (0..n * dim)
            .map(|i| centre(rng, i % dim) + rng.standard_normal())
            .collect();
        Matrix::from_vec(n, dim, v).expect("shape")
    };
    let column_means = |m: &Matrix| -> Vec<f64> {
        (0..m.cols())
            .map(|j| m.column(j).iter().sum::<f64>() / m.rows() as f64)
            .collect()
    };

    let mixture = |rng: &mut Rng, _: usize| if rng.uniform() < 0.2 { 10.0 } else { 1.0 };
    let real = draw(&mut root.derive(0), p, &mixture);
    let mean = column_means(&real);
    let fake = draw(&mut root.derive(1), p, &|_, j| mean[j]);
    let matched = restricted_js(&real, &fake, features, 100.0)?;

    let real1 = draw(&mut root.derive(2), 1, &|_, _| 0.0);
    let shifted = column_means(&real1)[0] + 0.5;
    let fake1 = draw(&mut root.derive(3), 1, &|_, _| shifted);
    let offset = restricted_js(&real1, &fake1, features, 100.0)?;
    Ok((matched, offset))
}

pub fn moment_suite(n: usize, seed: u64) -> SuiteReport {
    match moment_matching_values(3, n, seed) {
        Ok((matched, offset)) => SuiteReport {
            name: "moment-matching",
            passed: matched <= 2e-3 && offset > 0.01,
            detail: format!("matched {matched:.3e} (<= 2e-3), offset {offset:.3e} (> 0.01)"),
        },
        Err(e) => SuiteReport {
            name: "moment-matching",
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Number of random odd-size datasets where the depth estimator differs from
/// the sort median.
pub fn median_mismatches(datasets: usize, seed: u64) -> Result<usize> {
    let mut rng = Rng::new(seed);
    let mut bad = 0;
    for _ in 0..datasets {
        let n = 2 * rng.below(101) + 1;
        // Integer-valued draws make ties common.
        let tied = rng.bernoulli(0.5);
        let mut x: Vec<f64> = (0..n)
            .map(|_| {
                let v = 3.0 * rng.standard_normal();
                if tied {
                    v.round()
                } else {
                    v
                }
            })
            .collect();
        let depth = tv_learning_1d(&x, None)?;
        if depth != median(&mut x) {
            bad += 1;
        }
    }
    Ok(bad)
}

pub fn median_suite(datasets: usize, seed: u64) -> SuiteReport {
    match median_mismatches(datasets, seed) {
        Ok(bad) => SuiteReport {
            name: "median-oracle",
            passed: bad == 0,
            detail: format!("{bad} mismatches over {datasets} odd-n datasets"),
        },
        Err(e) => SuiteReport {
            name: "median-oracle",
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// The default suites with their acceptance-sized workloads.
pub fn run_all(seed: u64) -> Vec<SuiteReport> {
    vec![
        gradient_suite(100, seed),
        moment_suite(100_000, seed),
        median_suite(1000, seed),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tally_flags_wrong_gradients() {
        let mut t = FdTally::default();
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[1];
        t.compare("ok", &[1.5, 2.0], &[3.0, 3.0], 0..2, f);
        assert!(t.passed(), "{:?}", t.failures);
        t.compare("bad", &[1.5, 2.0], &[3.0, 3.001], 0..2, f);
        assert!(!t.passed());
    }

    #[test]
    fn tally_skips_kinks() {
        let mut t = FdTally::default();
        t.compare("abs", &[0.0], &[0.0], 0..1, |x: &[f64]| x[0].abs());
        assert_eq!((t.checked, t.kinks_skipped), (0, 1));
    }

    #[test]
    fn median_oracle_small() {
        assert_eq!(median_mismatches(50, 9).unwrap(), 0);
    }
}
