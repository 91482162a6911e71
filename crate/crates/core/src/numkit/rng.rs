use std::f64::consts::PI;

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Seedable pseudorandom stream.
///
/// Identical seeds give identical streams. Sub-streams come from [`Rng::derive`],
/// which re-seeds with a hash of the parent seed and a stream index; deriving does
/// not consume anything from the parent.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combine a parent seed and a stream index into a child seed.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(mix64(parent) ^ mix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream `index` of this generator's seed.
    pub fn derive(&self, index: u64) -> Rng {
        Rng::new(derive_seed(self.seed, index))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// One N(0, 1) draw (ziggurat).
    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }
}

/// `n` i.i.d. N(0, 1) draws.
pub fn sample_standard_normal(rng: &mut Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.standard_normal()).collect()
}

/// Standard Cauchy shifted to `location`, by inversion of a uniform on `(0, 1)`.
pub fn cauchy_from_uniform(location: f64, u: f64) -> f64 {
    location + (PI * (u - 0.5)).tan()
}

pub fn sample_cauchy(rng: &mut Rng, location: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| cauchy_from_uniform(location, rng.uniform_open()))
        .collect()
}

/// Uniform draw from the unit sphere in `R^p` (normalized Gaussian vector).
///
/// # Panics
/// If `p == 0`.
pub fn sample_sphere(rng: &mut Rng, p: usize) -> Vec<f64> {
    assert!(p >= 1, "sphere dimension must be at least 1");
    loop {
        let mut v = sample_standard_normal(rng, p);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 && norm.is_finite() {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_normal_draw() {
        let mut rng = Rng::new(1);
        assert!(sample_standard_normal(&mut rng, 0).is_empty());
    }

    #[test]
    fn reseeded_streams_repeat() {
        let a = sample_standard_normal(&mut Rng::new(42), 5);
        let b = sample_standard_normal(&mut Rng::new(42), 5);
        assert_eq!(a, b);
    }

    #[test]
    fn derive_does_not_touch_parent() {
        let mut parent = Rng::new(7);
        let _child = parent.derive(3);
        let mut fresh = Rng::new(7);
        assert_eq!(parent.next_u64(), fresh.next_u64());
        assert_ne!(Rng::new(7).derive(0).next_u64(), Rng::new(7).derive(1).next_u64());
    }

    #[test]
    fn normal_moments() {
        let xs = sample_standard_normal(&mut Rng::new(2024), 1_000_000);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // sd(mean) = 1e-3 and sd(var) = sqrt(2/n) ≈ 1.4e-3; 0.01 is far beyond 3σ
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn cauchy_center_forced_uniform() {
        assert_eq!(cauchy_from_uniform(0.5, 0.5), 0.5);
        assert_eq!(cauchy_from_uniform(-3.25, 0.5), -3.25);
    }

    #[test]
    fn cauchy_median() {
        let mut xs = sample_cauchy(&mut Rng::new(11), 0.5, 100_000);
        xs.sort_by(f64::total_cmp);
        let med = 0.5 * (xs[49_999] + xs[50_000]);
        // median sd = π / (2 sqrt(n)) ≈ 0.005
        assert!((med - 0.5).abs() < 0.02, "median {med}");
    }

    #[test]
    fn sphere_norm_and_zero_sphere() {
        let mut rng = Rng::new(5);
        for p in 1..8 {
            let v = sample_sphere(&mut rng, p);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
        for _ in 0..100 {
            let v = sample_sphere(&mut rng, 1);
            assert!(v[0] == 1.0 || v[0] == -1.0);
        }
    }

    #[test]
    fn sphere_coordinate_means() {
        let mut rng = Rng::new(99);
        let n = 100_000;
        let mut sums = [0.0; 3];
        for _ in 0..n {
            let v = sample_sphere(&mut rng, 3);
            for (s, x) in sums.iter_mut().zip(&v) {
                *s += x;
            }
        }
        // each coordinate has variance 1/3, so sd(mean) ≈ 0.0018
        for s in sums {
            assert!((s / n as f64).abs() < 0.02);
        }
    }
}
