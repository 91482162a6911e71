//! Generator families: a pure location shift, an affine map with a
//! lower-triangular scatter factor, and an elliptical generator whose radius is a
//! small network.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nets::{Activation, Gradient, InitScheme, Mlp, Seed};
use crate::numkit::{axpy, sample_sphere, Matrix, Rng};
use crate::objectives::{generator_loss_and_input_grad, ObjectiveKind};

/// Law of the radial network's input noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    #[default]
    Gaussian,
    /// Uniform on `[-1, 1]` per coordinate.
    Uniform,
}

/// Default radial network `48-48-32-24-12-1`.
pub const RADIAL_DIMS: [usize; 6] = [48, 48, 32, 24, 12, 1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `G(z) = z + eta`.
    Location { eta: Vec<f64> },
    /// `G(z) = a z + eta` with `a` lower-triangular.
    Affine { eta: Vec<f64>, a: Matrix },
    /// `G(ξ, u) = radial(ξ) · a u + eta`, `u` uniform on the sphere.
    Elliptical {
        eta: Vec<f64>,
        a: Option<Matrix>,
        radial: Mlp,
        noise: NoiseLaw,
    },
}

/// Base noise behind a generated batch; replaying it reproduces the batch exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseNoise {
    /// `z` rows for location/affine generators, `ξ` rows for the elliptical one.
    pub z: Matrix,
    /// Sphere directions (elliptical only).
    pub directions: Option<Matrix>,
}

/// Gradient with the same trainable layout as a [`Generator`].
#[derive(Debug, Clone, PartialEq)]
pub struct GenGradient {
    pub eta: Vec<f64>,
    pub a: Option<Matrix>,
    pub radial: Option<Gradient>,
}

impl GenGradient {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = self.eta.clone();
        if let Some(a) = &self.a {
            out.extend_from_slice(a.as_slice());
        }
        if let Some(r) = &self.radial {
            out.extend(r.flatten());
        }
        out
    }
}

impl Generator {
    pub fn location(eta: Vec<f64>) -> Self {
        Generator::Location { eta }
    }

    /// Affine generator starting from the identity scatter factor.
    pub fn affine(eta: Vec<f64>) -> Self {
        let p = eta.len();
        Generator::Affine {
            eta,
            a: Matrix::identity(p),
        }
    }

    /// Elliptical generator with the default radial architecture, ReLU hidden
    /// units and an absolute-value output.
    pub fn elliptical(eta: Vec<f64>, with_scatter: bool, noise: NoiseLaw, rng: &mut Rng) -> Result<Self> {
        let p = eta.len();
        let mut acts = vec![Activation::Relu; RADIAL_DIMS.len() - 2];
        acts.push(Activation::Abs);
        let radial = Mlp::init(&RADIAL_DIMS, &acts, InitScheme::Xavier, rng)?;
        Ok(Generator::Elliptical {
            eta,
            a: with_scatter.then(|| Matrix::identity(p)),
            radial,
            noise,
        })
    }

    pub fn eta(&self) -> &[f64] {
        match self {
            Generator::Location { eta } | Generator::Affine { eta, .. } | Generator::Elliptical { eta, .. } => eta,
        }
    }

    pub fn eta_mut(&mut self) -> &mut Vec<f64> {
        match self {
            Generator::Location { eta } | Generator::Affine { eta, .. } | Generator::Elliptical { eta, .. } => eta,
        }
    }

    pub fn dim(&self) -> usize {
        self.eta().len()
    }

    /// Scatter factor, when the variant has one.
    pub fn scatter_factor(&self) -> Option<&Matrix> {
        match self {
            Generator::Location { .. } => None,
            Generator::Affine { a, .. } => Some(a),
            Generator::Elliptical { a, .. } => a.as_ref(),
        }
    }

    /// `a aᵀ`, when the variant has a scatter factor.
    pub fn scatter(&self) -> Option<Matrix> {
        self.scatter_factor().map(Matrix::gram_outer)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.dim();
        if p == 0 {
            return Err(Error::Empty("generator location"));
        }
        if let Some(a) = self.scatter_factor() {
            check_dim("generator scatter rows", p, a.rows())?;
            check_dim("generator scatter cols", p, a.cols())?;
        }
        if let Generator::Elliptical { radial, .. } = self {
            if radial.output_layer().act != Activation::Abs {
                return Err(Error::InvalidConfig(
                    "radial network must end in an absolute-value output".into(),
                ));
            }
        }
        Ok(())
    }

    /// Draws `m` samples and the base noise that produced them.
    pub fn sample(&self, rng: &mut Rng, m: usize) -> Result<(Matrix, BaseNoise)> {
        let p = self.dim();
        let noise = match self {
            Generator::Location { .. } | Generator::Affine { .. } => {
                let z: Vec<f64> = (0..m * p).map(|_| rng.standard_normal()).collect();
                BaseNoise {
                    z: Matrix::from_vec(m, p, z)?,
                    directions: None,
                }
            }
            Generator::Elliptical { radial, noise, .. } => {
                let k = radial.input_dim();
                let xi: Vec<f64> = (0..m * k)
                    .map(|_| match noise {
                        NoiseLaw::Gaussian => rng.standard_normal(),
                        NoiseLaw::Uniform => rng.uniform_range(-1.0, 1.0),
                    })
                    .collect();
                let mut dirs = Vec::with_capacity(m * p);
                for _ in 0..m {
                    dirs.extend(sample_sphere(rng, p));
                }
                BaseNoise {
                    z: Matrix::from_vec(m, k, xi)?,
                    directions: Some(Matrix::from_vec(m, p, dirs)?),
                }
            }
        };
        let x = self.push_forward(&noise)?;
        Ok((x, noise))
    }

    /// Deterministic map from base noise to samples.
    pub fn push_forward(&self, noise: &BaseNoise) -> Result<Matrix> {
        match self {
            Generator::Location { eta } => {
                check_dim("push_forward noise width", eta.len(), noise.z.cols())?;
                let mut x = noise.z.clone();
                for i in 0..x.rows() {
                    axpy(1.0, eta, x.row_mut(i));
                }
                Ok(x)
            }
            Generator::Affine { eta, a } => {
                check_dim("push_forward noise width", eta.len(), noise.z.cols())?;
                let mut x = noise.z.matmul(&a.transpose())?;
                for i in 0..x.rows() {
                    axpy(1.0, eta, x.row_mut(i));
                }
                Ok(x)
            }
            Generator::Elliptical { eta, a, radial, .. } => {
                let u = elliptical_directions(noise, eta.len(), a.as_ref())?;
                let r = radial.forward_batch(&noise.z)?;
                let mut x = u;
                for (i, &ri) in r.iter().enumerate() {
                    let row = x.row_mut(i);
                    row.iter_mut().for_each(|v| *v *= ri);
                    axpy(1.0, eta, row);
                }
                Ok(x)
            }
        }
    }

    /// Pulls a per-sample gradient `dx` (one row per generated point) back to the
    /// generator parameters.
    pub fn pullback(&self, noise: &BaseNoise, dx: &Matrix) -> Result<GenGradient> {
        let p = self.dim();
        check_dim("pullback width", p, dx.cols())?;
        check_dim("pullback rows", noise.z.rows(), dx.rows())?;
        let mut g_eta = vec![0.0; p];
        for row in dx.row_iter() {
            axpy(1.0, row, &mut g_eta);
        }
        match self {
            Generator::Location { .. } => Ok(GenGradient {
                eta: g_eta,
                a: None,
                radial: None,
            }),
            Generator::Affine { .. } => Ok(GenGradient {
                eta: g_eta,
                a: Some(lower_outer_sum(dx, &noise.z, None)),
                radial: None,
            }),
            Generator::Elliptical { a, radial, .. } => {
                let u = noise
                    .directions
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("elliptical noise without directions".into()))?;
                let v = elliptical_directions(noise, p, a.as_ref())?;
                let trace = radial.trace(&noise.z)?;
                let r = trace.output();
                let g_a = a.as_ref().map(|_| lower_outer_sum(dx, u, Some(r)));
                let dr: Vec<f64> = dx
                    .row_iter()
                    .zip(v.row_iter())
                    .map(|(g, vi)| crate::numkit::dot(g, vi))
                    .collect();
                let (g_radial, _) =
                    radial.backward(&trace, radial.layers().len(), &Matrix::column_vector(&dr), Seed::Output);
                Ok(GenGradient {
                    eta: g_eta,
                    a: g_a,
                    radial: Some(g_radial),
                })
            }
        }
    }

    /// `self += alpha · grad`; the scatter factor stays lower-triangular.
    pub fn apply_step(&mut self, alpha: f64, grad: &GenGradient) {
        axpy(alpha, &grad.eta, self.eta_mut());
        match self {
            Generator::Location { .. } => {}
            Generator::Affine { a, .. } => {
                if let Some(g) = &grad.a {
                    a.add_scaled(alpha, g).expect("scatter layout");
                }
            }
            Generator::Elliptical { a, radial, .. } => {
                if let (Some(a), Some(g)) = (a.as_mut(), &grad.a) {
                    a.add_scaled(alpha, g).expect("scatter layout");
                }
                if let Some(g) = &grad.radial {
                    radial.apply_step(alpha, g);
                }
            }
        }
    }

    /// Trainable parameters, flattened in the [`GenGradient::flatten`] order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = self.eta().to_vec();
        if let Some(a) = self.scatter_factor() {
            out.extend_from_slice(a.as_slice());
        }
        if let Generator::Elliptical { radial, .. } = self {
            out.extend(radial.params());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        check_dim("Generator::set_params", self.params().len(), params.len())?;
        let p = self.dim();
        self.eta_mut().copy_from_slice(&params[..p]);
        let mut offset = p;
        match self {
            Generator::Location { .. } => {}
            Generator::Affine { a, .. } => a.as_mut_slice().copy_from_slice(&params[offset..]),
            Generator::Elliptical { a, radial, .. } => {
                if let Some(a) = a.as_mut() {
                    a.as_mut_slice().copy_from_slice(&params[offset..offset + p * p]);
                    offset += p * p;
                }
                radial.set_params(&params[offset..])?;
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|v| v.is_finite())
    }
}

fn elliptical_directions(noise: &BaseNoise, p: usize, a: Option<&Matrix>) -> Result<Matrix> {
    let u = noise
        .directions
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("elliptical noise without directions".into()))?;
    check_dim("elliptical direction width", p, u.cols())?;
    match a {
        Some(a) => u.matmul(&a.transpose()),
        None => Ok(u.clone()),
    }
}

/// `Σᵢ sᵢ · dxᵢ zᵢᵀ` restricted to the lower triangle.
fn lower_outer_sum(dx: &Matrix, z: &Matrix, scale: Option<&[f64]>) -> Matrix {
    let p = dx.cols();
    let mut g = Matrix::zeros(p, p);
    for (i, (d, zi)) in dx.row_iter().zip(z.row_iter()).enumerate() {
        let s = scale.map_or(1.0, |s| s[i]);
        for r in 0..p {
            for c in 0..=r {
                g[(r, c)] += s * d[r] * zi[c];
            }
        }
    }
    g
}

/// Draws a batch from `g`, as [`Generator::sample`].
pub fn gen_sample(g: &Generator, rng: &mut Rng, m: usize) -> Result<(Matrix, BaseNoise)> {
    if m == 0 {
        return Err(Error::Empty("generator batch"));
    }
    g.sample(rng, m)
}

/// Pathwise gradient of the generator loss (JS: `(1/m)Σ log(1 − D(G(z)))`,
/// TV: `−(1/m)Σ D(G(z))`) at the batch produced by `noise`.
pub fn gen_grad(g: &Generator, d: &Mlp, noise: &BaseNoise, kind: &ObjectiveKind) -> Result<GenGradient> {
    gen_loss_and_grad(g, d, noise, None, kind).map(|(_, grad)| grad)
}

/// Generator loss and gradient; with `real` present the feature penalty is included.
pub fn gen_loss_and_grad(
    g: &Generator,
    d: &Mlp,
    noise: &BaseNoise,
    real: Option<&Matrix>,
    kind: &ObjectiveKind,
) -> Result<(f64, GenGradient)> {
    let fake = g.push_forward(noise)?;
    let (loss, dx) = generator_loss_and_input_grad(d, &fake, real, kind)?;
    Ok((loss, g.pullback(noise, &dx)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{sigmoid, Layer};

    #[test]
    fn replay_is_bit_identical() {
        let mut rng = Rng::new(4);
        let g = Generator::elliptical(vec![1.0, -2.0, 0.5], true, NoiseLaw::Gaussian, &mut rng).unwrap();
        let (x, noise) = gen_sample(&g, &mut rng, 17).unwrap();
        assert_eq!(g.push_forward(&noise).unwrap(), x);
    }

    #[test]
    fn affine_identity_matches_location() {
        let eta = vec![0.3, -0.1];
        let (a, _) = gen_sample(&Generator::affine(eta.clone()), &mut Rng::new(9), 5).unwrap();
        let (l, _) = gen_sample(&Generator::location(eta), &mut Rng::new(9), 5).unwrap();
        assert_eq!(a, l);
    }

    #[test]
    fn unit_radius_lands_on_sphere() {
        let mut rng = Rng::new(1);
        let mut g = Generator::elliptical(vec![2.0, 2.0, 2.0, 2.0], false, NoiseLaw::Uniform, &mut rng).unwrap();
        if let Generator::Elliptical { radial, .. } = &mut g {
            // zero every weight, output bias 1: radial ≡ |1| = 1
            let n = radial.params().len();
            let mut params = vec![0.0; n];
            params[n - 1] = 1.0;
            radial.set_params(&params).unwrap();
        }
        let (x, _) = gen_sample(&g, &mut rng, 50).unwrap();
        for row in x.row_iter() {
            let r: f64 = row.iter().map(|v| (v - 2.0) * (v - 2.0)).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn location_gradient_closed_form() {
        let (w, b, eta, z) = (1.7, -0.4, 0.3, 0.9);
        let d = Mlp::new(vec![Layer {
            weights: Matrix::from_vec(1, 1, vec![w]).unwrap(),
            bias: Some(vec![b]),
            act: Activation::Sigmoid,
        }])
        .unwrap();
        let g = Generator::location(vec![eta]);
        let noise = BaseNoise {
            z: Matrix::from_vec(1, 1, vec![z]).unwrap(),
            directions: None,
        };
        let grad = gen_grad(&g, &d, &noise, &ObjectiveKind::JS).unwrap();
        let expected = -w * sigmoid(w * (z + eta) + b);
        assert!((grad.eta[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn constant_discriminator_gives_zero_gradient() {
        let d = Mlp::init(&[2, 1], &[Activation::Sigmoid], InitScheme::Zero, &mut Rng::new(0)).unwrap();
        let g = Generator::affine(vec![0.0, 1.0]);
        let (_, noise) = gen_sample(&g, &mut Rng::new(2), 8).unwrap();
        for kind in [ObjectiveKind::JS, ObjectiveKind::TV] {
            let grad = gen_grad(&g, &d, &noise, &kind).unwrap();
            assert!(grad.flatten().iter().all(|&v| v == 0.0));
        }
    }
}
