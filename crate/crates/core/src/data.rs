//! Samplers for Huber contamination models `(1 − ε) P_θ + ε Q`.
//!
//! Each row is assigned to the contaminating law by its own uniform draw, taken
//! from a dedicated stream before any coordinate noise. The assignment pattern
//! and the clean rows are therefore shared by every `Q` at a fixed seed.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numkit::rng::cauchy_from_uniform;
use crate::numkit::{cholesky, invert_spd, norm2, sample_standard_normal, symmetric_eigenvalues, Matrix, Rng};

/// The contaminating distribution `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contamination {
    None,
    /// `N(mu, I_p)`.
    GaussShift {
        mu: Vec<f64>,
    },
    /// `N(mu, sigma)`.
    GaussCov {
        mu: Vec<f64>,
        sigma: Matrix,
    },
    /// Independent coordinates, coordinate `j` standard Cauchy at `tau[j]`.
    CauchyIndep {
        tau: Vec<f64>,
    },
    /// Multivariate Cauchy with the given location and scatter `scale · I_p`.
    CauchyElliptical {
        location: Vec<f64>,
        scale: f64,
    },
}

/// The clean distribution `P_θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoreDist {
    GaussIdentity,
    GaussCov { sigma: Matrix },
    EllipticalCauchy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub p: usize,
    pub n: usize,
    pub eps: f64,
    pub theta: Vec<f64>,
    pub core: CoreDist,
    pub q: Contamination,
    pub seed: u64,
}

impl DatasetSpec {
    /// Gaussian core `N(0_p, I_p)` with the given contamination.
    pub fn gaussian(p: usize, n: usize, eps: f64, q: Contamination, seed: u64) -> Self {
        Self {
            p,
            n,
            eps,
            theta: vec![0.0; p],
            core: CoreDist::GaussIdentity,
            q,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.n == 0 {
            return Err(Error::InvalidConfig(format!(
                "dataset needs p >= 1 and n >= 1 (got p={}, n={})",
                self.p, self.n
            )));
        }
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(Error::InvalidConfig(format!("eps = {} outside [0, 1]", self.eps)));
        }
        check_dim("DatasetSpec theta", self.p, self.theta.len())?;
        if let CoreDist::GaussCov { sigma } = &self.core {
            check_dim("DatasetSpec core sigma rows", self.p, sigma.rows())?;
            check_dim("DatasetSpec core sigma cols", self.p, sigma.cols())?;
        }
        match &self.q {
            Contamination::None => {}
            Contamination::GaussShift { mu } => check_dim("DatasetSpec q mu", self.p, mu.len())?,
            Contamination::GaussCov { mu, sigma } => {
                check_dim("DatasetSpec q mu", self.p, mu.len())?;
                check_dim("DatasetSpec q sigma rows", self.p, sigma.rows())?;
                check_dim("DatasetSpec q sigma cols", self.p, sigma.cols())?;
            }
            Contamination::CauchyIndep { tau } => check_dim("DatasetSpec q tau", self.p, tau.len())?,
            Contamination::CauchyElliptical { location, scale } => {
                check_dim("DatasetSpec q location", self.p, location.len())?;
                if !(*scale > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "Cauchy scatter scale {scale} must be positive"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A sampled dataset. Estimators receive [`Dataset::observations`] only; the
/// contamination labels are kept for diagnostics.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Matrix,
    labels: Vec<bool>,
    spec: DatasetSpec,
}

impl Dataset {
    pub fn observations(&self) -> &Matrix {
        &self.x
    }

    pub fn into_observations(self) -> Matrix {
        self.x
    }

    pub fn contaminated_labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn contaminated_count(&self) -> usize {
        self.labels.iter().filter(|&&c| c).count()
    }

    pub fn spec(&self) -> &DatasetSpec {
        &self.spec
    }

    /// CSV with header `x1,...,xp,contaminated`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (1..=self.spec.p).map(|j| format!("x{j}")).collect();
        writeln!(out, "{},contaminated", header.join(","))?;
        for (row, &label) in self.x.row_iter().zip(&self.labels) {
            for v in row {
                write!(out, "{v},")?;
            }
            writeln!(out, "{}", u8::from(label))?;
        }
        Ok(())
    }
}

/// Reads a numeric CSV with a header row; `#` lines are comments. A trailing
/// `contaminated` column, if present, is dropped so that labels never reach an
/// estimator.
pub fn read_observations_csv<R: BufRead>(input: R) -> Result<Matrix> {
    let mut lines = input.lines();
    let header = loop {
        let line = lines.next().ok_or(Error::Empty("CSV has no header"))??;
        if !line.starts_with('#') {
            break line;
        }
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let keep = match names.last() {
        Some(&"contaminated") => names.len() - 1,
        _ => names.len(),
    };
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        check_dim("CSV row width", names.len(), fields.len())?;
        for f in &fields[..keep] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("data line {}: bad number {f:?}", lineno + 1)))?;
            data.push(v);
        }
        rows += 1;
    }
    Matrix::from_vec(rows, keep, data)
}

/// Draws `spec.n` rows from `(1 − ε) P_θ + ε Q`.
pub fn sample_contaminated(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let (p, n) = (spec.p, spec.n);
    let root = Rng::new(spec.seed);
    let mut assign = root.derive(0);
    let labels: Vec<bool> = (0..n).map(|_| assign.uniform() < spec.eps).collect();

    let mut clean = Sampler::for_core(&spec.core, &spec.theta)?;
    let mut dirty = Sampler::for_contamination(&spec.q, p)?;
    let mut clean_rng = root.derive(1);
    let mut dirty_rng = root.derive(2);

    let mut x = Matrix::zeros(n, p);
    for (i, &contaminated) in labels.iter().enumerate() {
        let row = x.row_mut(i);
        if contaminated {
            dirty.fill(&mut dirty_rng, row);
        } else {
            clean.fill(&mut clean_rng, row);
        }
    }
    Ok(Dataset {
        x,
        labels,
        spec: spec.clone(),
    })
}

enum Sampler {
    /// `center + factor · z` with `factor` lower-triangular, or identity when `None`.
    Gauss {
        center: Vec<f64>,
        factor: Option<Matrix>,
    },
    CauchyIndep {
        tau: Vec<f64>,
    },
    CauchyElliptical {
        center: Vec<f64>,
        scale: f64,
    },
    /// `Q = None` with ε > 0: contaminated rows fall back to the origin.
    Origin,
}

impl Sampler {
    fn for_core(core: &CoreDist, theta: &[f64]) -> Result<Self> {
        Ok(match core {
            CoreDist::GaussIdentity => Sampler::Gauss {
                center: theta.to_vec(),
                factor: None,
            },
            CoreDist::GaussCov { sigma } => Sampler::Gauss {
                center: theta.to_vec(),
                factor: Some(cholesky(sigma)?),
            },
            CoreDist::EllipticalCauchy => Sampler::CauchyElliptical {
                center: theta.to_vec(),
                scale: 1.0,
            },
        })
    }

    fn for_contamination(q: &Contamination, p: usize) -> Result<Self> {
        Ok(match q {
            Contamination::None => {
                let _ = p;
                Sampler::Origin
            }
            Contamination::GaussShift { mu } => Sampler::Gauss {
                center: mu.clone(),
                factor: None,
            },
            Contamination::GaussCov { mu, sigma } => Sampler::Gauss {
                center: mu.clone(),
                factor: Some(cholesky(sigma)?),
            },
            Contamination::CauchyIndep { tau } => Sampler::CauchyIndep { tau: tau.clone() },
            Contamination::CauchyElliptical { location, scale } => Sampler::CauchyElliptical {
                center: location.clone(),
                scale: *scale,
            },
        })
    }

    fn fill(&mut self, rng: &mut Rng, row: &mut [f64]) {
        match self {
            Sampler::Gauss { center, factor } => {
                let z = sample_standard_normal(rng, row.len());
                match factor {
                    None => {
                        for ((r, c), zi) in row.iter_mut().zip(center.iter()).zip(&z) {
                            *r = c + zi;
                        }
                    }
                    Some(l) => {
                        for (i, r) in row.iter_mut().enumerate() {
                            let lz: f64 = l.row(i)[..=i].iter().zip(&z).map(|(a, b)| a * b).sum();
                            *r = center[i] + lz;
                        }
                    }
                }
            }
            Sampler::CauchyIndep { tau } => {
                for (r, &t) in row.iter_mut().zip(tau.iter()) {
                    *r = cauchy_from_uniform(t, rng.uniform_open());
                }
            }
            Sampler::CauchyElliptical { center, scale } => {
                let draw = elliptical_cauchy_draw(rng, center);
                let s = scale.sqrt();
                for ((r, d), c) in row.iter_mut().zip(draw).zip(center.iter()) {
                    *r = c + s * (d - c);
                }
            }
            Sampler::Origin => row.iter_mut().for_each(|r| *r = 0.0),
        }
    }
}

/// Radius and direction of one multivariate-Cauchy draw in `R^p`.
///
/// With `z ~ N(0, I_p)` and `w ~ N(0, 1)` independent, `z / |w|` is multivariate
/// Cauchy; its direction `z/‖z‖` is uniform on the sphere and independent of the
/// radius `‖z‖/|w|` (a chi(p) over chi(1) ratio).
pub fn cauchy_radius_and_direction(rng: &mut Rng, p: usize) -> (f64, Vec<f64>) {
    loop {
        let mut z = sample_standard_normal(rng, p);
        let w = rng.standard_normal();
        let nz = norm2(&z);
        if nz > 0.0 && w != 0.0 {
            z.iter_mut().for_each(|v| *v /= nz);
            return (nz / w.abs(), z);
        }
    }
}

fn elliptical_cauchy_draw(rng: &mut Rng, theta: &[f64]) -> Vec<f64> {
    let (radius, u) = cauchy_radius_and_direction(rng, theta.len());
    elliptical_point(theta, radius, &u)
}

/// `theta + radius · u`.
pub fn elliptical_point(theta: &[f64], radius: f64, u: &[f64]) -> Vec<f64> {
    theta.iter().zip(u).map(|(t, ui)| t + radius * ui).collect()
}

/// `n` draws from the multivariate Cauchy with location `theta` and identity scatter.
pub fn sample_elliptical_cauchy(rng: &mut Rng, theta: &[f64], n: usize) -> Matrix {
    let p = theta.len();
    let mut x = Matrix::zeros(n, p);
    for i in 0..n {
        let draw = elliptical_cauchy_draw(rng, theta);
        x.row_mut(i).copy_from_slice(&draw);
    }
    x
}

/// The sparse-precision covariance recipe: the precision matrix `Γ̄` and `Σ = Γ̄⁻¹`.
#[derive(Debug, Clone)]
pub struct StructuredCovariance {
    pub precision: Matrix,
    pub sigma: Matrix,
}

/// Builds `Γ̄` from per-entry draws `(z_ij, τ_ij)` for `i ≤ j`, visited row by row.
pub fn structured_precision_from_draws(p: usize, mut draw: impl FnMut(usize, usize) -> (f64, bool)) -> Result<Matrix> {
    let mut gamma = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let (z, tau) = draw(i, j);
            let v = if tau { z } else { 0.0 };
            gamma[(i, j)] = v;
            gamma[(j, i)] = v;
        }
    }
    let min_eig = symmetric_eigenvalues(&gamma)?[0];
    let shift = min_eig.abs() + 0.05;
    for i in 0..p {
        gamma[(i, i)] += shift;
    }
    Ok(gamma)
}

/// `γ_ij = z_ij τ_ij` with `z ~ Uniform(0.4, 0.8)`, `τ ~ Bernoulli(0.1)`, symmetrized,
/// shifted by `|min eig| + 0.05`, then inverted.
pub fn structured_covariance(p: usize, seed: u64) -> StructuredCovariance {
    let mut rng = Rng::new(seed);
    let precision = structured_precision_from_draws(p, |_, _| {
        let z = rng.uniform_range(0.4, 0.8);
        let tau = rng.bernoulli(0.1);
        (z, tau)
    })
    .expect("Jacobi eigensolver converges on small symmetric matrices");
    let sigma = invert_spd(&precision).expect("shifted precision matrix is positive definite");
    StructuredCovariance { precision, sigma }
}

pub fn make_structured_sigma(p: usize, seed: u64) -> Matrix {
    structured_covariance(p, seed).sigma
}
