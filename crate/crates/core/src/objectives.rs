//! JS and TV minimax objectives, the feature-matching penalty, the restricted JS
//! divergence, the closed-form optimal discriminator and 1-D landscape grids.

use std::f64::consts::LN_2;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::nets::{sigmoid, Activation, ForwardTrace, Gradient, Layer, Mlp, Seed};
use crate::numkit::{axpy, cholesky, dot, norm2, Matrix, Rng};

const LOG_4: f64 = 2.0 * LN_2;

/// Lower clamp applied to `D` and `1 − D` inside logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    Js,
    Tv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegStat {
    #[default]
    MeanMatch,
    MedianMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveKind {
    pub divergence: Divergence,
    /// Weight of the feature-matching penalty; 0 skips it.
    #[serde(default)]
    pub lambda_reg: f64,
    #[serde(default)]
    pub reg_stat: RegStat,
}

impl ObjectiveKind {
    pub const JS: ObjectiveKind = ObjectiveKind {
        divergence: Divergence::Js,
        lambda_reg: 0.0,
        reg_stat: RegStat::MeanMatch,
    };
    pub const TV: ObjectiveKind = ObjectiveKind {
        divergence: Divergence::Tv,
        lambda_reg: 0.0,
        reg_stat: RegStat::MeanMatch,
    };

    pub fn with_penalty(self, lambda_reg: f64) -> Self {
        Self { lambda_reg, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_reg >= 0.0) || !self.lambda_reg.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda_reg must be finite and non-negative, got {}",
                self.lambda_reg
            )));
        }
        Ok(())
    }
}

/// A real minibatch and a generated minibatch of equal shape.
#[derive(Debug, Clone)]
pub struct BatchPair {
    real: Matrix,
    fake: Matrix,
}

impl BatchPair {
    pub fn new(real: Matrix, fake: Matrix) -> Result<Self> {
        check_dim("BatchPair rows", real.rows(), fake.rows())?;
        check_dim("BatchPair cols", real.cols(), fake.cols())?;
        if real.rows() == 0 {
            return Err(Error::Empty("minibatch"));
        }
        Ok(Self { real, fake })
    }

    pub fn real(&self) -> &Matrix {
        &self.real
    }

    pub fn fake(&self) -> &Matrix {
        &self.fake
    }
}

/// Objective value plus the number of clamped logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub clamp_count: usize,
}

/// `log σ(z)`, computed without overflow.
#[inline]
pub fn log_sigmoid(z: f64) -> f64 {
    -softplus(-z)
}

#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn log_clamp() -> f64 {
    LOG_CLAMP.ln()
}

fn require_sigmoid_output(d: &Mlp) -> Result<()> {
    if d.output_layer().act == Activation::Sigmoid {
        Ok(())
    } else {
        Err(Error::InvalidConfig(
            "discriminator output activation must be sigmoid".into(),
        ))
    }
}

/// `log D` from the logit, clamped at `log 1e-12`. Returns `(value, slope, clamped)`
/// where slope is the derivative with respect to the logit (0 when clamped).
#[inline]
fn log_d(z: f64) -> (f64, f64, bool) {
    let v = log_sigmoid(z);
    if v < log_clamp() {
        (log_clamp(), 0.0, true)
    } else {
        (v, 1.0 - sigmoid(z), false)
    }
}

/// `log(1 − D)` from the logit, clamped likewise.
#[inline]
fn log_one_minus_d(z: f64) -> (f64, f64, bool) {
    let v = log_sigmoid(-z);
    if v < log_clamp() {
        (log_clamp(), 0.0, true)
    } else {
        (v, -sigmoid(z), false)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(1/m)Σ log D(real) + (1/m)Σ log(1 − D(fake)) + log 4`.
pub fn js_value(d: &Mlp, b: &BatchPair) -> Result<f64> {
    Ok(objective_value(d, b, &ObjectiveKind::JS)?.value)
}

/// `(1/m)Σ D(real) − (1/m)Σ D(fake)`.
pub fn tv_value(d: &Mlp, b: &BatchPair) -> Result<f64> {
    Ok(objective_value(d, b, &ObjectiveKind::TV)?.value)
}

/// The divergence term of `kind` (without the feature penalty).
pub fn objective_value(d: &Mlp, b: &BatchPair, kind: &ObjectiveKind) -> Result<ObjectiveValue> {
    let real = d.trace(&b.real)?;
    let fake = d.trace(&b.fake)?;
    divergence_from_traces(d, &real, &fake, kind.divergence)
}

fn divergence_from_traces(
    d: &Mlp,
    real: &ForwardTrace,
    fake: &ForwardTrace,
    divergence: Divergence,
) -> Result<ObjectiveValue> {
    match divergence {
        Divergence::Js => {
            require_sigmoid_output(d)?;
            let mut clamp_count = 0;
            let mut sum_real = 0.0;
            for &z in real.logits() {
                let (v, _, c) = log_d(z);
                sum_real += v;
                clamp_count += c as usize;
            }
            let mut sum_fake = 0.0;
            for &z in fake.logits() {
                let (v, _, c) = log_one_minus_d(z);
                sum_fake += v;
                clamp_count += c as usize;
            }
            let value = sum_real / real.logits().len() as f64 + sum_fake / fake.logits().len() as f64 + LOG_4;
            Ok(ObjectiveValue { value, clamp_count })
        }
        Divergence::Tv => Ok(ObjectiveValue {
            value: mean(real.output()) - mean(fake.output()),
            clamp_count: 0,
        }),
    }
}

/// Per-feature statistic over the rows of `m`.
pub fn feature_statistic(m: &Matrix, stat: RegStat) -> Vec<f64> {
    match stat {
        RegStat::MeanMatch => {
            let mut out = vec![0.0; m.cols()];
            for row in m.row_iter() {
                axpy(1.0, row, &mut out);
            }
            out.iter_mut().for_each(|v| *v /= m.rows() as f64);
            out
        }
        RegStat::MedianMatch => (0..m.cols()).map(|j| median_weights(&m.column(j)).0).collect(),
    }
}

/// Median of `v` and the (sub)gradient weights it places on each entry.
fn median_weights(v: &[f64]) -> (f64, Vec<(usize, f64)>) {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]).then(a.cmp(&b)));
    let n = v.len();
    if n % 2 == 1 {
        (v[idx[n / 2]], vec![(idx[n / 2], 1.0)])
    } else {
        let (lo, hi) = (idx[n / 2 - 1], idx[n / 2]);
        (0.5 * (v[lo] + v[hi]), vec![(lo, 0.5), (hi, 0.5)])
    }
}

/// `‖T(Φ_D, real) − T(Φ_D, fake)‖²`, where `Φ_D` is the discriminator without its
/// output layer (the raw input for a network with no hidden layer).
pub fn feature_reg(d: &Mlp, b: &BatchPair, stat: RegStat) -> Result<f64> {
    let real = d.trace(&b.real)?;
    let fake = d.trace(&b.fake)?;
    Ok(feature_reg_from_traces(&real, &fake, stat))
}

fn feature_reg_from_traces(real: &ForwardTrace, fake: &ForwardTrace, stat: RegStat) -> f64 {
    let tr = feature_statistic(real.features(), stat);
    let tf = feature_statistic(fake.features(), stat);
    tr.iter().zip(&tf).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Gradient of the feature penalty with respect to the feature matrix of one side.
/// `sign` is +1 for the real side and −1 for the fake side.
fn feature_reg_upstream(features: &Matrix, diff: &[f64], stat: RegStat, sign: f64) -> Matrix {
    let m = features.rows();
    let mut up = Matrix::zeros(m, features.cols());
    for (k, &dk) in diff.iter().enumerate() {
        let g = sign * 2.0 * dk;
        match stat {
            RegStat::MeanMatch => {
                for i in 0..m {
                    up[(i, k)] = g / m as f64;
                }
            }
            RegStat::MedianMatch => {
                for (i, w) in median_weights(&features.column(k)).1 {
                    up[(i, k)] = g * w;
                }
            }
        }
    }
    up
}

/// Which player's loss receives the feature penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegSide {
    /// Added to the generator loss only.
    #[default]
    Generator,
    /// Added to the generator loss and subtracted from the discriminator objective.
    Both,
}

/// Discriminator objective (to be maximized) and its parameter gradient.
pub struct DiscriminatorEval {
    pub value: ObjectiveValue,
    pub grad: Gradient,
}

/// Value and gradient of the discriminator's ascent objective: the divergence term,
/// minus `λ·r` when `with_penalty` is set.
pub fn discriminator_value_and_grad(
    d: &Mlp,
    b: &BatchPair,
    kind: &ObjectiveKind,
    with_penalty: bool,
) -> Result<DiscriminatorEval> {
    let real = d.trace(&b.real)?;
    let fake = d.trace(&b.fake)?;
    let mut value = divergence_from_traces(d, &real, &fake, kind.divergence)?;
    let depth = d.layers().len();
    let mr = b.real.rows() as f64;
    let mf = b.fake.rows() as f64;

    let (up_real, up_fake, seed) = match kind.divergence {
        Divergence::Js => (
            real.logits().iter().map(|&z| log_d(z).1 / mr).collect::<Vec<_>>(),
            fake.logits()
                .iter()
                .map(|&z| log_one_minus_d(z).1 / mf)
                .collect::<Vec<_>>(),
            Seed::PreActivation,
        ),
        Divergence::Tv => (
            vec![1.0 / mr; b.real.rows()],
            vec![-1.0 / mf; b.fake.rows()],
            Seed::Output,
        ),
    };
    let (mut grad, _) = d.backward(&real, depth, &Matrix::column_vector(&up_real), seed);
    let (g_fake, _) = d.backward(&fake, depth, &Matrix::column_vector(&up_fake), seed);
    grad.add_scaled(1.0, &g_fake);

    if with_penalty && kind.lambda_reg > 0.0 {
        let r = feature_reg_from_traces(&real, &fake, kind.reg_stat);
        value.value -= kind.lambda_reg * r;
        if depth >= 2 {
            let diff = stat_diff(&real, &fake, kind.reg_stat);
            for (trace, sign) in [(&real, 1.0), (&fake, -1.0)] {
                let up = feature_reg_upstream(trace.features(), &diff, kind.reg_stat, sign);
                let (g, _) = d.backward(trace, depth - 1, &up, Seed::Output);
                grad.add_scaled(-kind.lambda_reg, &g);
            }
        }
    }
    Ok(DiscriminatorEval { value, grad })
}

fn stat_diff(real: &ForwardTrace, fake: &ForwardTrace, stat: RegStat) -> Vec<f64> {
    let tr = feature_statistic(real.features(), stat);
    let tf = feature_statistic(fake.features(), stat);
    tr.iter().zip(&tf).map(|(a, b)| a - b).collect()
}

/// Generator loss and its gradient with respect to each fake row.
///
/// JS: `(1/m)Σ log(1 − D(x))`; TV: `−(1/m)Σ D(x)`. When `real` is given and
/// `λ > 0`, `λ·r` is added.
pub fn generator_loss_and_input_grad(
    d: &Mlp,
    fake: &Matrix,
    real: Option<&Matrix>,
    kind: &ObjectiveKind,
) -> Result<(f64, Matrix)> {
    let trace = d.trace(fake)?;
    let m = fake.rows() as f64;
    let depth = d.layers().len();
    let (loss, up, seed) = match kind.divergence {
        Divergence::Js => {
            require_sigmoid_output(d)?;
            let mut loss = 0.0;
            let up: Vec<f64> = trace
                .logits()
                .iter()
                .map(|&z| {
                    let (v, s, _) = log_one_minus_d(z);
                    loss += v;
                    s / m
                })
                .collect();
            (loss / m, up, Seed::PreActivation)
        }
        Divergence::Tv => (-mean(trace.output()), vec![-1.0 / m; fake.rows()], Seed::Output),
    };
    let (_, mut gx) = d.backward(&trace, depth, &Matrix::column_vector(&up), seed);
    let mut loss = loss;

    if let (Some(real), true) = (real, kind.lambda_reg > 0.0) {
        let real_trace = d.trace(real)?;
        let diff = stat_diff(&real_trace, &trace, kind.reg_stat);
        loss += kind.lambda_reg * diff.iter().map(|v| v * v).sum::<f64>();
        let up = feature_reg_upstream(trace.features(), &diff, kind.reg_stat, -1.0);
        let gr = if depth >= 2 {
            d.backward(&trace, depth - 1, &up, Seed::Output).1
        } else {
            up
        };
        gx.add_scaled(kind.lambda_reg, &gr)?;
    }
    Ok((loss, gx))
}

/// Zero-hidden-layer discriminator `sigmoid((θ−η)ᵀx + (‖η‖² − ‖θ‖²)/2)`, the
/// population-optimal JS discriminator between `N(θ, I)` and `N(η, I)`.
pub fn optimal_discriminator(theta: &[f64], eta: &[f64]) -> Result<Mlp> {
    check_dim("optimal_discriminator", theta.len(), eta.len())?;
    let w: Vec<f64> = theta.iter().zip(eta).map(|(t, e)| t - e).collect();
    let b = 0.5 * (dot(eta, eta) - dot(theta, theta));
    Mlp::new(vec![Layer {
        weights: Matrix::from_vec(1, w.len(), w)?,
        bias: Some(vec![b]),
        act: Activation::Sigmoid,
    }])
}

pub const RESTRICTED_JS_TOL: f64 = 1e-10;
const RESTRICTED_JS_MAX_ITER: usize = 500;

/// Concave logistic objective over a fixed feature map.
struct LogisticProblem<'a> {
    real: &'a Matrix,
    fake: &'a Matrix,
}

impl LogisticProblem<'_> {
    fn value(&self, w: &[f64]) -> f64 {
        let r: f64 = self.real.row_iter().map(|g| log_sigmoid(dot(w, g))).sum();
        let f: f64 = self.fake.row_iter().map(|g| log_sigmoid(-dot(w, g))).sum();
        r / self.real.rows() as f64 + f / self.fake.rows() as f64 + LOG_4
    }

    fn gradient_and_curvature(&self, w: &[f64]) -> (Vec<f64>, Matrix) {
        let d = w.len();
        let mut grad = vec![0.0; d];
        let mut curv = Matrix::zeros(d, d);
        for (m, sign) in [(self.real, 1.0), (self.fake, -1.0)] {
            let inv = 1.0 / m.rows() as f64;
            for g in m.row_iter() {
                let s = sigmoid(dot(w, g));
                let slope = if sign > 0.0 { 1.0 - s } else { -s };
                axpy(slope * inv, g, &mut grad);
                let c = s * (1.0 - s) * inv;
                for i in 0..d {
                    for j in 0..=i {
                        curv[(i, j)] += c * g[i] * g[j];
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                curv[(j, i)] = curv[(i, j)];
            }
        }
        (grad, curv)
    }
}

fn project_ball(w: &mut [f64], radius: f64) {
    let n = norm2(w);
    if n > radius {
        w.iter_mut().for_each(|v| *v *= radius / n);
    }
}

/// Newton direction `(C + δI)⁻¹ g` for the negated Hessian `C`.
fn newton_direction(curv: &Matrix, grad: &[f64]) -> Vec<f64> {
    let d = grad.len();
    let scale = (0..d).map(|i| curv[(i, i)]).fold(0.0, f64::max).max(1e-300);
    let mut ridge = 1e-12 * scale;
    loop {
        let mut m = curv.clone();
        for i in 0..d {
            m[(i, i)] += ridge;
        }
        if let Ok(l) = cholesky(&m) {
            let mut y = vec![0.0; d];
            for i in 0..d {
                y[i] = (grad[i] - (0..i).map(|k| l[(i, k)] * y[k]).sum::<f64>()) / l[(i, i)];
            }
            let mut x = vec![0.0; d];
            for i in (0..d).rev() {
                x[i] = (y[i] - (i + 1..d).map(|k| l[(k, i)] * x[k]).sum::<f64>()) / l[(i, i)];
            }
            return x;
        }
        ridge *= 100.0;
    }
}

/// Restricted JS divergence
/// `sup_{‖w‖₂ ≤ w_cap} (1/n)Σ log σ(wᵀg(Xᵢ)) + (1/m)Σ log(1 − σ(wᵀg(Yⱼ))) + log 4`.
///
/// The objective is concave in `w`; projected Newton ascent with backtracking
/// runs until the projected gradient step is below [`RESTRICTED_JS_TOL`].
pub fn restricted_js<G>(real: &Matrix, fake: &Matrix, features: G, w_cap: f64) -> Result<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    Ok(restricted_js_argmax(real, fake, features, w_cap)?.0)
}

/// The concave inner objective of [`restricted_js`] at a fixed `w`.
pub fn restricted_js_objective<G>(real: &Matrix, fake: &Matrix, features: G, w: &[f64]) -> Result<f64>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let (gr, gf) = (feature_rows(real, &features)?, feature_rows(fake, &features)?);
    check_dim("restricted_js_objective w", gr.cols(), w.len())?;
    check_dim("restricted_js feature width", gr.cols(), gf.cols())?;
    Ok(LogisticProblem { real: &gr, fake: &gf }.value(w))
}

fn feature_rows<G>(m: &Matrix, features: &G) -> Result<Matrix>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    if m.rows() == 0 {
        return Err(Error::Empty("restricted_js sample"));
    }
    let rows: Vec<Vec<f64>> = m.row_iter().map(features).collect();
    Matrix::from_rows(&rows)
}

/// [`restricted_js`] together with the maximizing `w`.
pub fn restricted_js_argmax<G>(real: &Matrix, fake: &Matrix, features: G, w_cap: f64) -> Result<(f64, Vec<f64>)>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    check_dim("restricted_js dimension", real.cols(), fake.cols())?;
    if real.rows() == 0 || fake.rows() == 0 {
        return Err(Error::Empty("restricted_js sample"));
    }
    if !(w_cap > 0.0) {
        return Err(Error::InvalidConfig(format!("w_cap must be positive, got {w_cap}")));
    }
    let (gr, gf) = (feature_rows(real, &features)?, feature_rows(fake, &features)?);
    check_dim("restricted_js feature width", gr.cols(), gf.cols())?;
    let problem = LogisticProblem { real: &gr, fake: &gf };

    let mut w = vec![0.0; gr.cols()];
    let mut value = problem.value(&w);
    let mut step_norm = f64::INFINITY;
    for _ in 0..RESTRICTED_JS_MAX_ITER {
        let (grad, curv) = problem.gradient_and_curvature(&w);
        // Projected-gradient stationarity measure.
        let mut probe: Vec<f64> = w.iter().zip(&grad).map(|(a, g)| a + g).collect();
        project_ball(&mut probe, w_cap);
        step_norm = norm2(&probe.iter().zip(&w).map(|(a, b)| a - b).collect::<Vec<_>>());
        if step_norm <= RESTRICTED_JS_TOL {
            return Ok((value, w));
        }
        let mut improved = false;
        for direction in [newton_direction(&curv, &grad), grad.clone()] {
            let mut t = 1.0;
            for _ in 0..60 {
                let mut cand: Vec<f64> = w.iter().zip(&direction).map(|(a, s)| a + t * s).collect();
                project_ball(&mut cand, w_cap);
                let v = problem.value(&cand);
                if v > value {
                    w = cand;
                    value = v;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if improved {
                break;
            }
        }
        if !improved {
            // No ascent direction improves the value at machine precision.
            return Ok((value, w));
        }
    }
    Err(Error::NoConvergence {
        what: "restricted_js ascent",
        iterations: RESTRICTED_JS_MAX_ITER,
        detail: format!("w = {w:?}, value = {value:e}, projected step = {step_norm:e}"),
    })
}

/// `F(η, w) = max_b [mean σ(w·x + b) over data − mean σ(w·z + b) over z ~ N(η, 1)]`
/// for every pair in `eta_grid × w_grid`. Row `i` uses its own derived stream of
/// `fake_draws` normals, shared across the `w` grid.
pub fn landscape_grid(data: &[f64], eta_grid: &[f64], w_grid: &[f64], fake_draws: usize, seed: u64) -> Result<Matrix> {
    if data.is_empty() || fake_draws == 0 {
        return Err(Error::Empty("landscape sample"));
    }
    let root = Rng::new(seed);
    let rows: Vec<Vec<f64>> = eta_grid
        .par_iter()
        .enumerate()
        .map(|(i, &eta)| {
            let mut rng = root.derive(i as u64);
            let fake: Vec<f64> = (0..fake_draws).map(|_| eta + rng.standard_normal()).collect();
            w_grid.iter().map(|&w| best_over_bias(data, &fake, w)).collect()
        })
        .collect();
    Matrix::from_rows(&rows).map(|m| {
        if rows.is_empty() {
            Matrix::zeros(0, w_grid.len())
        } else {
            m
        }
    })
}

const BIAS_TOL: f64 = 1e-6;
/// Scan spacing of the decision threshold `−b/w`, in units of `max(1, 1/|w|)`.
const THRESHOLD_STEP: f64 = 0.25;

fn best_over_bias(data: &[f64], fake: &[f64], w: f64) -> f64 {
    if w == 0.0 {
        return 0.0;
    }
    let gap = |b: f64| -> f64 {
        let r: f64 = data.iter().map(|&x| sigmoid(w * x + b)).sum::<f64>() / data.len() as f64;
        let f: f64 = fake.iter().map(|&z| sigmoid(w * z + b)).sum::<f64>() / fake.len() as f64;
        r - f
    };
    // The sigmoid's transition sits at x = −b/w with width ~1/|w|; scanning the
    // threshold over the sample range (padded by a few widths) covers every
    // non-flat region of the gap.
    let (lo, hi) = data
        .iter()
        .chain(fake)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    let width = 1.0 / w.abs();
    let (lo, hi) = (lo - 5.0 * width, hi + 5.0 * width);
    let step_x = THRESHOLD_STEP * width.max(1.0);
    let points = ((hi - lo) / step_x).ceil() as usize + 1;
    let step = step_x * w.abs();
    let (mut best_b, mut best) = (0.0, f64::NEG_INFINITY);
    for k in 0..points {
        let b = -w * (lo + k as f64 * step_x);
        let v = gap(b);
        if v > best {
            best = v;
            best_b = b;
        }
    }
    // Golden-section refinement around the best scan point.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_b - step, best_b + step);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (gap(c), gap(d));
    while hi - lo > BIAS_TOL {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = gap(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = gap(d);
        }
    }
    // b → ±∞ makes the gap vanish, so the supremum is never negative.
    best.max(fc).max(fd).max(0.0)
}

/// Writes `eta,w,value` triples, one per grid cell.
pub fn write_landscape_csv<W: Write>(mut out: W, eta_grid: &[f64], w_grid: &[f64], grid: &Matrix) -> Result<()> {
    check_dim("landscape rows", eta_grid.len(), grid.rows())?;
    check_dim("landscape cols", w_grid.len(), grid.cols())?;
    writeln!(out, "eta,w,value")?;
    for (i, eta) in eta_grid.iter().enumerate() {
        for (j, w) in w_grid.iter().enumerate() {
            writeln!(out, "{eta},{w},{}", grid[(i, j)])?;
        }
    }
    Ok(())
}

/// Per-row argmax of a landscape grid; the first maximum wins.
pub fn argmax_w(w_grid: &[f64], grid: &Matrix) -> Vec<f64> {
    grid.row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            w_grid[best]
        })
        .collect()
}
