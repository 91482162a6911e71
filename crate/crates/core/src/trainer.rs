//! Alternating minimax training: `K` discriminator ascent steps per minibatch,
//! then one generator descent step, with iterate averaging over the final epochs.
//!
//! Training runs in coordinates centred at the generator's initial location, so
//! shifting the data and the initial location by the same vector shifts the
//! estimate by that vector. The returned discriminator therefore acts on
//! `x − center`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::baselines::coordinatewise_median;
use crate::error::{check_dim, Error, Result};
use crate::generators::{gen_loss_and_grad, Generator};
use crate::nets::{project_norms, Activation, InitScheme, Mlp, NormConstraints};
use crate::numkit::{axpy, Matrix, Rng};
use crate::objectives::{discriminator_value_and_grad, objective_value, BatchPair, Divergence, ObjectiveKind, RegSide};

/// Minibatch size used when none is given.
pub const DEFAULT_BATCH: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub gamma_d: f64,
    pub gamma_g: f64,
    pub k_steps: usize,
    pub epochs: usize,
    pub avg_epochs: usize,
    pub batch: usize,
    pub objective: ObjectiveKind,
    #[serde(default)]
    pub constraints: NormConstraints,
    pub init_scheme: InitScheme,
    #[serde(default)]
    pub reg_side: RegSide,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.gamma_d > 0.0 && self.gamma_g > 0.0) {
            return bad(format!(
                "learning rates must be positive: {} / {}",
                self.gamma_d, self.gamma_g
            ));
        }
        if self.k_steps == 0 || self.epochs == 0 || self.batch == 0 {
            return bad("k_steps, epochs and batch must be at least 1".into());
        }
        if self.avg_epochs == 0 || self.avg_epochs > self.epochs {
            return bad(format!(
                "avg_epochs must lie in 1..={}, got {}",
                self.epochs, self.avg_epochs
            ));
        }
        self.objective.validate()?;
        self.constraints.validate()
    }
}

/// One epoch of the training trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Mean discriminator objective over the epoch's minibatches.
    pub objective: f64,
    /// `‖w‖₁` of the discriminator output layer at the end of the epoch.
    pub l1_w: f64,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub theta_hat: Vec<f64>,
    pub sigma_hat: Option<Matrix>,
    pub final_objective: f64,
    pub trace: Vec<TraceEntry>,
    pub clamp_count: usize,
}

impl Estimate {
    /// Baseline estimate with no training history.
    pub fn point(theta_hat: Vec<f64>) -> Self {
        Self {
            theta_hat,
            sigma_hat: None,
            final_objective: f64::NAN,
            trace: Vec::new(),
            clamp_count: 0,
        }
    }

    /// Writes `epoch,objective,l1_w,eta_1,...,eta_p`.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let p = self.theta_hat.len();
        let eta_cols: Vec<String> = (1..=p).map(|j| format!("eta_{j}")).collect();
        writeln!(out, "epoch,objective,l1_w,{}", eta_cols.join(","))?;
        for (e, t) in self.trace.iter().enumerate() {
            let eta: Vec<String> = t.eta.iter().map(f64::to_string).collect();
            writeln!(out, "{},{},{},{}", e + 1, t.objective, t.l1_w, eta.join(","))?;
        }
        Ok(())
    }
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub estimate: Estimate,
    /// Final discriminator, acting on `x − center`.
    pub discriminator: Mlp,
    /// Final generator, in raw coordinates.
    pub generator: Generator,
    pub center: Vec<f64>,
}

/// Rows sorted lexicographically, so that the minibatch schedule does not
/// depend on the order in which observations arrive.
fn canonical_rows(data: &Matrix) -> Matrix {
    let mut idx: Vec<usize> = (0..data.rows()).collect();
    idx.sort_by(|&a, &b| {
        data.row(a)
            .iter()
            .zip(data.row(b))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    data.select_rows(&idx)
}

fn centered(data: &Matrix, center: &[f64]) -> Matrix {
    let mut out = canonical_rows(data);
    for i in 0..out.rows() {
        axpy(-1.0, center, out.row_mut(i));
    }
    out
}

fn shifted(g: &Generator, by: &[f64], sign: f64) -> Generator {
    let mut g = g.clone();
    axpy(sign, by, g.eta_mut());
    g
}

fn check_finite(d: &Mlp, g: &Generator, epoch: usize, trace: &[TraceEntry]) -> Result<()> {
    if d.all_finite() && g.all_finite() {
        return Ok(());
    }
    Err(Error::NonFinite {
        epoch,
        detail: if d.all_finite() {
            "generator parameters".into()
        } else {
            "discriminator parameters".into()
        },
        trace: trace.iter().map(|t| t.objective).collect(),
    })
}

/// Runs the alternating scheme from `d0` and `g0`. Rows are put in a canonical
/// order first, so permuting `data` leaves the outcome bit-identical.
pub fn train(data: &Matrix, d0: &Mlp, g0: &Generator, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    g0.validate()?;
    if data.rows() == 0 {
        return Err(Error::Empty("training data"));
    }
    check_dim("train data width", g0.dim(), data.cols())?;
    check_dim("train discriminator input", data.cols(), d0.input_dim())?;

    let n = data.rows();
    let center = g0.eta().to_vec();
    let x = centered(data, &center);
    let mut d = d0.clone();
    let mut g = shifted(g0, &center, -1.0);

    let root = Rng::new(cfg.seed);
    let mut order_rng = root.derive(0);
    let mut noise_rng = root.derive(1);
    let mut order: Vec<usize> = (0..n).collect();
    let with_penalty_d = cfg.reg_side == RegSide::Both;
    let use_penalty_g = cfg.objective.lambda_reg > 0.0;

    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut clamp_count = 0;
    let mut eta_sum = vec![0.0; g.dim()];
    let mut scatter_sum: Option<Matrix> = None;
    let first_avg = cfg.epochs - cfg.avg_epochs;

    for epoch in 0..cfg.epochs {
        order_rng.shuffle(&mut order);
        let mut objective_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch) {
            let real = x.select_rows(chunk);
            let mut last = 0.0;
            for _ in 0..cfg.k_steps {
                let (fake, _) = g.sample(&mut noise_rng, chunk.len())?;
                let pair = BatchPair::new(real.clone(), fake)?;
                let eval = discriminator_value_and_grad(&d, &pair, &cfg.objective, with_penalty_d)?;
                d.apply_step(cfg.gamma_d, &eval.grad);
                if !cfg.constraints.is_empty() {
                    d = project_norms(&d, &cfg.constraints);
                }
                clamp_count += eval.value.clamp_count;
                last = eval.value.value;
            }
            let (_, noise) = g.sample(&mut noise_rng, chunk.len())?;
            let real_for_penalty = use_penalty_g.then_some(&real);
            let (_, grad) = gen_loss_and_grad(&g, &d, &noise, real_for_penalty, &cfg.objective)?;
            g.apply_step(-cfg.gamma_g, &grad);
            check_finite(&d, &g, epoch + 1, &trace)?;
            objective_sum += last;
            batches += 1;
        }
        let mut eta = g.eta().to_vec();
        axpy(1.0, &center, &mut eta);
        trace.push(TraceEntry {
            objective: objective_sum / batches as f64,
            l1_w: d.output_l1(),
            eta,
        });
        if !trace.last().is_none_or(|t| t.objective.is_finite()) {
            return Err(Error::NonFinite {
                epoch: epoch + 1,
                detail: "objective".into(),
                trace: trace.iter().map(|t| t.objective).collect(),
            });
        }
        if epoch >= first_avg {
            axpy(1.0, g.eta(), &mut eta_sum);
            if let Some(s) = g.scatter() {
                match scatter_sum.as_mut() {
                    Some(acc) => acc.add_scaled(1.0, &s)?,
                    None => scatter_sum = Some(s),
                }
            }
        }
    }

    let k = cfg.avg_epochs as f64;
    let mut theta_hat: Vec<f64> = eta_sum.iter().map(|v| v / k).collect();
    axpy(1.0, &center, &mut theta_hat);
    let sigma_hat = scatter_sum.map(|s| s.scaled(1.0 / k));
    let final_objective = trace.last().map_or(f64::NAN, |t| t.objective);
    Ok(TrainOutcome {
        estimate: Estimate {
            theta_hat,
            sigma_hat,
            final_objective,
            trace,
            clamp_count,
        },
        discriminator: d,
        generator: shifted(&g, &center, 1.0),
        center,
    })
}

/// Hidden width used for one-hidden-layer discriminators at sample size `n`:
/// 20 units for large samples, 2 for small ones.
pub fn default_hidden_width(n: usize) -> usize {
    // geometric midpoint of the reference sample sizes 5,000 and 50,000
    if n >= 15_811 {
        20
    } else {
        2
    }
}

/// Default hyperparameters for `structure = [p, hidden..., 1]`.
///
/// Known settings exist for one hidden layer of 20 or 2 units. Other structures
/// use the setting of the nearest known width (at least 11 hidden units count as
/// 20, fewer as 2). `p ≥ 200` trains for 250 epochs.
pub fn default_config(structure: &[usize], n: usize, divergence: Divergence) -> TrainConfig {
    let p = structure.first().copied().unwrap_or(1);
    let width = if structure.len() > 2 { structure[1] } else { 0 };
    let wide = width >= 11;
    let (gamma_g, gamma_d, k_steps, avg_epochs, lambda_reg) = match (divergence, wide) {
        (Divergence::Js, true) => (0.02, 0.2, 5, 25, 0.0),
        (Divergence::Tv, true) => (0.0001, 0.3, 2, 1, 0.1),
        (Divergence::Js, false) => (0.01, 0.2, 5, 25, 0.0),
        (Divergence::Tv, false) => (0.01, 0.1, 5, 1, 0.0),
    };
    TrainConfig {
        gamma_d,
        gamma_g,
        k_steps,
        epochs: if p >= 200 { 250 } else { 150 },
        avg_epochs,
        batch: DEFAULT_BATCH.min(n.max(1)),
        objective: ObjectiveKind {
            divergence,
            lambda_reg,
            ..ObjectiveKind::JS
        },
        constraints: NormConstraints::default(),
        init_scheme: InitScheme::Xavier,
        reg_side: RegSide::Generator,
        seed: 0,
    }
}

/// Sigmoid discriminator `p - hidden... - 1` initialized per `cfg`, with the
/// generator location at the coordinatewise median; then [`train`].
pub fn fit_location(data: &Matrix, hidden: &[usize], cfg: &TrainConfig) -> Result<TrainOutcome> {
    let eta0 = coordinatewise_median(data)?;
    let mut rng = Rng::new(cfg.seed).derive(2);
    let d0 = Mlp::discriminator(data.cols(), hidden, Activation::Sigmoid, cfg.init_scheme, &mut rng)?;
    train(data, &d0, &Generator::location(eta0), cfg)
}

/// Refreshes each candidate's discriminator for `refine_epochs` epochs with its
/// generator frozen, then returns the index and estimate of the candidate with
/// the smallest refreshed objective. Ties within `1e-12` keep the earlier one.
pub fn select_estimate(
    candidates: &[TrainOutcome],
    data: &Matrix,
    cfg: &TrainConfig,
    refine_epochs: usize,
) -> Result<(usize, Estimate)> {
    if candidates.is_empty() {
        return Err(Error::Empty("select_estimate candidates"));
    }
    let mut best: Option<(usize, Estimate)> = None;
    for (idx, cand) in candidates.iter().enumerate() {
        let value = refreshed_objective(cand, data, cfg, refine_epochs)?;
        let mut est = cand.estimate.clone();
        est.final_objective = value;
        let better = match &best {
            None => true,
            Some((_, b)) => value < b.final_objective - 1e-12,
        };
        if better {
            best = Some((idx, est));
        }
    }
    Ok(best.expect("non-empty candidates"))
}

fn refreshed_objective(cand: &TrainOutcome, data: &Matrix, cfg: &TrainConfig, refine_epochs: usize) -> Result<f64> {
    check_dim("select_estimate data width", cand.center.len(), data.cols())?;
    let x = centered(data, &cand.center);
    // The generator is frozen at the averaged estimate.
    let mut g = shifted(&cand.generator, &cand.center, -1.0);
    let mut theta = cand.estimate.theta_hat.clone();
    axpy(-1.0, &cand.center, &mut theta);
    g.eta_mut().copy_from_slice(&theta);

    let mut d = cand.discriminator.clone();
    let root = Rng::new(cfg.seed).derive(3);
    let mut order_rng = root.derive(0);
    let mut noise_rng = root.derive(1);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    for _ in 0..refine_epochs {
        order_rng.shuffle(&mut order);
        for chunk in order.chunks(cfg.batch) {
            let (fake, _) = g.sample(&mut noise_rng, chunk.len())?;
            let pair = BatchPair::new(x.select_rows(chunk), fake)?;
            let eval = discriminator_value_and_grad(&d, &pair, &cfg.objective, false)?;
            d.apply_step(cfg.gamma_d, &eval.grad);
            if !cfg.constraints.is_empty() {
                d = project_norms(&d, &cfg.constraints);
            }
        }
    }
    // Every candidate is scored against the same fake draw size and stream.
    let (fake, _) = g.sample(&mut Rng::new(cfg.seed).derive(4), x.rows())?;
    Ok(objective_value(&d, &BatchPair::new(x, fake)?, &cfg.objective)?.value)
}
