//! Runs every (cell, estimator, repetition) of an experiment and aggregates the errors.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use robust_gan::baselines::{coordinatewise_median, metrics, sample_mean, tv_learning_1d};
use robust_gan::data::sample_contaminated;
use robust_gan::generators::{Generator, NoiseLaw};
use robust_gan::nets::{Activation, Mlp};
use robust_gan::numkit::{Matrix, Rng};
use robust_gan::trainer::{fit_location, train, Estimate};
use robust_gan::{Error, Result};

use crate::config::{CellAxes, EstimatorSpec, ExperimentConfig, GeneratorKind, Method};

/// First 8 bytes (little-endian) of the SHA-256 of the `\x1f`-joined parts.
pub fn stable_seed(parts: &[String]) -> u64 {
    let digest = Sha256::digest(parts.join("\u{1f}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Seed of the dataset for one cell and repetition; shared by every estimator.
pub fn data_seed(cfg: &ExperimentConfig, cell: &CellAxes, rep: usize) -> u64 {
    stable_seed(&[
        cfg.base_seed.to_string(),
        format!("eps={:?}", cell.eps),
        format!("p={}", cell.p),
        format!("n={}", cell.n),
        format!("t={:?}", cell.t),
        format!("q={}", cfg.dataset.q[cell.q_index].label()),
        format!("rep={rep}"),
    ])
}

/// Seed of one estimator's training run on one dataset.
pub fn train_seed(data_seed: u64, label: &str) -> u64 {
    stable_seed(&[data_seed.to_string(), format!("method={label}")])
}

/// One estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub l2_error: f64,
    pub op_error: Option<f64>,
    pub l1_w: Option<f64>,
    pub runtime_secs: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub eps: f64,
    pub p: usize,
    pub n: usize,
    pub t: f64,
    pub q: String,
    pub method: String,
    /// Per-repetition `ℓ2` errors; empty for a failed cell.
    pub errors: Vec<f64>,
    pub op_errors: Option<Vec<f64>>,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); `None` for one repetition.
    pub sd: Option<f64>,
    pub mean_l1_w: Option<f64>,
    pub runtime_secs: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub cells: Vec<CellRecord>,
}

pub fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

/// Fits one estimator to `data`; `seed` drives every adversarial run.
pub fn fit_estimator(est: &EstimatorSpec, data: &Matrix, seed: u64) -> Result<Estimate> {
    let (n, p) = (data.rows(), data.cols());
    Ok(match est.method {
        Method::CwMedian => Estimate::point(coordinatewise_median(data)?),
        Method::Mean => Estimate::point(sample_mean(data)?),
        Method::TvLearn1d => {
            if p != 1 {
                return Err(Error::InvalidConfig(format!("tv_learn_1d needs p = 1, got {p}")));
            }
            Estimate::point(vec![tv_learning_1d(data.as_slice(), None)?])
        }
        Method::Jsgan | Method::Tvgan => {
            let tcfg = est.train_config(p, n, seed);
            let hidden = est.hidden_for(n);
            match est.generator {
                GeneratorKind::Location => fit_location(data, &hidden, &tcfg)?.estimate,
                kind => {
                    let eta0 = coordinatewise_median(data)?;
                    let mut rng = Rng::new(tcfg.seed).derive(2);
                    let d0 = Mlp::discriminator(p, &hidden, Activation::Sigmoid, tcfg.init_scheme, &mut rng)?;
                    let g0 = match kind {
                        GeneratorKind::Affine => Generator::affine(eta0),
                        GeneratorKind::Elliptical => Generator::elliptical(eta0, false, NoiseLaw::Gaussian, &mut rng)?,
                        _ => Generator::elliptical(eta0, true, NoiseLaw::Gaussian, &mut rng)?,
                    };
                    train(data, &d0, &g0, &tcfg)?.estimate
                }
            }
        }
    })
}

/// Samples the dataset of one cell and repetition, then fits one estimator.
pub fn run_one(cfg: &ExperimentConfig, cell: &CellAxes, est: &EstimatorSpec, rep: usize) -> Result<RunOutput> {
    let started = Instant::now();
    let dseed = data_seed(cfg, cell, rep);
    let spec = cfg.dataset_spec(cell, dseed);
    let data = sample_contaminated(&spec)?.into_observations();
    let estimate = fit_estimator(est, &data, train_seed(dseed, &est.label()))?;
    let truth_sigma = cfg.dataset.core.scatter(cell.p);
    let report = metrics(
        &estimate.theta_hat,
        estimate.sigma_hat.as_ref(),
        &spec.theta,
        truth_sigma.as_ref(),
    )?;
    Ok(RunOutput {
        l2_error: report.l2_error,
        op_error: report.op_error,
        l1_w: estimate.trace.last().map(|t| t.l1_w),
        runtime_secs: started.elapsed().as_secs_f64(),
        estimate,
    })
}

/// Runs the whole grid on `jobs` worker threads. Records come back in config
/// order (cells, then estimators) regardless of completion order.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let cells = cfg.cells();
    let tasks: Vec<(usize, usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.estimators.len()).flat_map(move |e| (0..cfg.repetitions).map(move |r| (c, e, r))))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outputs: Vec<Result<RunOutput>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, e, r)| run_one(cfg, &cells[c], &cfg.estimators[e], r))
            .collect()
    });

    let mut records = Vec::with_capacity(cells.len() * cfg.estimators.len());
    let mut outputs = outputs.into_iter();
    for cell in &cells {
        for est in &cfg.estimators {
            let runs: Vec<Result<RunOutput>> = outputs.by_ref().take(cfg.repetitions).collect();
            records.push(aggregate(cfg, cell, est, runs));
        }
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        cells: records,
    })
}

fn aggregate(cfg: &ExperimentConfig, cell: &CellAxes, est: &EstimatorSpec, runs: Vec<Result<RunOutput>>) -> CellRecord {
    let mut record = CellRecord {
        eps: cell.eps,
        p: cell.p,
        n: cell.n,
        t: cell.t,
        q: cfg.dataset.q[cell.q_index].label(),
        method: est.label(),
        errors: Vec::new(),
        op_errors: None,
        mean: f64::NAN,
        sd: None,
        mean_l1_w: None,
        runtime_secs: 0.0,
        failure: None,
    };
    let mut ok = Vec::with_capacity(runs.len());
    for (rep, run) in runs.into_iter().enumerate() {
        match run {
            Ok(out) => ok.push(out),
            Err(e) => {
                record.failure = Some(format!("repetition {rep}: {e}"));
                return record;
            }
        }
    }
    record.errors = ok.iter().map(|o| o.l2_error).collect();
    (record.mean, record.sd) = mean_sd(&record.errors);
    record.op_errors = ok.iter().map(|o| o.op_error).collect();
    let l1: Option<Vec<f64>> = ok.iter().map(|o| o.l1_w).collect();
    record.mean_l1_w = l1.map(|v| mean_sd(&v).0);
    record.runtime_secs = ok.iter().map(|o| o.runtime_secs).sum();
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = stable_seed(&["1".into(), "x".into()]);
        assert_eq!(a, stable_seed(&["1".into(), "x".into()]));
        assert_ne!(a, stable_seed(&["1x".into()]));
        assert_ne!(train_seed(5, "jsgan"), train_seed(5, "tvgan"));
    }

    #[test]
    fn sample_sd_uses_n_minus_one() {
        let (m, sd) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[7.0]).1, None);
    }
}
