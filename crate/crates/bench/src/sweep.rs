//! One-axis sweeps: override a single dataset axis, run the grid, and reduce
//! every estimator to its worst case over the remaining axes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use robust_gan::{Error, Result};

use crate::config::ExperimentConfig;
use crate::runner::ExperimentResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Eps,
    P,
    N,
    T,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Eps => "eps",
            SweepAxis::P => "p",
            SweepAxis::N => "n",
            SweepAxis::T => "t",
        }
    }
}

/// Replaces one axis of `cfg` with `values`. Integer axes reject fractional values.
pub fn with_axis(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<ExperimentConfig> {
    let mut out = cfg.clone();
    let as_count = |v: &f64| -> Result<usize> {
        if *v >= 1.0 && v.fract() == 0.0 {
            Ok(*v as usize)
        } else {
            Err(Error::InvalidConfig(format!(
                "axis {} needs positive integers, got {v}",
                axis.name()
            )))
        }
    };
    match axis {
        SweepAxis::Eps => out.dataset.eps = values.to_vec(),
        SweepAxis::T => out.dataset.t = values.to_vec(),
        SweepAxis::P => out.dataset.p = values.iter().map(as_count).collect::<Result<_>>()?,
        SweepAxis::N => out.dataset.n = values.iter().map(as_count).collect::<Result<_>>()?,
    }
    out.validate()?;
    Ok(out)
}

/// Largest mean error of one estimator at one axis value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub method: String,
    pub worst_mean: f64,
    /// Contamination label of the worst cell.
    pub worst_q: String,
    pub worst_t: f64,
}

/// Worst case over every other axis, ordered by axis value then estimator order.
/// Failed cells are skipped; a point with no successful cell is omitted.
pub fn worst_case(res: &ExperimentResult, axis: SweepAxis) -> Vec<SweepPoint> {
    let value_of = |c: &crate::runner::CellRecord| match axis {
        SweepAxis::Eps => c.eps,
        SweepAxis::P => c.p as f64,
        SweepAxis::N => c.n as f64,
        SweepAxis::T => c.t,
    };
    let axis_values: Vec<f64> = match axis {
        SweepAxis::Eps => res.config.dataset.eps.clone(),
        SweepAxis::T => res.config.dataset.t.clone(),
        SweepAxis::P => res.config.dataset.p.iter().map(|&v| v as f64).collect(),
        SweepAxis::N => res.config.dataset.n.iter().map(|&v| v as f64).collect(),
    };
    let mut out = Vec::new();
    for &v in &axis_values {
        for est in &res.config.estimators {
            let label = est.label();
            let worst = res
                .cells
                .iter()
                .filter(|c| c.failure.is_none() && c.method == label && value_of(c) == v)
                .max_by(|a, b| a.mean.total_cmp(&b.mean));
            if let Some(c) = worst {
                out.push(SweepPoint {
                    axis_value: v,
                    method: label,
                    worst_mean: c.mean,
                    worst_q: c.q.clone(),
                    worst_t: c.t,
                });
            }
        }
    }
    out
}

pub fn write_sweep_csv<W: Write>(axis: SweepAxis, points: &[SweepPoint], header: &[String], mut out: W) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "{},method,worst_mean,worst_q,worst_t", axis.name())?;
    for pt in points {
        writeln!(
            out,
            "{},{},{},{},{}",
            pt.axis_value, pt.method, pt.worst_mean, pt.worst_q, pt.worst_t
        )?;
    }
    Ok(())
}

/// Pearson correlation; `None` when either side is constant or lengths differ.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}
