//! Classical reference estimators and error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::numkit::{norm2, operator_norm, Matrix};

/// Per-column sample median; even `n` averages the two middle order statistics.
pub fn coordinatewise_median(data: &Matrix) -> Result<Vec<f64>> {
    if data.rows() == 0 {
        return Err(Error::Empty("coordinatewise_median data"));
    }
    Ok((0..data.cols()).map(|j| median(&mut data.column(j))).collect())
}

/// Sample median of `v`, reordering it in place.
pub fn median(v: &mut [f64]) -> f64 {
    let n = v.len();
    assert!(n > 0, "median of an empty slice");
    v.sort_by(f64::total_cmp);
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn sample_mean(data: &Matrix) -> Result<Vec<f64>> {
    if data.rows() == 0 {
        return Err(Error::Empty("sample_mean data"));
    }
    let mut out = vec![0.0; data.cols()];
    for row in data.row_iter() {
        for (o, x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
    let n = data.rows() as f64;
    out.iter_mut().for_each(|v| *v /= n);
    Ok(out)
}

/// Sorted data points plus the midpoints between consecutive distinct points.
pub fn default_depth_grid(data: &[f64]) -> Vec<f64> {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut grid = Vec::with_capacity(2 * sorted.len());
    for (k, &x) in sorted.iter().enumerate() {
        if k > 0 {
            grid.push(0.5 * (sorted[k - 1] + x));
        }
        grid.push(x);
    }
    grid
}

/// Halfspace depth of `eta` in 1-D: `min(#{x ≥ η}, #{x ≤ η})`, as a count.
fn depth_count(sorted: &[f64], eta: f64) -> usize {
    let below_or_at = sorted.partition_point(|&x| x <= eta);
    let below = sorted.partition_point(|&x| x < eta);
    below_or_at.min(sorted.len() - below)
}

/// 1-D TV-Learning estimate in its depth form: the grid point maximizing
/// `min(fraction ≥ η, fraction ≤ η)`. Ties resolve to the midpoint of the
/// maximizing stretch of the grid. `None` uses [`default_depth_grid`].
pub fn tv_learning_1d(data: &[f64], eta_grid: Option<&[f64]>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("tv_learning_1d data"));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("tv_learning_1d data must be finite".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let default_grid;
    let grid = match eta_grid {
        Some(g) if !g.is_empty() => g,
        Some(_) => return Err(Error::Empty("tv_learning_1d grid")),
        None => {
            default_grid = default_depth_grid(data);
            &default_grid
        }
    };
    let best = grid.iter().map(|&e| depth_count(&sorted, e)).max().unwrap_or(0);
    let (lo, hi) = grid
        .iter()
        .filter(|&&e| depth_count(&sorted, e) == best)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub l2_error: f64,
    /// Operator-norm scatter error, when both scatter matrices are known.
    pub op_error: Option<f64>,
}

pub fn metrics(
    theta_hat: &[f64],
    sigma_hat: Option<&Matrix>,
    truth_theta: &[f64],
    truth_sigma: Option<&Matrix>,
) -> Result<MetricReport> {
    check_dim("metrics location", truth_theta.len(), theta_hat.len())?;
    let diff: Vec<f64> = theta_hat.iter().zip(truth_theta).map(|(a, b)| a - b).collect();
    let op_error = match (sigma_hat, truth_sigma) {
        (Some(s), Some(t)) => Some(operator_norm(&s.sub(t)?)?),
        _ => None,
    };
    Ok(MetricReport {
        l2_error: norm2(&diff),
        op_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_rules() {
        let single = Matrix::from_rows(&[vec![4.0, -1.0]]).unwrap();
        assert_eq!(coordinatewise_median(&single).unwrap(), vec![4.0, -1.0]);
        let col = Matrix::column_vector(&[1.0, 2.0, 3.0, 100.0]);
        assert_eq!(coordinatewise_median(&col).unwrap(), vec![2.5]);
        assert!(coordinatewise_median(&Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn means() {
        let m = Matrix::from_rows(&[vec![0.0, 3.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(sample_mean(&m).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn depth_examples() {
        assert_eq!(tv_learning_1d(&[-1.0, 0.0, 1.0], None).unwrap(), 0.0);
        assert_eq!(tv_learning_1d(&[1.0, 2.0, 3.0, 4.0], None).unwrap(), 2.5);
        assert_eq!(tv_learning_1d(&[3.0, 4.0, 1.0, 2.0], None).unwrap(), 2.5);
        assert!(tv_learning_1d(&[], None).is_err());
    }

    #[test]
    fn metric_examples() {
        let r = metrics(&[3.0, 4.0], None, &[0.0, 0.0], None).unwrap();
        assert_eq!(r.l2_error, 5.0);
        assert_eq!(r.op_error, None);
        let two = Matrix::identity(10).scaled(2.0);
        let r = metrics(&[0.0; 10], Some(&two), &[0.0; 10], Some(&Matrix::identity(10))).unwrap();
        assert_eq!(r.l2_error, 0.0);
        assert!((r.op_error.unwrap() - 1.0).abs() < 1e-12);
    }
}
