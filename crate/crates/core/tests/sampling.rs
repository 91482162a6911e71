//! Contamination sampler checks: degenerate mixing weights, shared assignment
//! patterns, marginal laws and CSV round trips.

use statrs::distribution::{Binomial, Cauchy, ContinuousCDF, DiscreteCDF};

use robust_gan::data::{
    make_structured_sigma, read_observations_csv, sample_contaminated, Contamination, CoreDist, DatasetSpec,
};
use robust_gan::numkit::Matrix;

fn spec(p: usize, n: usize, eps: f64, q: Contamination, seed: u64) -> DatasetSpec {
    DatasetSpec::gaussian(p, n, eps, q, seed)
}

fn column_means(x: &Matrix) -> Vec<f64> {
    (0..x.cols())
        .map(|j| x.column(j).iter().sum::<f64>() / x.rows() as f64)
        .collect()
}

#[test]
fn eps_zero_is_clean_and_eps_one_is_pure_q() {
    let q = Contamination::GaussShift { mu: vec![100.0; 4] };
    let clean = sample_contaminated(&spec(4, 2000, 0.0, q.clone(), 9)).unwrap();
    assert_eq!(clean.contaminated_count(), 0);
    assert!(clean.observations().as_slice().iter().all(|v| v.abs() < 10.0));

    let dirty = sample_contaminated(&spec(4, 2000, 1.0, q, 9)).unwrap();
    assert_eq!(dirty.contaminated_count(), 2000);
    assert!(column_means(dirty.observations())
        .iter()
        .all(|m| (m - 100.0).abs() < 0.1));
}

#[test]
fn contaminated_count_is_binomial() {
    let (n, eps) = (5000, 0.2);
    let binom = Binomial::new(eps, n as u64).unwrap();
    let (lo, hi) = (binom.inverse_cdf(0.0005), binom.inverse_cdf(0.9995));
    for seed in 0..20 {
        let k = sample_contaminated(&spec(2, n, eps, Contamination::None, seed))
            .unwrap()
            .contaminated_count() as u64;
        assert!((lo..=hi).contains(&k), "seed {seed}: {k} outside [{lo}, {hi}]");
    }
}

#[test]
fn assignment_and_clean_rows_are_shared_across_q() {
    let a = sample_contaminated(&spec(3, 500, 0.3, Contamination::GaussShift { mu: vec![5.0; 3] }, 4)).unwrap();
    let b = sample_contaminated(&spec(3, 500, 0.3, Contamination::CauchyIndep { tau: vec![0.0; 3] }, 4)).unwrap();
    assert_eq!(a.contaminated_labels(), b.contaminated_labels());
    for (i, &dirty) in a.contaminated_labels().iter().enumerate() {
        if !dirty {
            assert_eq!(a.observations().row(i), b.observations().row(i));
        }
    }
}

#[test]
fn elliptical_cauchy_marginal_is_standard_cauchy() {
    let s = DatasetSpec {
        core: CoreDist::EllipticalCauchy,
        theta: vec![1.0; 3],
        ..spec(3, 40_000, 0.0, Contamination::None, 21)
    };
    let x = sample_contaminated(&s).unwrap();
    let cauchy = Cauchy::new(1.0, 1.0).unwrap();
    let mut col = x.observations().column(0);
    col.sort_by(f64::total_cmp);
    let n = col.len() as f64;
    let d = col
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cauchy.cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let critical = (-(0.5e-3f64).ln() / 2.0).sqrt() / n.sqrt();
    assert!(d < critical, "D = {d}");
}

#[test]
fn structured_core_covariance() {
    let p = 4;
    let sigma = make_structured_sigma(p, 3);
    let s = DatasetSpec {
        core: CoreDist::GaussCov { sigma: sigma.clone() },
        ..spec(p, 100_000, 0.0, Contamination::None, 2)
    };
    let x = sample_contaminated(&s).unwrap().into_observations();
    let n = x.rows() as f64;
    for i in 0..p {
        for j in 0..p {
            let cov = x.row_iter().map(|r| r[i] * r[j]).sum::<f64>() / n;
            // Five standard errors of a Gaussian sample covariance.
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n).sqrt();
            assert!(
                (cov - sigma[(i, j)]).abs() < 5.0 * se,
                "({i},{j}): {cov} vs {}",
                sigma[(i, j)]
            );
        }
    }
}

#[test]
fn csv_round_trip_drops_labels() {
    let ds = sample_contaminated(&spec(3, 50, 0.2, Contamination::GaussShift { mu: vec![2.0; 3] }, 1)).unwrap();
    let mut buf = b"# provenance comment\n".to_vec();
    ds.write_csv(&mut buf).unwrap();
    let back = read_observations_csv(buf.as_slice()).unwrap();
    assert_eq!(&back, ds.observations());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(sample_contaminated(&spec(0, 10, 0.1, Contamination::None, 0)).is_err());
    assert!(sample_contaminated(&spec(2, 10, 1.5, Contamination::None, 0)).is_err());
    let q = Contamination::GaussShift { mu: vec![0.0; 3] };
    assert!(sample_contaminated(&spec(2, 10, 0.1, q, 0)).is_err());
}
