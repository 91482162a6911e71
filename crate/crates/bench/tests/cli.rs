//! Drives the `robust-gan` binary and the experiment runner end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use robust_gan_bench::config::ExperimentConfig;
use robust_gan_bench::runner::{mean_sd, run_experiment, ExperimentResult};
use robust_gan_bench::tables::{write_csv, write_markdown};

fn robust_gan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-gan"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> ExperimentConfig {
    let json = serde_json::json!({
        "name": "tiny",
        "dataset": {
            "eps": [0.1, 0.2], "p": [2], "n": [200], "t": [3.0],
            "q": [{ "kind": "gauss_shift" }, { "kind": "cauchy_indep" }],
        },
        "estimators": [
            { "method": "jsgan", "hidden": [3], "overrides": { "epochs": 6, "avg_epochs": 2, "batch": 50 } },
            { "method": "cw_median" },
            { "method": "mean" },
        ],
        "repetitions": 3,
        "base_seed": 11,
        "output_dir": dir,
    });
    ExperimentConfig::from_json(&json.to_string()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(robust_gan(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(robust_gan(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(robust_gan(&["gen", "--eps", "lots"], dir.path()).status.code(), Some(2));
    assert_eq!(
        robust_gan(&["landscape", "--mix", "0.5:N(0,1)"], dir.path())
            .status
            .code(),
        Some(2)
    );

    fs::write(dir.path().join("bad.json"), r#"{ "name": "x", "oops": 1 }"#).unwrap();
    assert_eq!(
        robust_gan(&["bench", "--config", "bad.json"], dir.path()).status.code(),
        Some(2)
    );
    assert_eq!(
        robust_gan(&["bench", "--config", "missing.json"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn gen_then_train_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = robust_gan(
        &[
            "gen", "--p", "3", "--n", "300", "--eps", "0.1", "--t", "4", "--out", "x.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("x.csv")).unwrap();
    assert!(csv.starts_with("# config: "));
    assert_eq!(data_lines(&csv).len(), 301);

    let out = robust_gan(
        &[
            "train",
            "--data",
            "x.csv",
            "--hidden",
            "4",
            "--epochs",
            "5",
            "--avg-epochs",
            "2",
            "--batch",
            "100",
            "--out-dir",
            "fit",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let est: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fit/estimate.json")).unwrap()).unwrap();
    assert_eq!(est["theta_hat"].as_array().unwrap().len(), 3);
    assert_eq!(est["config"]["train"]["epochs"], 5);
    let trace = fs::read_to_string(dir.path().join("fit/trace.csv")).unwrap();
    let rows = data_lines(&trace);
    assert_eq!(rows[0], "epoch,objective,l1_w,eta_1,eta_2,eta_3");
    assert_eq!(rows.len(), 6);
}

#[test]
fn bench_tables_carry_headers_and_consistent_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    fs::write(dir.path().join("tiny.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = robust_gan(&["bench", "--config", "tiny.json", "--jobs", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for name in ["tiny.csv", "tiny.md", "tiny.timing.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        let first: Vec<&str> = text.lines().take(2).collect();
        assert!(first[0].contains("config: {"), "{name}: {}", first[0]);
        assert!(first[1].contains("build: robust-gan-bench"), "{name}: {}", first[1]);
    }

    let csv = fs::read_to_string(dir.path().join("tiny.csv")).unwrap();
    let rows = data_lines(&csv);
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    assert_eq!(rows.len(), 1 + 4 * 3);
    for row in &rows[1..] {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[col("status")], "ok");
        let errors: Vec<f64> = f[col("errors")].split(';').map(|v| v.parse().unwrap()).collect();
        assert_eq!(errors.len(), 3);
        let (mean, sd) = mean_sd(&errors);
        let stored_mean: f64 = f[col("mean")].parse().unwrap();
        let stored_sd: f64 = f[col("sd")].parse().unwrap();
        assert!((mean - stored_mean).abs() <= 1e-12, "{row}");
        assert!((sd.unwrap() - stored_sd).abs() <= 1e-12, "{row}");
    }
}

#[test]
fn records_do_not_depend_on_scheduling_or_estimator_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = run_experiment(&cfg, 1).unwrap();
    let b = run_experiment(&cfg, 3).unwrap();
    let strip = |r: &ExperimentResult| {
        r.cells
            .iter()
            .map(|c| {
                (
                    c.eps.to_bits(),
                    c.q.clone(),
                    c.method.clone(),
                    c.errors.clone(),
                    c.mean_l1_w,
                )
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));

    let mut reversed = cfg.clone();
    reversed.estimators.reverse();
    let c = run_experiment(&reversed, 2).unwrap();
    let mut sa = strip(&a);
    let mut sc = strip(&c);
    let key = |x: &(u64, String, String, Vec<f64>, Option<f64>)| (x.0, x.1.clone(), x.2.clone());
    sa.sort_by_key(key);
    sc.sort_by_key(key);
    assert_eq!(sa, sc);
}

#[test]
fn empty_result_writes_only_headers() {
    let dir = tempfile::tempdir().unwrap();
    let res = ExperimentResult {
        config: small_config(dir.path()),
        cells: Vec::new(),
    };
    let mut csv = Vec::new();
    write_csv(&res, &mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(
        data_lines(&csv),
        vec!["eps,p,n,t,q,method,status,mean,sd,cell,mean_l1_w,op_errors,errors"]
    );
    let mut md = Vec::new();
    write_markdown(&res, &mut md).unwrap();
    let md = String::from_utf8(md).unwrap();
    assert_eq!(md.lines().filter(|l| l.starts_with("| ")).count(), 1);
}

#[test]
fn landscape_and_sweep_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = robust_gan(
        &[
            "landscape",
            "--mix",
            "0.8:N(1,1),0.2:N(10,1)",
            "--eta",
            "1,5",
            "--w",
            "-10:10:0.5",
            "--n",
            "3000",
            "--fake-draws",
            "3000",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        stdout.lines().collect::<Vec<_>>(),
        vec!["eta,argmax_w", "1,10", "5,-10"]
    );
    assert!(dir.path().join("landscape.csv").exists());

    let cfg = small_config(dir.path());
    fs::write(dir.path().join("tiny.json"), serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = robust_gan(
        &[
            "sweep",
            "--config",
            "tiny.json",
            "--axis",
            "eps",
            "--values",
            "0.05,0.15",
            "--repetitions",
            "2",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = fs::read_to_string(dir.path().join("tiny.sweep-eps.csv")).unwrap();
    let rows = data_lines(&sweep);
    assert_eq!(rows.len(), 1 + 2 * 3, "{sweep}");
}

#[test]
fn selfcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = robust_gan(&["selfcheck", "--seed", "3"], dir.path());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS ")).count(), 3);
}
