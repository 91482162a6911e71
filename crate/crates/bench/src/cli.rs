//! Command-line interface. Exit codes: 0 success, 1 failed self-check or run
//! error, 2 usage or configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use robust_gan::baselines::metrics;
use robust_gan::data::{read_observations_csv, sample_contaminated, DatasetSpec};
use robust_gan::numkit::Rng;
use robust_gan::objectives::{argmax_w, landscape_grid, write_landscape_csv};
use robust_gan::{Error, Result};

use crate::config::{CoreTemplate, EstimatorSpec, ExperimentConfig, GeneratorKind, Method, QTemplate, TrainOverrides};
use crate::parse::{parse_mixture, parse_range, sample_mixture};
use crate::runner::{fit_estimator, run_experiment, ExperimentResult};
use crate::selfcheck;
use crate::sweep::{with_axis, worst_case, write_sweep_csv, SweepAxis};
use crate::tables::{emit_tables, provenance_lines, TableFormat};

#[derive(Debug, Parser)]
#[command(
    name = "robust-gan",
    version,
    about = "Robust location and scatter estimation by adversarial training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a contaminated dataset to CSV.
    Gen(GenArgs),
    /// Fit one estimator; writes estimate.json and trace.csv.
    Train(TrainArgs),
    /// Run an experiment config and emit its tables.
    Bench(BenchArgs),
    /// Tabulate the 1-D TV landscape F(eta, w) for a normal mixture.
    Landscape(LandscapeArgs),
    /// Run a config along one axis and report the worst case over the others.
    Sweep(SweepArgs),
    /// Gradient, moment-matching and median-oracle checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CoreArg {
    Gauss,
    GaussStructured,
    Cauchy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum QArg {
    None,
    GaussShift,
    GaussScaled,
    GaussStructured,
    CauchyIndep,
    CauchyElliptical,
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Every coordinate of the true location.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = CoreArg::Gauss)]
    core: CoreArg,
    #[arg(long, value_enum, default_value_t = QArg::GaussShift)]
    q: QArg,
    /// Contamination location t·1_p.
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    /// Scatter multiplier for gauss-scaled and cauchy-elliptical contamination.
    #[arg(long, default_value_t = 1.0)]
    q_scale: f64,
    /// Seed of the structured covariance recipe.
    #[arg(long, default_value_t = 0)]
    sigma_seed: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DataArgs {
    fn core(&self) -> CoreTemplate {
        match self.core {
            CoreArg::Gauss => CoreTemplate::GaussIdentity,
            CoreArg::GaussStructured => CoreTemplate::GaussStructured {
                sigma_seed: self.sigma_seed,
            },
            CoreArg::Cauchy => CoreTemplate::EllipticalCauchy,
        }
    }

    fn spec(&self) -> DatasetSpec {
        let q = match self.q {
            QArg::None => QTemplate::None,
            QArg::GaussShift => QTemplate::GaussShift,
            QArg::GaussScaled => QTemplate::GaussScaled { scale: self.q_scale },
            QArg::GaussStructured => QTemplate::GaussStructured {
                sigma_seed: self.sigma_seed,
            },
            QArg::CauchyIndep => QTemplate::CauchyIndep,
            QArg::CauchyElliptical => QTemplate::CauchyElliptical { scale: self.q_scale },
        };
        DatasetSpec {
            p: self.p,
            n: self.n,
            eps: self.eps,
            theta: vec![self.theta; self.p],
            core: self.core().resolve(self.p),
            q: q.resolve(self.p, self.t),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Output path; `-` writes to stdout.
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Jsgan,
    Tvgan,
    CwMedian,
    Mean,
    TvLearn1d,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeneratorArg {
    Location,
    Affine,
    Elliptical,
    EllipticalScatter,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Observations CSV (as written by `gen`); without it a dataset is sampled from the data flags.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    gen: DataArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Jsgan)]
    method: MethodArg,
    /// Hidden widths, comma-separated; `none` for no hidden layer. Default picks by n.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Location)]
    generator: GeneratorArg,
    #[arg(long)]
    gamma_d: Option<f64>,
    #[arg(long)]
    gamma_g: Option<f64>,
    #[arg(long)]
    k_steps: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    avg_epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lambda_reg: Option<f64>,
    #[arg(long, default_value_t = 0)]
    train_seed: u64,
    #[arg(long, default_value = "train-out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TableArgs {
    /// Worker threads; cells are independent.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![FormatArg::Csv, FormatArg::Markdown])]
    format: Vec<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Markdown,
}

impl std::fmt::Display for FormatArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FormatArg::Csv => "csv",
            FormatArg::Markdown => "markdown",
        })
    }
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    tables: TableArgs,
}

#[derive(Debug, Args)]
struct LandscapeArgs {
    /// Normal mixture, e.g. `0.8:N(1,1),0.2:N(10,1)`.
    #[arg(long)]
    mix: String,
    /// Location grid `start:stop:step` or a comma list.
    #[arg(long, default_value = "0:6:0.1", allow_hyphen_values = true)]
    eta: String,
    #[arg(long, default_value = "-10:10:0.2", allow_hyphen_values = true)]
    w: String,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    fake_draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "landscape.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Eps,
    P,
    N,
    T,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Replacement values for the axis; defaults to the config's own.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    #[command(flatten)]
    tables: TableArgs,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidConfig(_) | Error::Parse(_) | Error::Json(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train_cmd(a),
        Command::Bench(a) => bench(a),
        Command::Landscape(a) => landscape(a),
        Command::Sweep(a) => sweep(a),
        Command::Selfcheck(a) => Ok(selfcheck_cmd(a)),
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.as_os_str() == "-" {
        io::stdout().write_all(bytes)?;
    } else {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
    }
    Ok(())
}

fn comment_block<T: Serialize>(config: &T, marker: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for line in provenance_lines(config)? {
        writeln!(buf, "{marker} {line}")?;
    }
    Ok(buf)
}

fn gen(a: GenArgs) -> Result<i32> {
    let spec = a.data.spec();
    let data = sample_contaminated(&spec)?;
    let mut buf = comment_block(&spec, "#")?;
    data.write_csv(&mut buf)?;
    write_output(&a.out, &buf)?;
    Ok(0)
}

fn parse_hidden(s: &str) -> Result<Vec<usize>> {
    if s.eq_ignore_ascii_case("none") || s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|w| {
            w.trim()
                .parse::<usize>()
                .ok()
                .filter(|&w| w > 0)
                .ok_or_else(|| Error::Parse(format!("hidden width `{w}` must be a positive integer")))
        })
        .collect()
}

#[derive(Serialize)]
struct TrainRecord<'a> {
    theta_hat: &'a [f64],
    sigma_hat: Option<&'a robust_gan::numkit::Matrix>,
    final_objective: f64,
    clamp_count: usize,
    /// `ℓ2` and operator-norm errors, when the data were sampled here.
    l2_error: Option<f64>,
    op_error: Option<f64>,
    config: &'a serde_json::Value,
}

fn train_cmd(a: TrainArgs) -> Result<i32> {
    let method = match a.method {
        MethodArg::Jsgan => Method::Jsgan,
        MethodArg::Tvgan => Method::Tvgan,
        MethodArg::CwMedian => Method::CwMedian,
        MethodArg::Mean => Method::Mean,
        MethodArg::TvLearn1d => Method::TvLearn1d,
    };
    let est = EstimatorSpec {
        method,
        label: None,
        hidden: a.hidden.as_deref().map(parse_hidden).transpose()?,
        generator: match a.generator {
            GeneratorArg::Location => GeneratorKind::Location,
            GeneratorArg::Affine => GeneratorKind::Affine,
            GeneratorArg::Elliptical => GeneratorKind::Elliptical,
            GeneratorArg::EllipticalScatter => GeneratorKind::EllipticalScatter,
        },
        overrides: TrainOverrides {
            gamma_d: a.gamma_d,
            gamma_g: a.gamma_g,
            k_steps: a.k_steps,
            epochs: a.epochs,
            avg_epochs: a.avg_epochs,
            batch: a.batch,
            lambda_reg: a.lambda_reg,
            ..TrainOverrides::default()
        },
    };
    let (data, spec) = match &a.data {
        Some(path) => (read_observations_csv(BufReader::new(fs::File::open(path)?))?, None),
        None => {
            let spec = a.gen.spec();
            (sample_contaminated(&spec)?.into_observations(), Some(spec))
        }
    };
    let estimate = fit_estimator(&est, &data, a.train_seed)?;
    let report = match &spec {
        Some(s) => Some(metrics(
            &estimate.theta_hat,
            estimate.sigma_hat.as_ref(),
            &s.theta,
            a.gen.core().scatter(s.p).as_ref(),
        )?),
        None => None,
    };
    let config = serde_json::json!({
        "estimator": est,
        "train": method.is_adversarial().then(|| est.train_config(data.cols(), data.rows(), a.train_seed)),
        "data": match (&a.data, &spec) {
            (Some(path), _) => serde_json::json!({ "path": path }),
            (None, s) => serde_json::to_value(s)?,
        },
    });
    let record = TrainRecord {
        theta_hat: &estimate.theta_hat,
        sigma_hat: estimate.sigma_hat.as_ref(),
        final_objective: estimate.final_objective,
        clamp_count: estimate.clamp_count,
        l2_error: report.map(|r| r.l2_error),
        op_error: report.and_then(|r| r.op_error),
        config: &config,
    };
    let mut json = serde_json::to_vec_pretty(&record)?;
    json.push(b'\n');
    write_output(&a.out_dir.join("estimate.json"), &json)?;
    let mut trace = comment_block(&config, "#")?;
    estimate.write_trace_csv(&mut trace)?;
    write_output(&a.out_dir.join("trace.csv"), &trace)?;
    if let Some(r) = report {
        println!("l2_error {}", r.l2_error);
    }
    println!("wrote {}", a.out_dir.display());
    Ok(0)
}

fn load_config(path: &Path, t: &TableArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_json(&fs::read_to_string(path)?)?;
    if let Some(dir) = &t.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(r) = t.repetitions {
        cfg.repetitions = r;
    }
    if let Some(s) = t.base_seed {
        cfg.base_seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn formats(t: &TableArgs) -> Vec<TableFormat> {
    t.format
        .iter()
        .map(|f| match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Markdown => TableFormat::Markdown,
        })
        .collect()
}

fn report_failures(res: &ExperimentResult) {
    for c in res.cells.iter().filter(|c| c.failure.is_some()) {
        eprintln!(
            "warning: cell eps={} p={} n={} t={} q={} method={} failed: {}",
            c.eps,
            c.p,
            c.n,
            c.t,
            c.q,
            c.method,
            c.failure.as_deref().unwrap_or_default()
        );
    }
}

fn bench(a: BenchArgs) -> Result<i32> {
    let cfg = load_config(&a.config, &a.tables)?;
    let res = run_experiment(&cfg, a.tables.jobs)?;
    report_failures(&res);
    for path in emit_tables(&res, &cfg.output_dir, &formats(&a.tables))? {
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn sweep(a: SweepArgs) -> Result<i32> {
    let mut cfg = load_config(&a.config, &a.tables)?;
    let axis = match a.axis {
        AxisArg::Eps => SweepAxis::Eps,
        AxisArg::P => SweepAxis::P,
        AxisArg::N => SweepAxis::N,
        AxisArg::T => SweepAxis::T,
    };
    if let Some(v) = &a.values {
        cfg = with_axis(&cfg, axis, &parse_range(v)?)?;
    }
    let res = run_experiment(&cfg, a.tables.jobs)?;
    report_failures(&res);
    for path in emit_tables(&res, &cfg.output_dir, &formats(&a.tables))? {
        println!("wrote {}", path.display());
    }
    let points = worst_case(&res, axis);
    let mut buf = Vec::new();
    write_sweep_csv(axis, &points, &provenance_lines(&cfg)?, &mut buf)?;
    let path = cfg.output_dir.join(format!("{}.sweep-{}.csv", cfg.name, axis.name()));
    write_output(&path, &buf)?;
    println!("wrote {}", path.display());
    Ok(0)
}

#[derive(Serialize)]
struct LandscapeConfig<'a> {
    mix: &'a str,
    eta: &'a [f64],
    w: &'a [f64],
    n: usize,
    fake_draws: usize,
    seed: u64,
}

fn landscape(a: LandscapeArgs) -> Result<i32> {
    let mix = parse_mixture(&a.mix)?;
    let eta = parse_range(&a.eta)?;
    let w = parse_range(&a.w)?;
    if a.n == 0 || a.fake_draws == 0 {
        return Err(Error::InvalidConfig("n and fake-draws must be positive".into()));
    }
    let root = Rng::new(a.seed);
    let data = sample_mixture(&mix, a.n, &mut root.derive(0));
    let grid = landscape_grid(&data, &eta, &w, a.fake_draws, root.derive(1).seed())?;
    let cfg = LandscapeConfig {
        mix: &a.mix,
        eta: &eta,
        w: &w,
        n: a.n,
        fake_draws: a.fake_draws,
        seed: a.seed,
    };
    let mut buf = comment_block(&cfg, "#")?;
    write_landscape_csv(&mut buf, &eta, &w, &grid)?;
    write_output(&a.out, &buf)?;
    println!("eta,argmax_w");
    for (e, w) in eta.iter().zip(argmax_w(&w, &grid)) {
        println!("{e},{w}");
    }
    Ok(0)
}

fn selfcheck_cmd(a: SelfcheckArgs) -> i32 {
    let reports = selfcheck::run_all(a.seed);
    for r in &reports {
        println!("{r}");
    }
    if reports.iter().all(|r| r.passed) {
        0
    } else {
        1
    }
}
