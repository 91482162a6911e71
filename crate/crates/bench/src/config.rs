//! JSON experiment schema.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use robust_gan::data::{make_structured_sigma, Contamination, CoreDist, DatasetSpec};
use robust_gan::nets::InitScheme;
use robust_gan::numkit::Matrix;
use robust_gan::objectives::{Divergence, RegSide, RegStat};
use robust_gan::trainer::{default_config, default_hidden_width, TrainConfig};
use robust_gan::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Stem of every emitted file.
    pub name: String,
    pub dataset: DatasetTemplate,
    pub estimators: Vec<EstimatorSpec>,
    pub repetitions: usize,
    pub base_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("bench-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetTemplate {
    #[serde(default)]
    pub core: CoreTemplate,
    /// Every coordinate of the true location.
    #[serde(default)]
    pub theta_value: f64,
    pub eps: Vec<f64>,
    pub p: Vec<usize>,
    pub n: Vec<usize>,
    /// Shift `t` of the contamination location `t·1_p`.
    #[serde(default = "default_t")]
    pub t: Vec<f64>,
    pub q: Vec<QTemplate>,
}

fn default_t() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoreTemplate {
    #[default]
    GaussIdentity,
    /// `N(θ, Σ)` with the sparse-precision recipe for `Σ`.
    GaussStructured {
        sigma_seed: u64,
    },
    EllipticalCauchy,
}

/// Contamination law with location `t·1_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QTemplate {
    None,
    GaussShift,
    /// `N(t·1_p, scale·I_p)`.
    GaussScaled {
        scale: f64,
    },
    /// `N(t·1_p, Σ)` with the structured `Σ`.
    GaussStructured {
        sigma_seed: u64,
    },
    CauchyIndep,
    /// Multivariate Cauchy with scatter `scale·I_p`.
    CauchyElliptical {
        scale: f64,
    },
}

impl QTemplate {
    pub fn label(&self) -> String {
        match self {
            QTemplate::None => "none".into(),
            QTemplate::GaussShift => "gauss_shift".into(),
            QTemplate::GaussScaled { scale } => format!("gauss_scaled_{scale}"),
            QTemplate::GaussStructured { sigma_seed } => format!("gauss_structured_{sigma_seed}"),
            QTemplate::CauchyIndep => "cauchy_indep".into(),
            QTemplate::CauchyElliptical { scale } => format!("cauchy_elliptical_{scale}"),
        }
    }

    pub fn resolve(&self, p: usize, t: f64) -> Contamination {
        let mu = vec![t; p];
        match *self {
            QTemplate::None => Contamination::None,
            QTemplate::GaussShift => Contamination::GaussShift { mu },
            QTemplate::GaussScaled { scale } => Contamination::GaussCov {
                mu,
                sigma: Matrix::identity(p).scaled(scale),
            },
            QTemplate::GaussStructured { sigma_seed } => Contamination::GaussCov {
                mu,
                sigma: make_structured_sigma(p, sigma_seed),
            },
            QTemplate::CauchyIndep => Contamination::CauchyIndep { tau: mu },
            QTemplate::CauchyElliptical { scale } => Contamination::CauchyElliptical { location: mu, scale },
        }
    }
}

impl CoreTemplate {
    pub fn resolve(&self, p: usize) -> CoreDist {
        match *self {
            CoreTemplate::GaussIdentity => CoreDist::GaussIdentity,
            CoreTemplate::GaussStructured { sigma_seed } => CoreDist::GaussCov {
                sigma: make_structured_sigma(p, sigma_seed),
            },
            CoreTemplate::EllipticalCauchy => CoreDist::EllipticalCauchy,
        }
    }

    /// True scatter matrix, when it is known in closed form.
    pub fn scatter(&self, p: usize) -> Option<Matrix> {
        match *self {
            CoreTemplate::GaussIdentity | CoreTemplate::EllipticalCauchy => Some(Matrix::identity(p)),
            CoreTemplate::GaussStructured { sigma_seed } => Some(make_structured_sigma(p, sigma_seed)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Jsgan,
    Tvgan,
    CwMedian,
    Mean,
    TvLearn1d,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Jsgan => "jsgan",
            Method::Tvgan => "tvgan",
            Method::CwMedian => "cw_median",
            Method::Mean => "mean",
            Method::TvLearn1d => "tv_learn_1d",
        }
    }

    pub fn is_adversarial(&self) -> bool {
        matches!(self, Method::Jsgan | Method::Tvgan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    #[default]
    Location,
    Affine,
    Elliptical,
    EllipticalScatter,
}

/// Optional replacements for the default hyperparameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub gamma_d: Option<f64>,
    pub gamma_g: Option<f64>,
    pub k_steps: Option<usize>,
    pub epochs: Option<usize>,
    pub avg_epochs: Option<usize>,
    pub batch: Option<usize>,
    pub lambda_reg: Option<f64>,
    pub reg_stat: Option<RegStat>,
    pub reg_side: Option<RegSide>,
    pub init_scheme: Option<InitScheme>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSpec {
    pub method: Method,
    /// Column name in the tables; defaults to the method tag.
    #[serde(default)]
    pub label: Option<String>,
    /// Hidden widths of the discriminator; `None` picks one layer sized by `n`.
    #[serde(default)]
    pub hidden: Option<Vec<usize>>,
    #[serde(default)]
    pub generator: GeneratorKind,
    #[serde(default)]
    pub overrides: TrainOverrides,
}

impl EstimatorSpec {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.method.tag().to_string())
    }

    pub fn hidden_for(&self, n: usize) -> Vec<usize> {
        self.hidden.clone().unwrap_or_else(|| vec![default_hidden_width(n)])
    }

    /// Resolved training configuration for an adversarial method.
    pub fn train_config(&self, p: usize, n: usize, seed: u64) -> TrainConfig {
        let divergence = match self.method {
            Method::Tvgan => Divergence::Tv,
            _ => Divergence::Js,
        };
        let mut structure = vec![p];
        structure.extend(self.hidden_for(n));
        structure.push(1);
        let mut cfg = default_config(&structure, n, divergence);
        let o = &self.overrides;
        cfg.gamma_d = o.gamma_d.unwrap_or(cfg.gamma_d);
        cfg.gamma_g = o.gamma_g.unwrap_or(cfg.gamma_g);
        cfg.k_steps = o.k_steps.unwrap_or(cfg.k_steps);
        cfg.epochs = o.epochs.unwrap_or(cfg.epochs);
        cfg.avg_epochs = o.avg_epochs.unwrap_or(cfg.avg_epochs.min(cfg.epochs));
        cfg.batch = o.batch.unwrap_or(cfg.batch);
        cfg.objective.lambda_reg = o.lambda_reg.unwrap_or(cfg.objective.lambda_reg);
        cfg.objective.reg_stat = o.reg_stat.unwrap_or(cfg.objective.reg_stat);
        cfg.reg_side = o.reg_side.unwrap_or(cfg.reg_side);
        cfg.init_scheme = o.init_scheme.unwrap_or(cfg.init_scheme);
        cfg.seed = seed;
        cfg
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.dataset;
        let empty_axis = [
            ("eps", d.eps.is_empty()),
            ("p", d.p.is_empty()),
            ("n", d.n.is_empty()),
            ("t", d.t.is_empty()),
            ("q", d.q.is_empty()),
            ("estimators", self.estimators.is_empty()),
        ];
        if let Some((name, _)) = empty_axis.iter().find(|(_, e)| *e) {
            return Err(Error::InvalidConfig(format!("sweep axis `{name}` is empty")));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidConfig(format!("invalid experiment name `{}`", self.name)));
        }
        let mut labels: Vec<String> = self.estimators.iter().map(EstimatorSpec::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig("estimator labels must be unique".into()));
        }
        Ok(())
    }

    /// Dataset for one cell and repetition.
    pub fn dataset_spec(&self, cell: &CellAxes, seed: u64) -> DatasetSpec {
        let d = &self.dataset;
        DatasetSpec {
            p: cell.p,
            n: cell.n,
            eps: cell.eps,
            theta: vec![d.theta_value; cell.p],
            core: d.core.resolve(cell.p),
            q: d.q[cell.q_index].resolve(cell.p, cell.t),
            seed,
        }
    }

    /// Every axis combination, in config order.
    pub fn cells(&self) -> Vec<CellAxes> {
        let d = &self.dataset;
        let mut out = Vec::new();
        for &eps in &d.eps {
            for &p in &d.p {
                for &n in &d.n {
                    for &t in &d.t {
                        for q_index in 0..d.q.len() {
                            out.push(CellAxes { eps, p, n, t, q_index });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Axis values of one dataset cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellAxes {
    pub eps: f64,
    pub p: usize,
    pub n: usize,
    pub t: f64,
    pub q_index: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "dataset": {"eps": [0.1], "p": [2], "n": [50], "q": [{"kind": "gauss_shift"}]},
        "estimators": [{"method": "cw_median"}],
        "repetitions": 1,
        "base_seed": 1
    }"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.dataset.t, vec![0.0]);
        assert_eq!(cfg.cells().len(), 1);
    }

    #[test]
    fn rejects_empty_axes_and_duplicates() {
        let empty = MINIMAL.replace("\"p\": [2]", "\"p\": []");
        assert!(ExperimentConfig::from_json(&empty).is_err());
        let dup = MINIMAL.replace(
            r#"[{"method": "cw_median"}]"#,
            r#"[{"method": "mean"}, {"method": "mean"}]"#,
        );
        assert!(ExperimentConfig::from_json(&dup).is_err());
        let unknown = MINIMAL.replace("\"repetitions\"", "\"reps\": 2, \"repetitions\"");
        assert!(ExperimentConfig::from_json(&unknown).is_err());
    }

    #[test]
    fn overrides_apply() {
        let spec = EstimatorSpec {
            method: Method::Tvgan,
            label: None,
            hidden: Some(vec![]),
            generator: GeneratorKind::Location,
            overrides: TrainOverrides {
                epochs: Some(10),
                gamma_g: Some(0.5),
                ..Default::default()
            },
        };
        let cfg = spec.train_config(3, 100, 9);
        assert_eq!((cfg.epochs, cfg.gamma_g, cfg.avg_epochs, cfg.seed), (10, 0.5, 1, 9));
    }
}
