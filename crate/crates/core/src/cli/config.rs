//! Experiment configuration: presets, flat JSON config files and flag overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activations::Activation;
use crate::error::{Error, Result};
use crate::linalg::Norm;
use crate::robustness::DEFAULT_EPSILONS;
use crate::training::{OptimizerConfig, PenaltyKind, PenaltySpec, TrainConfig};
use crate::verification::SearchOptions;

/// Lipschitz bound used by the constrained-parameterization comparison,
/// expressed on `/255` inputs.
pub const W23_BOUND: f64 = 25.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Iris,
    Mnist,
}

impl DatasetKind {
    pub fn input_dim(self) -> usize {
        match self {
            DatasetKind::Iris => 4,
            DatasetKind::Mnist => 784,
        }
    }

    pub fn class_count(self) -> usize {
        match self {
            DatasetKind::Iris => 3,
            DatasetKind::Mnist => 10,
        }
    }

    /// Guess the dataset from a network input width.
    pub fn from_input_dim(dim: usize) -> Result<Self> {
        match dim {
            4 => Ok(DatasetKind::Iris),
            784 => Ok(DatasetKind::Mnist),
            d => Err(Error::Config(format!("no dataset has input dimension {d}"))),
        }
    }
}

/// How trainable parameters map to layer weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Direct,
    NormBall,
    W23,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Iris,
    Mnist,
    Activations,
    PnormInf,
    Pnorm1,
    Penalties,
    W23,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Iris,
        Preset::Mnist,
        Preset::Activations,
        Preset::PnormInf,
        Preset::Pnorm1,
        Preset::Penalties,
        Preset::W23,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Iris => "iris",
            Preset::Mnist => "mnist",
            Preset::Activations => "activations",
            Preset::PnormInf => "pnorm-inf",
            Preset::Pnorm1 => "pnorm-1",
            Preset::Penalties => "penalties",
            Preset::W23 => "w23",
        }
    }

    pub fn dataset(self) -> DatasetKind {
        match self {
            Preset::Iris => DatasetKind::Iris,
            _ => DatasetKind::Mnist,
        }
    }

    pub fn default_seeds(self) -> Vec<u64> {
        match self {
            Preset::Iris => vec![0],
            _ => vec![0, 1, 2],
        }
    }

    /// The rows of the preset's table, before overrides.
    pub fn rows(self) -> Vec<RunSpec> {
        let mnist = RunSpec::mnist_default();
        let with = |f: &dyn Fn(&mut RunSpec)| {
            let mut r = mnist.clone();
            f(&mut r);
            r
        };
        match self {
            Preset::Iris => [0.0, 1e-2]
                .into_iter()
                .map(|lambda| RunSpec { lambda, ..RunSpec::iris_default() })
                .collect(),
            Preset::Mnist => [1e-2, 0.0].into_iter().map(|lambda| RunSpec { lambda, ..mnist.clone() }).collect(),
            Preset::Activations => [
                Activation::SinCos,
                Activation::Tanh3,
                Activation::CRelu,
                Activation::Abs,
                Activation::Relu,
            ]
            .into_iter()
            .map(|activation| RunSpec { activation, ..mnist.clone() })
            .collect(),
            Preset::PnormInf | Preset::Pnorm1 => {
                let (p, acts) = if self == Preset::PnormInf {
                    (Norm::Inf, [Activation::IdAbs, Activation::Abs])
                } else {
                    (Norm::L1, [Activation::Abs, Activation::TanhPair])
                };
                let mut rows = Vec::new();
                for lambda in [0.0, 1e-2] {
                    for activation in acts {
                        rows.push(with(&|r| {
                            r.lambda = lambda;
                            r.activation = activation;
                            r.norm_p = p;
                            r.scaled_penalty = true;
                        }));
                    }
                }
                rows
            }
            Preset::Penalties => [(PenaltyKind::Frobenius, 1e-4), (PenaltyKind::N24, 1e-4), (PenaltyKind::Y17, 1e-2)]
                .into_iter()
                .map(|(penalty, lambda)| RunSpec { penalty, lambda, ..mnist.clone() })
                .collect(),
            Preset::W23 => vec![
                with(&|r| {
                    r.model = ModelKind::W23;
                    r.activation = Activation::Relu;
                    r.penalty = PenaltyKind::None;
                    r.lambda = 0.0;
                    r.bound = W23_BOUND;
                }),
                with(&|r| {
                    r.model = ModelKind::NormBall;
                    r.activation = Activation::Abs;
                    r.penalty = PenaltyKind::None;
                    r.lambda = 0.0;
                    r.bound = W23_BOUND;
                }),
            ],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
            Error::Config(format!("unknown preset `{s}` (expected one of {})", names.join(", ")))
        })
    }
}

/// One fully resolved training configuration (a table row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub dataset: DatasetKind,
    /// Hidden widths (pre-activation), excluding input and output.
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub norm_p: Norm,
    pub penalty: PenaltyKind,
    pub lambda: f64,
    /// Divide λ by `√outputs` (p = 1) or `√inputs` (p = ∞).
    pub scaled_penalty: bool,
    pub model: ModelKind,
    /// Lipschitz bound for the constrained models.
    pub bound: f64,
    /// Random-phase variance factor for sincos networks.
    pub init_alpha: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub eval_every: usize,
    pub optimizer: OptimizerConfig,
    /// Train on the first `n` training samples only.
    pub train_limit: Option<usize>,
}

impl RunSpec {
    pub fn iris_default() -> Self {
        Self {
            dataset: DatasetKind::Iris,
            widths: vec![4],
            activation: Activation::SinCos,
            norm_p: Norm::L2,
            penalty: PenaltyKind::TrivialProduct,
            lambda: 1e-2,
            scaled_penalty: false,
            model: ModelKind::Direct,
            bound: W23_BOUND,
            init_alpha: 1.0,
            epochs: 20_000,
            batch_size: 120,
            eval_every: 1000,
            optimizer: OptimizerConfig::cocob(),
            train_limit: None,
        }
    }

    pub fn mnist_default() -> Self {
        Self {
            dataset: DatasetKind::Mnist,
            widths: vec![128, 128],
            activation: Activation::SinCos,
            norm_p: Norm::L2,
            penalty: PenaltyKind::TrivialProduct,
            lambda: 1e-2,
            scaled_penalty: false,
            model: ModelKind::Direct,
            bound: W23_BOUND,
            init_alpha: std::f64::consts::FRAC_1_SQRT_2,
            epochs: 20,
            batch_size: 60,
            eval_every: 1,
            optimizer: OptimizerConfig::cocob(),
            train_limit: None,
        }
    }

    /// `[input, hidden…, output]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.dataset.input_dim()];
        d.extend(&self.widths);
        d.push(self.dataset.class_count());
        d
    }

    pub fn penalty_spec(&self) -> PenaltySpec {
        if self.penalty == PenaltyKind::None || self.lambda == 0.0 {
            return PenaltySpec::none();
        }
        let mut spec = PenaltySpec { norm_p: self.norm_p, ..PenaltySpec::new(self.penalty, self.lambda) };
        if self.scaled_penalty {
            spec = spec.with_dimension_scaling(self.dataset.input_dim(), self.dataset.class_count());
        }
        spec
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            optimizer: self.optimizer,
            seed,
            penalty: self.penalty_spec(),
            eval_every: self.eval_every,
        }
    }

    /// Short human label, also used as the run directory name.
    pub fn label(&self) -> String {
        let mut parts = vec![self.activation.id().to_string()];
        match self.model {
            ModelKind::Direct => {}
            ModelKind::NormBall => parts.push("normball".into()),
            ModelKind::W23 => parts.push("w23".into()),
        }
        if self.norm_p != Norm::L2 {
            parts.push(format!("p{}", self.norm_p));
        }
        if self.penalty_spec().is_active() {
            let kind = serde_json::to_value(self.penalty).ok();
            let kind = kind.as_ref().and_then(|v| v.as_str()).unwrap_or("penalty").to_string();
            parts.push(format!("{kind}{}", self.lambda));
        } else {
            parts.push("unpenalized".into());
        }
        parts.join("-")
    }

    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() || self.widths.contains(&0) {
            return Err(Error::Config(format!("widths {:?} must be non-empty and positive", self.widths)));
        }
        if !(self.bound > 0.0) || !self.bound.is_finite() {
            return Err(Error::Config(format!("bound {} must be positive", self.bound)));
        }
        if !(self.init_alpha > 0.0) || !self.init_alpha.is_finite() {
            return Err(Error::Config(format!("init_alpha {} must be positive", self.init_alpha)));
        }
        if self.train_limit == Some(0) {
            return Err(Error::Config("train_limit must be ≥ 1".into()));
        }
        if self.model != ModelKind::Direct && self.norm_p != Norm::L2 {
            return Err(Error::Config("constrained models are defined for the 2-norm only".into()));
        }
        self.penalty_spec().validate().map_err(to_config)?;
        self.train_config(0).validate().map_err(to_config)
    }
}

fn to_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

/// Flat config file. Every field is optional; flags override file values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub dataset: Option<DatasetKind>,
    pub widths: Option<Vec<usize>>,
    pub activation: Option<String>,
    pub norm_p: Option<Norm>,
    pub penalty: Option<String>,
    pub lambda: Option<f64>,
    pub scaled_penalty: Option<bool>,
    pub model: Option<ModelKind>,
    pub bound: Option<f64>,
    pub init_alpha: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub eval_every: Option<usize>,
    /// `"cocob"` or `"adam"`.
    pub optimizer: Option<String>,
    pub learning_rate: Option<f64>,
    pub train_limit: Option<usize>,
    pub seeds: Option<Vec<u64>>,
    pub out: Option<PathBuf>,
    pub mnist_dir: Option<PathBuf>,
    pub epsilons: Option<Vec<f64>>,
    pub restarts: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fill every field that `other` sets.
    pub fn merge(&mut self, other: ExperimentConfig) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            preset, dataset, widths, activation, norm_p, penalty, lambda, scaled_penalty, model, bound,
            init_alpha, epochs, batch_size, eval_every, optimizer, learning_rate, train_limit, seeds, out,
            mnist_dir, epsilons, restarts
        );
    }

    pub fn preset(&self) -> Result<Option<Preset>> {
        self.preset.as_deref().map(str::parse).transpose()
    }

    /// Expand into table rows with all overrides applied. Rows that become
    /// identical after overriding are merged.
    pub fn resolve(&self) -> Result<Plan> {
        let preset = self.preset()?;
        let base_rows = match (preset, self.dataset) {
            (Some(p), Some(d)) if d != p.dataset() => {
                return Err(Error::Config(format!("preset {p} uses the {:?} dataset", p.dataset())))
            }
            (Some(p), _) => p.rows(),
            (None, Some(DatasetKind::Iris)) => vec![RunSpec::iris_default()],
            (None, Some(DatasetKind::Mnist)) => vec![RunSpec::mnist_default()],
            (None, None) => return Err(Error::Config("either a preset or a dataset is required".into())),
        };
        let activation = self.activation.as_deref().map(str::parse::<Activation>).transpose().map_err(to_config)?;
        let penalty = self.penalty.as_deref().map(str::parse::<PenaltyKind>).transpose().map_err(to_config)?;
        let optimizer = match (self.optimizer.as_deref(), self.learning_rate) {
            (None, None) => None,
            (None | Some("adam"), Some(lr)) => Some(OptimizerConfig::Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }),
            (Some("adam"), None) => Some(OptimizerConfig::adam()),
            (Some("cocob"), None) => Some(OptimizerConfig::cocob()),
            (Some("cocob"), Some(_)) => {
                return Err(Error::Config("learning_rate does not apply to the cocob optimizer".into()))
            }
            (Some(o), _) => return Err(Error::Config(format!("unknown optimizer `{o}`"))),
        };

        let mut rows: Vec<RunSpec> = Vec::new();
        for mut r in base_rows {
            if let Some(w) = &self.widths {
                r.widths = w.clone();
            }
            if let Some(a) = activation {
                r.activation = a;
            }
            if let Some(p) = self.norm_p {
                r.norm_p = p;
            }
            if let Some(k) = penalty {
                r.penalty = k;
            }
            if let Some(l) = self.lambda {
                r.lambda = l;
                if l > 0.0 && r.penalty == PenaltyKind::None {
                    r.penalty = PenaltyKind::TrivialProduct;
                }
            }
            macro_rules! set {
                ($($f:ident),*) => { $( if let Some(v) = self.$f { r.$f = v; } )* };
            }
            set!(scaled_penalty, model, bound, init_alpha, epochs, batch_size, eval_every);
            if let Some(o) = optimizer {
                r.optimizer = o;
            }
            if self.train_limit.is_some() {
                r.train_limit = self.train_limit;
            }
            r.validate()?;
            if !rows.contains(&r) {
                rows.push(r);
            }
        }

        let seeds = match &self.seeds {
            Some(s) if s.is_empty() => return Err(Error::Config("seed list is empty".into())),
            Some(s) => s.clone(),
            None => preset.map_or(vec![0], Preset::default_seeds),
        };
        let epsilons = self.epsilons.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
        if epsilons.is_empty() || epsilons.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::Config(format!("epsilons {epsilons:?} must be finite and ≥ 0")));
        }
        let mut search = SearchOptions::default();
        if let Some(r) = self.restarts {
            if r == 0 {
                return Err(Error::Config("restarts must be ≥ 1".into()));
            }
            search.restarts = r;
        }
        let name = preset.map_or_else(|| "custom".to_string(), |p| p.name().to_string());
        Ok(Plan {
            preset,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(&name)),
            name,
            rows,
            seeds,
            mnist_dir: self.mnist_dir.clone(),
            epsilons,
            search,
        })
    }
}

/// A resolved experiment: rows × seeds plus evaluation settings.
#[derive(Debug, Clone)]
pub struct Plan {
    pub name: String,
    pub preset: Option<Preset>,
    pub rows: Vec<RunSpec>,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub mnist_dir: Option<PathBuf>,
    pub epsilons: Vec<f64>,
    pub search: SearchOptions,
}

impl Plan {
    pub fn dataset(&self) -> DatasetKind {
        self.rows[0].dataset
    }
}
