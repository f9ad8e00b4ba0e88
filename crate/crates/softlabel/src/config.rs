//! Run configuration: one TOML file per run, with command-line overrides applied on top.
//!
//! ```toml
//! seed = 7
//! approach = "ssf"          # sigmoid | ssf | step
//! out = "runs/ssf"
//!
//! [data]
//! paths = ["synth.json"]    # relative to this file
//! format = "json"           # json | csv
//! split = "test"            # split used by evaluate / predict
//!
//! [featurizer]
//! dimension = 16384
//!
//! [head]
//! hidden_width = 20
//!
//! [activation]
//! a = 3                     # optional, defaults to the dataset's annotator count
//! theta = 0.05
//! tail = "jump"             # jump | continuous
//!
//! [train]
//! epochs = 100
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use softlabel_core::activations::{SigmoidParams, SsfParams, StepGrid, TailMode};
use softlabel_core::data::{DisagreementDataset, FeaturizerConfig, Split};
use softlabel_core::evaluation::ApproachSpec;
use softlabel_core::network::{HeadConfig, OutputActivation};
use softlabel_core::training::{Optimizer, TrainConfig, DEFAULT_CLAMP_EPS};

use crate::dataset_io::DatasetFormat;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    /// Widened sigmoid head.
    #[default]
    Sigmoid,
    /// Sinusoidal step function head.
    Ssf,
    /// Widened sigmoid head, quantized to the soft-label grid at inference.
    Step,
}

impl Approach {
    pub fn name(self) -> &'static str {
        match self {
            Approach::Sigmoid => "sigmoid",
            Approach::Ssf => "ssf",
            Approach::Step => "step",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    #[default]
    Jump,
    Continuous,
}

impl From<Tail> for TailMode {
    fn from(t: Tail) -> Self {
        match t {
            Tail::Jump => TailMode::Jump,
            Tail::Continuous => TailMode::Continuous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub paths: Vec<PathBuf>,
    pub format: Option<DatasetFormat>,
    pub split: Split,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            paths: Vec::new(),
            format: None,
            split: Split::Test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeadSection {
    pub hidden_width: usize,
    pub dropout1: f64,
    pub dropout2: f64,
}

impl Default for HeadSection {
    fn default() -> Self {
        HeadSection {
            hidden_width: 20,
            dropout1: 0.2,
            dropout2: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivationSection {
    pub a: Option<u32>,
    pub theta: f64,
    pub tail: Tail,
    pub widening: f64,
}

impl Default for ActivationSection {
    fn default() -> Self {
        ActivationSection {
            a: None,
            theta: 0.05,
            tail: Tail::Jump,
            widening: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub loss_clamp_eps: f64,
    pub shuffle: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 100,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            loss_clamp_eps: DEFAULT_CLAMP_EPS,
            shuffle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub approach: Approach,
    pub out: PathBuf,
    pub data: DataSection,
    pub featurizer: FeaturizerConfig,
    pub head: HeadSection,
    pub activation: ActivationSection,
    pub train: TrainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            approach: Approach::Sigmoid,
            out: PathBuf::from("runs/default"),
            data: DataSection::default(),
            featurizer: FeaturizerConfig::default(),
            head: HeadSection::default(),
            activation: ActivationSection::default(),
            train: TrainSection::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub approach: Option<Approach>,
    pub a: Option<u32>,
    pub theta: Option<f64>,
    pub tail: Option<Tail>,
    pub split: Option<Split>,
    pub epochs: Option<usize>,
}

impl RunConfig {
    /// Parses a TOML document; relative data and output paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for p in &mut cfg.data.paths {
            if p.is_relative() {
                *p = base_dir.join(&*p);
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base_dir.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(approach) = o.approach {
            self.approach = approach;
        }
        if let Some(a) = o.a {
            self.activation.a = Some(a);
        }
        if let Some(theta) = o.theta {
            self.activation.theta = theta;
        }
        if let Some(tail) = o.tail {
            self.activation.tail = tail;
        }
        if let Some(split) = o.split {
            self.data.split = split;
        }
        if let Some(epochs) = o.epochs {
            self.train.epochs = epochs;
        }
    }

    pub fn dataset_format(&self) -> DatasetFormat {
        self.data
            .format
            .or_else(|| self.data.paths.first().map(|p| DatasetFormat::from_path(p)))
            .unwrap_or_default()
    }

    /// Annotator count for the grid-based approaches: explicit value if given,
    /// otherwise the dataset's constant count.
    pub fn resolve_a(&self, data: &DisagreementDataset) -> Result<u32> {
        match (self.activation.a, data.annotator_count()) {
            (Some(a), Some(found)) if a != found => Err(softlabel_core::Error::AnnotatorMismatch {
                expected: a,
                found: Some(found),
            }
            .into()),
            (Some(a), _) => Ok(a),
            (None, Some(found)) => Ok(found),
            (None, None) => Err(Error::Config(format!(
                "approach {} needs a constant annotator count; dataset has none and no `a` was given",
                self.approach.name()
            ))),
        }
    }

    pub fn output_activation(&self, data: &DisagreementDataset) -> Result<OutputActivation> {
        Ok(match self.approach {
            Approach::Sigmoid | Approach::Step => {
                OutputActivation::WidenedSigmoid(SigmoidParams::new(self.activation.widening)?)
            }
            Approach::Ssf => OutputActivation::Ssf(SsfParams::with_tail(
                self.resolve_a(data)?,
                self.activation.theta,
                self.activation.tail.into(),
            )?),
        })
    }

    pub fn head_config(&self, data: &DisagreementDataset) -> Result<HeadConfig> {
        let cfg = HeadConfig {
            input_dim: self.featurizer.dimension,
            hidden_width: self.head.hidden_width,
            dropout1: self.head.dropout1,
            dropout2: self.head.dropout2,
            output_activation: self.output_activation(data)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn approach_spec(&self, data: &DisagreementDataset) -> Result<ApproachSpec> {
        Ok(match self.approach {
            Approach::Sigmoid => ApproachSpec::Sigmoid,
            Approach::Ssf => ApproachSpec::Ssf,
            Approach::Step => ApproachSpec::StepOverSigmoid(StepGrid::new(self.resolve_a(data)?)?),
        })
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let optimizer = match t.optimizer {
            OptimizerKind::Adam => Optimizer::Adam {
                beta1: t.beta1,
                beta2: t.beta2,
                eps: t.adam_eps,
            },
            OptimizerKind::Sgd => Optimizer::Sgd,
        };
        let cfg = TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            optimizer,
            seed: self.seed,
            loss_clamp_eps: t.loss_clamp_eps,
            shuffle: t.shuffle,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
