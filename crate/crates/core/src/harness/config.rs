use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::corpus::{DatasetId, Split};
use crate::error::{Error, Result};
use crate::gateway::{DecodeParams, MockBehavior, ModelEndpoint, ResizeMode};
use crate::metrics::AvgMode;
use crate::prompting::{CoordScale, PromptSpec, PromptTask, Strategy};
use crate::seed::sha256_hex;

pub const HARNESS_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DataSelection {
    /// Canonical JSONL corpus files.
    pub corpus: Vec<PathBuf>,
    /// Empty selects every dataset.
    pub datasets: Vec<DatasetId>,
    /// Empty selects every split.
    pub splits: Vec<Split>,
    /// Keep the first N records per (dataset, task) in corpus order.
    pub take_first_n: Option<usize>,
    /// Draw N positive and N negative social pairs per (dataset, task),
    /// uniformly under the run seed. Gaze records are unaffected.
    pub balanced_subset: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    None,
    BestOfN,
    AverageOfN,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "none" => Ok(Aggregation::None),
            "best_of_n" | "best" => Ok(Aggregation::BestOfN),
            "average_of_n" | "avg" | "average" => Ok(Aggregation::AverageOfN),
            _ => Err(Error::Config(format!("unknown aggregation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptConfig {
    pub strategy: Strategy,
    pub coord_scale: CoordScale,
    pub decimals: Option<u32>,
    pub exemplar_limit: usize,
    /// Directory holding `exemplars.json`; the bundled bank is used when unset.
    pub exemplars: Option<PathBuf>,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            strategy: Strategy::default(),
            coord_scale: CoordScale::default(),
            decimals: None,
            exemplar_limit: 2,
            exemplars: None,
        }
    }
}

impl PromptConfig {
    pub fn spec(&self, task: PromptTask) -> PromptSpec {
        PromptSpec {
            task,
            strategy: self.strategy,
            coord_scale: self.coord_scale,
            decimals: self.decimals,
            exemplar_limit: self.exemplar_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Scripted backend; takes precedence over `endpoint`.
    pub mock: Option<MockBehavior>,
    pub endpoint: Option<ModelEndpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub avg_mode: AvgMode,
    pub threshold: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            avg_mode: AvgMode::PerAnnotation,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ImageConfig {
    /// Base directory for relative image references.
    pub root: PathBuf,
    pub resize: ResizeMode,
}

fn default_tasks() -> Vec<PromptTask> {
    vec![
        PromptTask::GFo,
        PromptTask::LAEO,
        PromptTask::LAH,
        PromptTask::SA,
    ]
}

fn default_output() -> PathBuf {
    PathBuf::from("gazebench-out")
}

/// Everything that defines an evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataSelection,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<PromptTask>,
    #[serde(default)]
    pub prompt: PromptConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub decode: DecodeParams,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub metrics: MetricConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub image: ImageConfig,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Stop after this many samples, leaving the rest pending.
    #[serde(default)]
    pub stop_after: Option<usize>,
    /// Coordinate scales evaluated by probe runs.
    #[serde(default)]
    pub probe_scales: Vec<CoordScale>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSelection::default(),
            tasks: default_tasks(),
            prompt: PromptConfig::default(),
            model: ModelConfig::default(),
            decode: DecodeParams::default(),
            aggregation: Aggregation::None,
            metrics: MetricConfig::default(),
            seed: 0,
            image: ImageConfig::default(),
            cache_dir: None,
            output_dir: default_output(),
            stop_after: None,
            probe_scales: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.decode.validate()?;
        match self.aggregation {
            Aggregation::None if self.decode.n_samples > 1 => {
                return Err(Error::Config(
                    "n_samples > 1 needs an aggregation (best_of_n or average_of_n)".into(),
                ))
            }
            Aggregation::BestOfN | Aggregation::AverageOfN if self.decode.n_samples < 2 => {
                return Err(Error::Config("aggregation needs n_samples > 1".into()))
            }
            _ => {}
        }
        if !(self.metrics.threshold > 0.0 && self.metrics.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold {} outside (0, 1)",
                self.metrics.threshold
            )));
        }
        if self.model.mock.is_none() {
            match &self.model.endpoint {
                Some(e) => e.validate()?,
                None => return Err(Error::Config("no endpoint and no mock behavior".into())),
            }
        }
        if self.tasks.contains(&PromptTask::Probe) {
            return Err(Error::Config("the probe has its own run command".into()));
        }
        Ok(())
    }

    /// The behavior-defining subset: corpus selection, tasks, prompt, model
    /// identity, decoding, aggregation, metric conventions, seed and image
    /// preparation. Paths for output and cache, parallelism, timeouts and
    /// retry settings are excluded.
    pub fn fingerprint_fields(&self) -> Value {
        let model = match (&self.model.mock, &self.model.endpoint) {
            (Some(m), _) => json!({"mock": m.to_string()}),
            (None, Some(e)) => json!({"base_url": e.base_url, "model_name": e.model_name}),
            (None, None) => Value::Null,
        };
        let exemplars = match (&self.prompt.exemplars, self.prompt.strategy) {
            (_, s) if s != Strategy::PrInContextCoT => Value::Null,
            (Some(dir), _) => json!(dir),
            (None, _) => json!("bundled"),
        };
        json!({
            "corpus": self.data.corpus,
            "datasets": self.data.datasets,
            "splits": self.data.splits,
            "take_first_n": self.data.take_first_n,
            "balanced_subset": self.data.balanced_subset,
            "tasks": self.tasks,
            "strategy": self.prompt.strategy,
            "coord_scale": self.prompt.coord_scale,
            "decimals": self.prompt.decimals,
            "exemplar_limit": self.prompt.exemplar_limit,
            "exemplars": exemplars,
            "model": model,
            "decode": self.decode,
            "aggregation": self.aggregation,
            "oracle": self.aggregation == Aggregation::BestOfN,
            "avg_mode": self.metrics.avg_mode,
            "threshold": self.metrics.threshold,
            "seed": self.seed,
            "resize": self.image.resize.to_string(),
            "harness_version": HARNESS_VERSION,
        })
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.fingerprint_fields().to_string().as_bytes())
    }
}
