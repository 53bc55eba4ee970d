use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compute::OptimizerConfig;
use crate::datasets::SyntheticConfig;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::experiment::train::TrainConfig;
use crate::fit::{Activation, Branch, ModelDims, ModelKind};
use crate::pipeline::{GridConfig, RATIOS_64_16_20};

/// Relative data paths are resolved against this directory when it is set.
pub const DATA_ROOT_ENV: &str = "MULTIFIT_DATA_ROOT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    #[default]
    Synthetic,
    Physionet,
    LongCsv,
    /// A directory written by `prepare-data`.
    Cache,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: DataSource,
    /// PhysioNet record directory, long-format CSV file or cache directory.
    pub path: Option<PathBuf>,
    /// PhysioNet outcomes file or long-format label CSV.
    pub labels: Option<PathBuf>,
    /// Fixed signal order for long-format CSV input.
    pub signals: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub hidden: usize,
    pub repr: usize,
    pub head_hidden: usize,
    pub memory_activation: Activation,
    /// Support signals per signal for the -V kinds.
    pub support_k: usize,
    /// Signal name to branch, applied after the automatic split.
    pub branch_overrides: BTreeMap<String, Branch>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let dims = ModelDims::default();
        ModelConfig {
            kind: ModelKind::Fit,
            hidden: dims.hidden,
            repr: dims.repr,
            head_hidden: dims.head_hidden,
            memory_activation: dims.memory_activation,
            support_k: 5,
            branch_overrides: BTreeMap::new(),
        }
    }
}

impl ModelConfig {
    pub fn dims(&self) -> ModelDims {
        ModelDims {
            hidden: self.hidden,
            repr: self.repr,
            head_hidden: self.head_hidden,
            memory_activation: self.memory_activation,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub split_ratios: [f64; 3],
    /// Fraction of observations removed per signal before gridding.
    pub missing: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingConfig {
            epochs: t.epochs,
            patience: t.patience,
            batch_size: t.batch_size,
            seeds: vec![0, 1, 2],
            split_ratios: RATIOS_64_16_20,
            missing: 0.0,
        }
    }
}

impl TrainingConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { epochs: self.epochs, patience: self.patience, batch_size: self.batch_size }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub fractions: Vec<f64>,
    pub models: Vec<ModelKind>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            fractions: vec![0.3, 0.5, 0.7, 0.9],
            models: vec![ModelKind::BaMean, ModelKind::Fit, ModelKind::FitV],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("results") }
    }
}

/// Full experiment description, read from TOML. Every section is optional
/// and unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub exec: Exec,
    pub data: DataConfig,
    pub synthetic: SyntheticConfig,
    pub grid: GridConfig,
    pub model: ModelConfig,
    pub optimizer: OptimizerConfig,
    pub training: TrainingConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

fn parse_override(value: &str) -> toml::Value {
    // Accept any TOML literal; anything else is taken as a bare string.
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

/// Sets `a.b.c = value` inside `table`, creating intermediate tables.
fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override key `{}` is malformed", key.trim())));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{}`: `{part}` is not a section", key.trim())))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_override(value.trim()));
    Ok(())
}

impl ExperimentConfig {
    /// Parses TOML text, applies `key=value` overrides and validates.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {}", e.message())))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Contract(format!("config serialization: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.training;
        if t.seeds.is_empty() {
            return Err(Error::Config("training.seeds must not be empty".into()));
        }
        self.training.train_config().validate()?;
        if !(0.0..=1.0).contains(&t.missing) {
            return Err(Error::Config(format!("training.missing = {} outside [0, 1]", t.missing)));
        }
        let r = t.split_ratios;
        if r.iter().any(|&x| !(x > 0.0)) || ((r.iter().sum::<f64>()) - 1.0).abs() > 1e-9 {
            return Err(Error::Config("training.split_ratios must be positive and sum to 1".into()));
        }
        let f = &self.sweep.fractions;
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) || f.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("sweep.fractions must lie in [0, 1] and be sorted ascending".into()));
        }
        self.grid.validate()?;
        self.optimizer.validate()?;
        if self.data.source == DataSource::Synthetic {
            self.synthetic.validate()?;
        }
        Ok(())
    }

    /// Resolves a configured data path against the data-root variable.
    pub fn resolve(path: &Path) -> PathBuf {
        match std::env::var_os(DATA_ROOT_ENV) {
            Some(root) if path.is_relative() => Path::new(&root).join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn data_path(&self) -> Result<PathBuf> {
        let p = self
            .data
            .path
            .as_deref()
            .ok_or_else(|| Error::Config(format!("data.path is required for source {:?}", self.data.source)))?;
        Ok(Self::resolve(p))
    }

    pub fn labels_path(&self) -> Result<PathBuf> {
        let p = self
            .data
            .labels
            .as_deref()
            .ok_or_else(|| Error::Config(format!("data.labels is required for source {:?}", self.data.source)))?;
        Ok(Self::resolve(p))
    }
}
