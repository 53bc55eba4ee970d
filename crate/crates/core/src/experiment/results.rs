use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;
use crate::experiment::metrics::median;
use crate::experiment::run::RunResult;
use crate::fit::ModelKind;

pub const RESULTS_FORMAT_VERSION: u32 = 1;

/// Build identifier recorded in results documents.
pub fn git_describe() -> &'static str {
    env!("MULTIFIT_GIT_DESCRIBE")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub per_seed: Vec<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        Some(Summary {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: median(values)?,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            per_seed: values.to_vec(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub model: ModelKind,
    pub seeds: Vec<u64>,
    pub test_macro_f: Summary,
    pub test_weighted_f: Summary,
    pub test_accuracy: Summary,
}

impl Aggregate {
    pub fn of(runs: &[RunResult]) -> Option<Aggregate> {
        let first = runs.first()?;
        let pick = |f: fn(&RunResult) -> f64| runs.iter().map(f).collect::<Vec<_>>();
        Some(Aggregate {
            model: first.model,
            seeds: runs.iter().map(|r| r.seed).collect(),
            test_macro_f: Summary::of(&pick(|r| r.test.macro_f()))?,
            test_weighted_f: Summary::of(&pick(|r| r.test.weighted.f1))?,
            test_accuracy: Summary::of(&pick(|r| r.test.accuracy))?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_clock_seconds: f64,
    pub finished_unix_seconds: u64,
}

impl Timing {
    pub fn since(start: std::time::Instant) -> Timing {
        Timing {
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            finished_unix_seconds: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// JSON results of a `train` or `evaluate` invocation. Everything except
/// `timing` is a deterministic function of the config and the build.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub format_version: u32,
    pub command: String,
    pub tool_version: String,
    pub git_describe: String,
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
    pub aggregate: Option<Aggregate>,
    pub timing: Option<Timing>,
}

impl ResultsDocument {
    pub fn new(command: &str, config: &ExperimentConfig, runs: Vec<RunResult>) -> Self {
        ResultsDocument {
            format_version: RESULTS_FORMAT_VERSION,
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            git_describe: git_describe().to_string(),
            config: config.clone(),
            aggregate: Aggregate::of(&runs),
            runs,
            timing: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Contract(format!("results serialization: {e}")))
    }

    /// The document with the timing section removed, for comparing runs.
    pub fn deterministic_json(&self) -> Result<String> {
        let mut doc = self.clone();
        doc.timing = None;
        doc.to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ResultsDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if doc.format_version != RESULTS_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "results format version {} is not supported (expected {RESULTS_FORMAT_VERSION})",
                doc.format_version
            )));
        }
        Ok(doc)
    }
}

pub fn save_model(path: &std::path::Path, model: &crate::fit::FitModel) -> Result<()> {
    let json = serde_json::to_string(&model.to_saved())
        .map_err(|e| Error::Contract(format!("model serialization: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &std::path::Path) -> Result<crate::fit::FitModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let saved: crate::fit::SavedModel =
        serde_json::from_str(&text).map_err(|e| Error::Parse { line: e.line(), message: format!("{}: {e}", path.display()) })?;
    crate::fit::FitModel::from_saved(&saved)
}
