use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::pipeline::{
    build_fit_features, compute_normalization, grid_record, record_means, DatasetSplit, FitFeatures,
    GriddedRecord, MeanMode, NormalizationStats, RawRecord,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Fast (base) grid step in record time units.
    pub fast_step: f64,
    /// Slow grid step as a multiple of the fast step.
    pub slow_factor: usize,
    pub horizon: f64,
    pub mean_mode: MeanMode,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            fast_step: 1.0,
            slow_factor: 8,
            horizon: 48.0,
            mean_mode: MeanMode::Global,
        }
    }
}

impl GridConfig {
    pub fn slow_step(&self) -> f64 {
        self.fast_step * self.slow_factor as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.slow_factor == 0 {
            return Err(Error::Config("slow_factor must be at least 1".into()));
        }
        crate::pipeline::grid::step_count(self.fast_step, self.horizon)?;
        Ok(())
    }
}

/// Transform from stored features to model inputs: z-scored value, last and
/// mean channels; delta divided by the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub stats: NormalizationStats,
    pub horizon: f64,
}

impl Scaling {
    #[inline]
    pub fn value(&self, signal: usize, x: f64) -> f64 {
        self.stats.z(signal, x)
    }

    #[inline]
    pub fn delta(&self, d: f64) -> f64 {
        d / self.horizon
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedRecord {
    pub id: String,
    pub label: usize,
    pub fast: FitFeatures,
    pub slow: FitFeatures,
}

/// Feature tensors for a whole cohort on the fast and slow grids, with
/// normalization computed from the training split only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreparedDataset {
    pub signal_names: Vec<String>,
    pub classes: usize,
    pub grid: GridConfig,
    pub stats: NormalizationStats,
    pub split: DatasetSplit,
    pub records: Vec<PreparedRecord>,
    pub dropped_observations: usize,
}

impl PreparedDataset {
    pub fn scaling(&self) -> Scaling {
        Scaling {
            stats: self.stats.clone(),
            horizon: self.grid.horizon,
        }
    }

    fn select<'a>(&'a self, ids: &[String]) -> Vec<&'a PreparedRecord> {
        let index: HashMap<&str, usize> = self
            .records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), i))
            .collect();
        ids.iter()
            .filter_map(|id| index.get(id.as_str()).map(|&i| &self.records[i]))
            .collect()
    }

    pub fn train(&self) -> Vec<&PreparedRecord> {
        self.select(&self.split.train)
    }

    pub fn validation(&self) -> Vec<&PreparedRecord> {
        self.select(&self.split.validation)
    }

    pub fn test(&self) -> Vec<&PreparedRecord> {
        self.select(&self.split.test)
    }

    pub fn num_signals(&self) -> usize {
        self.signal_names.len()
    }
}

pub fn class_count(records: &[RawRecord]) -> usize {
    records.iter().map(|r| r.label + 1).max().unwrap_or(0).max(2)
}

/// Grids every record on both grids, fits normalization on the training
/// split and builds the features.
pub fn prepare_dataset(
    raw: &[RawRecord],
    signal_names: &[String],
    grid: &GridConfig,
    split: DatasetSplit,
    exec: Exec,
) -> Result<PreparedDataset> {
    grid.validate()?;
    if let Some(r) = raw.iter().find(|r| r.num_signals() != signal_names.len()) {
        return Err(Error::Config(format!(
            "record {} has {} signals, dataset declares {}",
            r.id,
            r.num_signals(),
            signal_names.len()
        )));
    }
    let gridded: Vec<(GriddedRecord, GriddedRecord, usize)> = exec
        .map(raw, |r| -> Result<_> {
            let (fast, d) = grid_record(r, grid.fast_step, grid.horizon)?;
            let (slow, _) = grid_record(r, grid.slow_step(), grid.horizon.max(grid.slow_step()))?;
            Ok((fast, slow, d))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let dropped = gridded.iter().map(|g| g.2).sum();

    let position: HashMap<&str, usize> = raw.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
    let train_grids = split
        .train
        .iter()
        .map(|id| {
            position
                .get(id.as_str())
                .map(|&i| &gridded[i].0)
                .ok_or_else(|| Error::Config(format!("split references unknown record `{id}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = compute_normalization(train_grids)?;

    let records = exec
        .map_indexed(raw.len(), |i| -> Result<PreparedRecord> {
            let (fast_grid, slow_grid, _) = &gridded[i];
            let means = record_means(fast_grid, &stats, grid.mean_mode);
            Ok(PreparedRecord {
                id: raw[i].id.clone(),
                label: raw[i].label,
                fast: build_fit_features(fast_grid, &means)?,
                slow: build_fit_features(slow_grid, &means)?,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    Ok(PreparedDataset {
        signal_names: signal_names.to_vec(),
        classes: class_count(raw),
        grid: grid.clone(),
        stats,
        split,
        records,
        dropped_observations: dropped,
    })
}
