use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{GriddedRecord, NormalizationStats};

/// Gridded record augmented with per-cell delta (time since the last
/// observation) and last-observed value, plus per-signal means.
///
/// Mask polarity: `true` (1) means observed. At an observed cell delta is 0
/// and the last-observed value is the cell value. Before the first
/// observation the last-observed value falls back to the signal mean and
/// delta counts time from the start of the sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitFeatures {
    pub grid: GriddedRecord,
    pub delta: Vec<f64>,
    pub last: Vec<f64>,
    pub mean: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeanMode {
    /// Training-set mean of observed entries.
    #[default]
    Global,
    /// Mean of the record's own observations, falling back to the global
    /// mean for signals the record never observes.
    PerRecord,
}

impl FitFeatures {
    pub fn steps(&self) -> usize {
        self.grid.steps
    }

    pub fn signals(&self) -> usize {
        self.grid.signals
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    pub fn value(&self, step: usize, signal: usize) -> f64 {
        self.grid.value(step, signal)
    }

    pub fn observed(&self, step: usize, signal: usize) -> bool {
        self.grid.observed(step, signal)
    }

    pub fn delta(&self, step: usize, signal: usize) -> f64 {
        self.delta[self.grid.index(step, signal)]
    }

    pub fn last(&self, step: usize, signal: usize) -> f64 {
        self.last[self.grid.index(step, signal)]
    }

    /// Checks the mask/delta/last consistency rules; returns a description of
    /// the first violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let step = self.step();
        for s in 0..self.signals() {
            let mut seen = false;
            for t in 0..self.steps() {
                let (d, l) = (self.delta(t, s), self.last(t, s));
                if d < 0.0 {
                    return Err(format!("negative delta at ({t}, {s})"));
                }
                if self.observed(t, s) {
                    if d != 0.0 || l != self.value(t, s) {
                        return Err(format!("observed cell ({t}, {s}) has delta {d}, last {l}"));
                    }
                    seen = true;
                } else if t == 0 {
                    if d != 0.0 || l != self.mean[s] {
                        return Err(format!("unobserved first cell of signal {s} has delta {d}, last {l}"));
                    }
                } else {
                    let expected = self.delta(t - 1, s) + step;
                    if (d - expected).abs() > 1e-9 * expected.max(1.0) {
                        return Err(format!("delta does not advance by the grid step at ({t}, {s})"));
                    }
                    if l != self.last(t - 1, s) {
                        return Err(format!("last value changes without an observation at ({t}, {s})"));
                    }
                    if !seen && l != self.mean[s] {
                        return Err(format!("pre-observation last value is not the mean at ({t}, {s})"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Single forward pass per signal carrying the last observation and the
/// elapsed time.
pub fn build_fit_features(grid: &GriddedRecord, means: &[f64]) -> Result<FitFeatures> {
    if means.len() != grid.signals {
        return Err(Error::Config(format!(
            "{} means supplied for {} signals",
            means.len(),
            grid.signals
        )));
    }
    let n = grid.values.len();
    let mut delta = vec![0.0; n];
    let mut last = vec![0.0; n];
    for (s, &mean) in means.iter().enumerate() {
        let mut carried = mean;
        // Delta is (t - anchor) * step rather than a running sum, so it is
        // exact for any step.
        let mut anchor = 0usize;
        for t in 0..grid.steps {
            let i = grid.index(t, s);
            if grid.mask[i] {
                carried = grid.values[i];
                anchor = t;
            }
            delta[i] = (t - anchor) as f64 * grid.step;
            last[i] = carried;
        }
    }
    Ok(FitFeatures {
        grid: grid.clone(),
        delta,
        last,
        mean: means.to_vec(),
    })
}

/// Means to embed in a record's features under the chosen mode.
pub fn record_means(grid: &GriddedRecord, stats: &NormalizationStats, mode: MeanMode) -> Vec<f64> {
    match mode {
        MeanMode::Global => stats.mean.clone(),
        MeanMode::PerRecord => (0..grid.signals)
            .map(|s| {
                let (sum, n) = (0..grid.steps)
                    .filter(|&t| grid.observed(t, s))
                    .fold((0.0, 0usize), |(acc, n), t| (acc + grid.value(t, s), n + 1));
                if n > 0 {
                    sum / n as f64
                } else {
                    stats.mean[s]
                }
            })
            .collect(),
    }
}
