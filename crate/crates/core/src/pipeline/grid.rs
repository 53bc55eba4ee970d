use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{Observation, RawRecord};

/// Values and observation mask on a regular grid, stored step-major
/// (`index = step * signals + signal`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriddedRecord {
    pub step: f64,
    pub steps: usize,
    pub signals: usize,
    pub values: Vec<f64>,
    /// `true` means observed.
    pub mask: Vec<bool>,
}

impl GriddedRecord {
    pub fn empty(step: f64, steps: usize, signals: usize) -> Self {
        GriddedRecord {
            step,
            steps,
            signals,
            values: vec![0.0; steps * signals],
            mask: vec![false; steps * signals],
        }
    }

    #[inline]
    pub fn index(&self, step: usize, signal: usize) -> usize {
        step * self.signals + signal
    }

    pub fn value(&self, step: usize, signal: usize) -> f64 {
        self.values[self.index(step, signal)]
    }

    pub fn observed(&self, step: usize, signal: usize) -> bool {
        self.mask[self.index(step, signal)]
    }

    pub fn observed_count(&self, signal: usize) -> usize {
        (0..self.steps).filter(|&t| self.observed(t, signal)).count()
    }

    pub fn duration(&self) -> f64 {
        self.step * self.steps as f64
    }

    /// Observed cells as on-grid observations at `t · step`.
    pub fn to_raw(&self, id: &str, label: usize) -> RawRecord {
        let signals = (0..self.signals)
            .map(|s| {
                (0..self.steps)
                    .filter(|&t| self.observed(t, s))
                    .map(|t| Observation::new(t as f64 * self.step, self.value(t, s)))
                    .collect()
            })
            .collect();
        RawRecord { id: id.to_string(), label, signals }
    }
}

pub fn step_count(grid_step: f64, horizon: f64) -> Result<usize> {
    if !(grid_step > 0.0) || !grid_step.is_finite() {
        return Err(Error::Config(format!("grid step must be positive, got {grid_step}")));
    }
    if !(horizon >= grid_step) || !horizon.is_finite() {
        return Err(Error::Config(format!(
            "horizon {horizon} must be at least one grid step ({grid_step})"
        )));
    }
    Ok((horizon / grid_step).ceil() as usize)
}

/// Half-open bin `[k·step, (k+1)·step)` containing `time`. Times within a
/// relative 1e-9 of a boundary are snapped onto it, so both `0.3` and
/// `3.0 * 0.1` land in bin 3 of a 0.1 grid.
fn bin_of(time: f64, step: f64) -> Option<usize> {
    if time < 0.0 {
        return None;
    }
    let q = time / step;
    let nearest = q.round();
    let k = if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { q.floor() };
    Some(k as usize)
}

/// Bins irregular observations onto a regular grid. The last observation in
/// a bin wins; observations outside `[0, steps·step)` are dropped and
/// counted.
pub fn grid_record(raw: &RawRecord, grid_step: f64, horizon: f64) -> Result<(GriddedRecord, usize)> {
    let steps = step_count(grid_step, horizon)?;
    let mut grid = GriddedRecord::empty(grid_step, steps, raw.num_signals());
    let mut dropped = 0;
    for (s, obs) in raw.signals.iter().enumerate() {
        for o in obs {
            match bin_of(o.time, grid_step) {
                Some(t) if t < steps => {
                    let i = grid.index(t, s);
                    grid.values[i] = o.value;
                    grid.mask[i] = true;
                }
                _ => dropped += 1,
            }
        }
    }
    Ok((grid, dropped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(signals: Vec<Vec<(f64, f64)>>) -> RawRecord {
        RawRecord::new(
            "r",
            0,
            signals
                .into_iter()
                .map(|s| s.into_iter().map(|(t, v)| Observation::new(t, v)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_record_has_empty_mask() {
        let (g, dropped) = grid_record(&rec(vec![vec![], vec![]]), 1.0, 4.0).unwrap();
        assert_eq!(g.steps, 4);
        assert!(g.mask.iter().all(|m| !m));
        assert_eq!(dropped, 0);
    }

    #[test]
    fn last_observation_in_bin_wins() {
        let (g, _) = grid_record(&rec(vec![vec![(1.2, 5.0), (1.7, 7.0)]]), 1.0, 3.0).unwrap();
        assert!(g.observed(1, 0));
        assert_eq!(g.value(1, 0), 7.0);
        assert!(!g.observed(0, 0) && !g.observed(2, 0));
    }

    #[test]
    fn boundaries_are_half_open() {
        let (g, _) = grid_record(&rec(vec![vec![(2.0, 1.0)]]), 1.0, 4.0).unwrap();
        assert!(g.observed(2, 0));
        assert!(!g.observed(1, 0));
        let (g, _) = grid_record(&rec(vec![vec![(0.3, 1.0), (3.0 * 0.1, 2.0), (0.7 * 3.0, 3.0)]]), 0.1, 3.0).unwrap();
        assert_eq!(g.value(3, 0), 2.0);
        assert!(g.observed(21, 0));
        assert!(!g.observed(20, 0));
    }

    #[test]
    fn out_of_horizon_is_dropped_not_fatal() {
        let (g, dropped) = grid_record(&rec(vec![vec![(0.5, 1.0), (4.0, 2.0), (9.0, 3.0)]]), 1.0, 4.0).unwrap();
        assert_eq!(dropped, 2);
        assert_eq!(g.observed_count(0), 1);
        assert!(grid_record(&rec(vec![vec![]]), 0.0, 4.0).is_err());
        assert!(grid_record(&rec(vec![vec![]]), 2.0, 1.0).is_err());
    }

    #[test]
    fn ceil_step_count() {
        assert_eq!(step_count(1.0, 48.0).unwrap(), 48);
        assert_eq!(step_count(5.0, 48.0).unwrap(), 10);
    }
}
