use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::GriddedRecord;

pub const MIN_STD: f64 = 1e-12;

/// Per-signal mean and population standard deviation over observed training
/// entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    pub fn signals(&self) -> usize {
        self.mean.len()
    }

    #[inline]
    pub fn z(&self, signal: usize, x: f64) -> f64 {
        (x - self.mean[signal]) / self.std[signal]
    }
}

/// Accumulates statistics from training grids only. Signals never observed
/// get mean 0 and std 1 with a warning.
pub fn compute_normalization<'a, I>(train: I) -> Result<NormalizationStats>
where
    I: IntoIterator<Item = &'a GriddedRecord>,
{
    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut grids = Vec::new();
    for g in train {
        if sums.is_empty() {
            sums = vec![0.0; g.signals];
            counts = vec![0; g.signals];
        } else if g.signals != sums.len() {
            return Err(Error::dim("compute_normalization", sums.len(), g.signals));
        }
        for (i, (&v, &m)) in g.values.iter().zip(&g.mask).enumerate() {
            if m {
                sums[i % g.signals] += v;
                counts[i % g.signals] += 1;
            }
        }
        grids.push(g);
    }
    if grids.is_empty() {
        return Err(Error::Config("normalization needs a nonempty training set".into()));
    }
    let mean: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
        .collect();
    let mut sq = vec![0.0; mean.len()];
    for g in &grids {
        for (i, (&v, &m)) in g.values.iter().zip(&g.mask).enumerate() {
            if m {
                let d = v - mean[i % g.signals];
                sq[i % g.signals] += d * d;
            }
        }
    }
    let std = sq
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(s, (&q, &n))| {
            if n == 0 {
                warn!("signal {s} has no observed training entries; using mean 0, std 1");
                return 1.0;
            }
            let sd = (q / n as f64).sqrt();
            if sd < MIN_STD {
                1.0
            } else {
                sd
            }
        })
        .collect();
    Ok(NormalizationStats { mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: Vec<f64>, mask: Vec<bool>, signals: usize) -> GriddedRecord {
        GriddedRecord { step: 1.0, steps: values.len() / signals, signals, values, mask }
    }

    #[test]
    fn direct_formula() {
        let g = grid(vec![1.0, 99.0, 3.0], vec![true, false, true], 1);
        let st = compute_normalization([&g]).unwrap();
        assert_eq!(st.mean, vec![2.0]);
        assert_eq!(st.std, vec![1.0]);
    }

    #[test]
    fn degenerate_and_unobserved_signals() {
        let a = grid(vec![4.0, 0.0, 4.0, 0.0], vec![true, false, true, false], 2);
        let b = grid(vec![4.0, 0.0], vec![true, false], 2);
        let st = compute_normalization([&a, &b]).unwrap();
        assert_eq!(st.mean, vec![4.0, 0.0]);
        assert_eq!(st.std, vec![1.0, 1.0]);
        assert!(compute_normalization(std::iter::empty()).is_err());
    }
}
