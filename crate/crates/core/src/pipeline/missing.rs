use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::pipeline::{GriddedRecord, RawRecord};

fn removal_count(p: f64, n: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("missingness fraction must lie in [0, 1], got {p}")));
    }
    Ok(((p * n as f64).round() as usize).min(n))
}

/// Removes exactly `round(p · n_obs)` observations from every signal,
/// chosen uniformly without replacement.
pub fn inject_missingness_raw<R: Rng>(raw: &RawRecord, p: f64, rng: &mut R) -> Result<RawRecord> {
    let mut out = raw.clone();
    for obs in &mut out.signals {
        let k = removal_count(p, obs.len())?;
        if k == 0 {
            continue;
        }
        let mut drop = vec![false; obs.len()];
        for i in sample(rng, obs.len(), k) {
            drop[i] = true;
        }
        let mut i = 0;
        obs.retain(|_| {
            let keep = !drop[i];
            i += 1;
            keep
        });
    }
    Ok(out)
}

/// Grid-level variant: flips `round(p · n_obs)` observed cells per signal to
/// unobserved. Features must be rebuilt from the result.
pub fn inject_missingness_grid<R: Rng>(grid: &GriddedRecord, p: f64, rng: &mut R) -> Result<GriddedRecord> {
    let mut out = grid.clone();
    for s in 0..grid.signals {
        let observed: Vec<usize> = (0..grid.steps).filter(|&t| grid.observed(t, s)).collect();
        let k = removal_count(p, observed.len())?;
        for i in sample(rng, observed.len(), k) {
            let cell = out.index(observed[i], s);
            out.mask[cell] = false;
            out.values[cell] = 0.0;
        }
    }
    Ok(out)
}
