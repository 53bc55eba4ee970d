use crate::error::{Error, Result};
use crate::pipeline::{FitFeatures, Scaling};

/// The four per-cell quantities a memory cell consumes:
/// `[mean, last observed, observed flag, delta]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalVector {
    pub avg: f64,
    pub last: f64,
    pub flag: f64,
    pub delta: f64,
}

pub const SIGNAL_VECTOR_LEN: usize = 4;

impl SignalVector {
    pub fn to_array(self) -> [f64; SIGNAL_VECTOR_LEN] {
        [self.avg, self.last, self.flag, self.delta]
    }

    /// Model-space version: z-scored mean and last value, delta over horizon.
    pub fn scaled(self, signal: usize, scaling: &Scaling) -> [f64; SIGNAL_VECTOR_LEN] {
        [
            scaling.value(signal, self.avg),
            scaling.value(signal, self.last),
            self.flag,
            scaling.delta(self.delta),
        ]
    }
}

pub fn build_signal_vector(features: &FitFeatures, signal: usize, step: usize) -> Result<SignalVector> {
    if signal >= features.signals() || step >= features.steps() {
        return Err(Error::Contract(format!(
            "cell ({step}, {signal}) outside a {}x{} grid",
            features.steps(),
            features.signals()
        )));
    }
    Ok(SignalVector {
        avg: features.mean[signal],
        last: features.last(step, signal),
        flag: if features.observed(step, signal) { 1.0 } else { 0.0 },
        delta: features.delta(step, signal),
    })
}

/// Scaled signal vectors for every cell, laid out `[step][signal]`.
pub(crate) fn scaled_vectors(features: &FitFeatures, scaling: &Scaling) -> Vec<[f64; SIGNAL_VECTOR_LEN]> {
    let mut out = Vec::with_capacity(features.steps() * features.signals());
    for t in 0..features.steps() {
        for s in 0..features.signals() {
            let v = SignalVector {
                avg: features.mean[s],
                last: features.last(t, s),
                flag: if features.observed(t, s) { 1.0 } else { 0.0 },
                delta: features.delta(t, s),
            };
            out.push(v.scaled(s, scaling));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{build_fit_features, GriddedRecord};

    #[test]
    fn vectors_follow_the_feature_tensors() {
        // signal 0 observed at step 0 only; signal 1 never observed
        let g = GriddedRecord {
            step: 1.0,
            steps: 3,
            signals: 2,
            values: vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            mask: vec![true, false, false, false, false, false],
        };
        let f = build_fit_features(&g, &[1.5, 1.5]).unwrap();
        let v = |s, t| build_signal_vector(&f, s, t).unwrap().to_array();
        assert_eq!(v(0, 0), [1.5, 2.0, 1.0, 0.0]);
        assert_eq!(v(0, 1), [1.5, 2.0, 0.0, 1.0]);
        assert_eq!(v(1, 2), [1.5, 1.5, 0.0, 2.0]);
        assert!(build_signal_vector(&f, 2, 0).is_err());
        assert!(build_signal_vector(&f, 0, 3).is_err());
    }
}
