//! BiLSTM with attention over mean-imputed values (the BA-mean baseline).

use rand::Rng;

use crate::compute::{ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::pipeline::{FitFeatures, NormalizationStats, Scaling};
use crate::sequence::{Attention, BiLstm, ClassifierHead};

/// Observed values where the mask is set, the training mean elsewhere.
/// Returned per step, in raw units.
pub fn mean_impute(features: &FitFeatures, stats: &NormalizationStats) -> Result<Vec<Vec<f64>>> {
    if stats.signals() < features.signals() {
        return Err(Error::Config(format!(
            "normalization covers {} signals, features have {}",
            stats.signals(),
            features.signals()
        )));
    }
    Ok((0..features.steps())
        .map(|t| {
            (0..features.signals())
                .map(|s| {
                    if features.observed(t, s) {
                        features.value(t, s)
                    } else {
                        stats.mean[s]
                    }
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug)]
pub struct BaMeanNet {
    pub bilstm: BiLstm,
    pub attention: Attention,
    pub head: ClassifierHead,
}

impl BaMeanNet {
    pub fn new<R: Rng>(
        params: &mut ParamSet,
        signals: usize,
        hidden: usize,
        head_hidden: usize,
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let bilstm = BiLstm::new(params, "ba.bilstm", signals, hidden, rng)?;
        let attention = Attention::new(params, "ba.attention", 2 * hidden, rng)?;
        let head = ClassifierHead::new(params, "head", 2 * hidden, head_hidden, classes, rng)?;
        Ok(BaMeanNet { bilstm, attention, head })
    }

    /// Class logits; the imputed series is z-scored before entering the LSTM.
    pub fn logits(&self, tape: &mut Tape<'_>, features: &FitFeatures, scaling: &Scaling) -> Result<Var> {
        let series = mean_impute(features, &scaling.stats)?;
        let xs = series
            .iter()
            .map(|row| {
                let z: Vec<f64> = row.iter().enumerate().map(|(s, &v)| scaling.value(s, v)).collect();
                tape.input(&z)
            })
            .collect::<Result<Vec<_>>>()?;
        let hs = self.bilstm.forward(tape, &xs)?;
        let (_, context) = self.attention.forward(tape, &hs)?;
        self.head.logits(tape, context)
    }
}
