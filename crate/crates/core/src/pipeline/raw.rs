use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub value: f64,
}

impl Observation {
    pub fn new(time: f64, value: f64) -> Self {
        Observation { time, value }
    }
}

/// Irregular observations of `M` signals for one subject, with a class label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub label: usize,
    /// One list per signal, each sorted by time. Lists may be empty.
    pub signals: Vec<Vec<Observation>>,
}

impl RawRecord {
    pub fn new(id: impl Into<String>, label: usize, signals: Vec<Vec<Observation>>) -> Result<Self> {
        let rec = RawRecord { id: id.into(), label, signals };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        for (s, obs) in self.signals.iter().enumerate() {
            if obs.iter().any(|o| !o.time.is_finite() || !o.value.is_finite()) {
                return Err(Error::Domain(format!("record {}: non-finite observation in signal {s}", self.id)));
            }
            if obs.windows(2).any(|w| w[1].time < w[0].time) {
                return Err(Error::Domain(format!("record {}: signal {s} timestamps decrease", self.id)));
            }
        }
        Ok(())
    }

    pub fn num_signals(&self) -> usize {
        self.signals.len()
    }

    pub fn observation_count(&self) -> usize {
        self.signals.iter().map(Vec::len).sum()
    }
}
