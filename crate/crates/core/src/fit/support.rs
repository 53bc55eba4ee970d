use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{pearson_corr, FitFeatures};

/// For each signal, the ordered indices of its support signals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportMap(pub Vec<Vec<usize>>);

impl SupportMap {
    pub fn empty(signals: usize) -> Self {
        SupportMap(vec![Vec::new(); signals])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn of(&self, signal: usize) -> &[usize] {
        &self.0[signal]
    }

    pub fn is_all_empty(&self) -> bool {
        self.0.iter().all(Vec::is_empty)
    }

    pub fn validate(&self, signals: usize) -> Result<()> {
        if self.0.len() != signals {
            return Err(Error::Config(format!(
                "support map covers {} signals, model has {signals}",
                self.0.len()
            )));
        }
        for (s, list) in self.0.iter().enumerate() {
            for (k, &j) in list.iter().enumerate() {
                if j >= signals || j == s || list[..k].contains(&j) {
                    return Err(Error::Config(format!("invalid support {j} for signal {s}")));
                }
            }
        }
        Ok(())
    }
}

/// Pairwise-complete Pearson correlation pooled over every training record
/// and grid step. Entries are `None` when fewer than two joint observations
/// exist or a side is constant.
pub fn correlation_matrix(train: &[&FitFeatures]) -> Vec<Vec<Option<f64>>> {
    let m = train.first().map_or(0, |f| f.signals());
    let mut out = vec![vec![None; m]; m];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..m {
        out[i][i] = Some(1.0);
        for j in i + 1..m {
            xs.clear();
            ys.clear();
            for f in train {
                for t in 0..f.steps() {
                    if f.observed(t, i) && f.observed(t, j) {
                        xs.push(f.value(t, i));
                        ys.push(f.value(t, j));
                    }
                }
            }
            let joint = vec![true; xs.len()];
            let r = pearson_corr(&xs, &ys, &joint);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}

/// Picks, for each signal, the `k` other signals with the largest absolute
/// correlation (undefined correlations count as 0, ties go to the lower
/// index). With `groups`, candidates are restricted to the signal's own
/// group and `k` is capped at the group size minus one.
pub fn select_support_signals(
    train: &[&FitFeatures],
    k: usize,
    groups: Option<&[Vec<usize>]>,
) -> Result<SupportMap> {
    let first = train
        .first()
        .ok_or_else(|| Error::Config("support selection needs training records".into()))?;
    let m = first.signals();
    if k >= m {
        return Err(Error::Config(format!("support count k = {k} must be below the signal count {m}")));
    }
    if k == 0 {
        return Ok(SupportMap::empty(m));
    }
    let corr = correlation_matrix(train);
    let all: Vec<usize> = (0..m).collect();
    let mut map = vec![Vec::new(); m];
    for (s, entry) in map.iter_mut().enumerate() {
        let pool: &[usize] = match groups {
            Some(gs) => gs
                .iter()
                .find(|g| g.contains(&s))
                .map(Vec::as_slice)
                .ok_or_else(|| Error::Config(format!("signal {s} belongs to no support group")))?,
            None => &all,
        };
        let mut cands: Vec<(f64, usize)> = pool
            .iter()
            .filter(|&&j| j != s)
            .map(|&j| (corr[s][j].map_or(0.0, f64::abs), j))
            .collect();
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        *entry = cands.into_iter().take(k).map(|(_, j)| j).collect();
    }
    Ok(SupportMap(map))
}
