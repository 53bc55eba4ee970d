use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::FitFeatures;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Fast,
    Slow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchAssignment {
    pub branches: Vec<Branch>,
    pub fast_step: f64,
    pub slow_step: f64,
    /// Mean over training records of `Σ_t δ_t / duration`.
    pub scores: Vec<f64>,
}

impl BranchAssignment {
    pub fn members(&self, branch: Branch) -> Vec<usize> {
        self.branches
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == branch)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        vec![self.members(Branch::Fast), self.members(Branch::Slow)]
    }
}

/// Per-signal sparsity score: larger means the signal is observed less often.
pub fn sparsity_scores(train: &[&FitFeatures]) -> Result<Vec<f64>> {
    let first = train
        .first()
        .ok_or_else(|| Error::Config("partitioning needs training records".into()))?;
    let m = first.signals();
    let mut scores = vec![0.0; m];
    for f in train {
        let duration = f.grid.duration();
        for (s, score) in scores.iter_mut().enumerate() {
            let total: f64 = (0..f.steps()).map(|t| f.delta(t, s)).sum();
            *score += total / duration;
        }
    }
    let n = train.len() as f64;
    Ok(scores.into_iter().map(|s| s / n).collect())
}

/// Splits signals at the largest gap between adjacent sorted sparsity
/// scores: below the gap is fast, above is slow. Overrides are applied last.
pub fn partition_fast_slow(
    train: &[&FitFeatures],
    slow_factor: usize,
    overrides: &BTreeMap<usize, Branch>,
) -> Result<BranchAssignment> {
    let scores = sparsity_scores(train)?;
    let m = scores.len();
    if m < 2 {
        return Err(Error::Config("fast/slow partitioning needs at least 2 signals".into()));
    }
    if let Some((&s, _)) = overrides.iter().find(|(&s, _)| s >= m) {
        return Err(Error::Config(format!("branch override for unknown signal {s}")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let (cut, gap) = order
        .windows(2)
        .enumerate()
        .map(|(k, w)| (k + 1, scores[w[1]] - scores[w[0]]))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });

    let mut branches = vec![Branch::Fast; m];
    if gap > 0.0 {
        for &s in &order[cut..] {
            branches[s] = Branch::Slow;
        }
    } else if overrides.len() < m {
        return Err(Error::Config(
            "all sparsity scores are identical; assign branches manually".into(),
        ));
    }
    for (&s, &b) in overrides {
        branches[s] = b;
    }
    let fast_step = train[0].step();
    Ok(BranchAssignment {
        branches,
        fast_step,
        slow_step: fast_step * slow_factor as f64,
        scores,
    })
}
