use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train/validation/test partition of record ids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
    pub ratios: [f64; 3],
}

pub const RATIOS_64_16_20: [f64; 3] = [0.64, 0.16, 0.20];
pub const RATIOS_80_10_10: [f64; 3] = [0.80, 0.10, 0.10];

/// Stratified, seeded split. Each class is shuffled independently and cut
/// into contiguous train/validation/test runs of `round(ratio · n)` records
/// (test takes the remainder). Output lists follow cohort order.
pub fn split_dataset(records: &[(String, usize)], ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    if ratios.iter().any(|&r| !(r > 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must be positive and sum to 1, got {ratios:?}")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, (_, label)) in records.iter().enumerate() {
        by_class.entry(*label).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut part = vec![0u8; records.len()];
    for (label, mut members) in by_class {
        let n = members.len();
        if n < ratios.len() {
            return Err(Error::Config(format!(
                "class {label} has {n} records, fewer than the {} split parts",
                ratios.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_train = (ratios[0] * n as f64).round() as usize;
        let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
        for (k, idx) in members.into_iter().enumerate() {
            part[idx] = if k < n_train {
                0
            } else if k < n_train + n_val {
                1
            } else {
                2
            };
        }
    }
    let pick = |which: u8| -> Vec<String> {
        records
            .iter()
            .zip(&part)
            .filter(|(_, &p)| p == which)
            .map(|((id, _), _)| id.clone())
            .collect()
    };
    Ok(DatasetSplit {
        train: pick(0),
        validation: pick(1),
        test: pick(2),
        seed,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn cohort(n: usize, classes: usize) -> Vec<(String, usize)> {
        (0..n).map(|i| (format!("r{i}"), i % classes)).collect()
    }

    #[test]
    fn balanced_binary_counts() {
        let recs = cohort(100, 2);
        let s = split_dataset(&recs, RATIOS_64_16_20, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (64, 16, 20));
        let label = |id: &String| recs.iter().find(|(r, _)| r == id).unwrap().1;
        let ones = s.train.iter().filter(|id| label(id) == 1).count();
        assert!((31..=33).contains(&ones));
    }

    #[test]
    fn partition_and_determinism() {
        let recs = cohort(37, 3);
        let a = split_dataset(&recs, RATIOS_80_10_10, 1).unwrap();
        let b = split_dataset(&recs, RATIOS_80_10_10, 1).unwrap();
        let c = split_dataset(&recs, RATIOS_80_10_10, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train, c.train);
        let all: HashSet<&String> = a.train.iter().chain(&a.validation).chain(&a.test).collect();
        assert_eq!(all.len(), 37);
        assert_eq!(a.train.len() + a.validation.len() + a.test.len(), 37);
    }

    #[test]
    fn tiny_class_is_rejected() {
        let mut recs = cohort(20, 2);
        recs.push(("odd".into(), 2));
        assert!(matches!(split_dataset(&recs, RATIOS_64_16_20, 0), Err(Error::Config(_))));
        assert!(split_dataset(&cohort(20, 2), [0.5, 0.5, 0.0], 0).is_err());
    }
}
