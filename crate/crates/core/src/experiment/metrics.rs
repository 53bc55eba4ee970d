use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Averaged {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Classification metrics for one evaluated split.
///
/// `confusion[actual][predicted]` counts records; a class with no predicted
/// (or no actual) records gets precision (or recall) 0, and F is 0 when
/// precision and recall are both 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub count: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
    #[serde(rename = "macro")]
    pub macro_avg: Averaged,
    pub weighted: Averaged,
    pub confusion: Vec<Vec<usize>>,
}

impl MetricsReport {
    pub fn macro_f(&self) -> f64 {
        self.macro_avg.f1
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn compute_metrics(actual: &[usize], predicted: &[usize], classes: usize) -> Result<MetricsReport> {
    if actual.len() != predicted.len() {
        return Err(Error::dim("compute_metrics", actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(Error::Contract("cannot evaluate an empty split".into()));
    }
    if let Some(&c) = actual.iter().chain(predicted).find(|&&c| c >= classes) {
        return Err(Error::Contract(format!("class {c} outside 0..{classes}")));
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&a, &p) in actual.iter().zip(predicted) {
        confusion[a][p] += 1;
    }
    let n = actual.len();
    let per_class: Vec<ClassMetrics> = (0..classes)
        .map(|c| {
            let tp = confusion[c][c];
            let support: usize = confusion[c].iter().sum();
            let predicted_c: usize = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted_c);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics { precision, recall, f1, support }
        })
        .collect();
    let average = |weight: &dyn Fn(&ClassMetrics) -> f64| {
        let total: f64 = per_class.iter().map(weight).sum();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            if total == 0.0 {
                0.0
            } else {
                per_class.iter().map(|m| weight(m) * f(m)).sum::<f64>() / total
            }
        };
        Averaged {
            precision: mean(|m| m.precision),
            recall: mean(|m| m.recall),
            f1: mean(|m| m.f1),
        }
    };
    let macro_avg = average(&|_| 1.0);
    let weighted = average(&|m| m.support as f64);
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    Ok(MetricsReport {
        count: n,
        accuracy: ratio(correct, n),
        per_class,
        macro_avg,
        weighted,
        confusion,
    })
}

/// Middle value, averaging the two central values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { 0.5 * (v[mid - 1] + v[mid]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1, 0];
        let m = compute_metrics(&y, &y, 3).unwrap();
        for c in &m.per_class {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(m.macro_avg, Averaged { precision: 1.0, recall: 1.0, f1: 1.0 });
        assert_eq!(m.weighted, m.macro_avg);
        assert_eq!(m.accuracy, 1.0);
    }

    #[test]
    fn constant_prediction_on_balanced_binary() {
        let actual = [0, 0, 1, 1];
        let m = compute_metrics(&actual, &[1, 1, 1, 1], 2).unwrap();
        assert_eq!(m.per_class[0].f1, 0.0);
        assert!((m.per_class[1].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.macro_f() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.confusion, vec![vec![0, 2], vec![0, 2]]);
    }

    #[test]
    fn confusion_total_is_record_count() {
        let actual = [0, 1, 1, 2, 2, 2, 0];
        let predicted = [1, 1, 0, 2, 0, 2, 0];
        let m = compute_metrics(&actual, &predicted, 3).unwrap();
        assert_eq!(m.confusion.iter().flatten().sum::<usize>(), actual.len());
        assert_eq!(m.count, 7);
        for c in &m.per_class {
            assert!((0.0..=1.0).contains(&c.f1));
        }
    }

    #[test]
    fn reordering_does_not_change_metrics() {
        let actual = [0, 1, 1, 2, 2, 2, 0];
        let predicted = [1, 1, 0, 2, 0, 2, 0];
        let a = compute_metrics(&actual, &predicted, 3).unwrap();
        let order = [6, 2, 4, 0, 3, 5, 1];
        let ra: Vec<usize> = order.iter().map(|&i| actual[i]).collect();
        let rp: Vec<usize> = order.iter().map(|&i| predicted[i]).collect();
        assert_eq!(compute_metrics(&ra, &rp, 3).unwrap(), a);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
