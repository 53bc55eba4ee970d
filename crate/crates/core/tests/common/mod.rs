#![allow(dead_code)]

use multifit::datasets::SyntheticConfig;
use multifit::exec::Exec;
use multifit::experiment::{build_model, load_source, prepare_for_seed, ExperimentConfig};
use multifit::fit::{FitModel, ModelKind};
use multifit::pipeline::PreparedDataset;

/// 6 fast steps and 3 slow steps over 4 signals, two of them sampled every
/// third step.
pub fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.synthetic = SyntheticConfig {
        signals: 4,
        periods: vec![1.0, 1.0, 3.0, 3.0],
        records: 12,
        horizon: 6.0,
        missing: 0.3,
        seed: 11,
        ..Default::default()
    };
    cfg.grid.horizon = 6.0;
    cfg.grid.slow_factor = 2;
    cfg.model.hidden = 5;
    cfg.model.repr = 3;
    cfg.model.head_hidden = 4;
    cfg.model.support_k = 1;
    cfg
}

pub fn tiny_dataset(cfg: &ExperimentConfig) -> PreparedDataset {
    let source = load_source(cfg, Exec::Sequential).unwrap();
    prepare_for_seed(cfg, &source, 0, 0.0, Exec::Sequential).unwrap()
}

pub fn tiny_model(kind: ModelKind, seed: u64) -> (FitModel, PreparedDataset) {
    let cfg = tiny_config();
    let ds = tiny_dataset(&cfg);
    (build_model(&cfg, kind, &ds, seed).unwrap(), ds)
}

/// Quadratic reference for delta and last-observed: every cell rescans
/// backwards for the most recent observation.
pub fn rescan_oracle(grid: &multifit::pipeline::GriddedRecord, means: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.steps * grid.signals;
    let (mut delta, mut last) = (vec![0.0; n], vec![0.0; n]);
    for s in 0..grid.signals {
        for t in 0..grid.steps {
            let i = grid.index(t, s);
            let prev = (0..=t).rev().find(|&u| grid.observed(u, s));
            match prev {
                Some(u) => {
                    delta[i] = (t - u) as f64 * grid.step;
                    last[i] = grid.value(u, s);
                }
                None => {
                    delta[i] = t as f64 * grid.step;
                    last[i] = means[s];
                }
            }
        }
    }
    (delta, last)
}
