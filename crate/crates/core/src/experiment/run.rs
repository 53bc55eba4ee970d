use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::{generate_synthetic, load_long_csv, load_physionet_dir, physionet_signal_names, read_cache, LongCsvSchema};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::experiment::config::{DataSource, ExperimentConfig};
use crate::experiment::metrics::MetricsReport;
use crate::experiment::train::{evaluate_model, train_model, TrainHistory};
use crate::fit::{partition_fast_slow, select_support_signals, Branch, FitModel, ModelKind, ModelSpec, SupportMap};
use crate::pipeline::{
    inject_missingness_raw, prepare_dataset, split_dataset, FitFeatures, PreparedDataset, RawRecord,
};

/// Raw cohort as loaded from the configured source.
#[derive(Clone, Debug)]
pub struct SourceData {
    pub signal_names: Vec<String>,
    pub records: Vec<RawRecord>,
    /// Set for cache sources, whose split and features are fixed.
    pub cached: Option<PreparedDataset>,
}

pub fn load_source(cfg: &ExperimentConfig, exec: Exec) -> Result<SourceData> {
    match cfg.data.source {
        DataSource::Synthetic => Ok(SourceData {
            signal_names: cfg.synthetic.signal_names(),
            records: generate_synthetic(&cfg.synthetic)?,
            cached: None,
        }),
        DataSource::Physionet => {
            let cohort = load_physionet_dir(&cfg.data_path()?, &cfg.labels_path()?, exec)?;
            for w in &cohort.warnings {
                log::warn!("{w}");
            }
            Ok(SourceData { signal_names: physionet_signal_names(), records: cohort.records, cached: None })
        }
        DataSource::LongCsv => {
            let (dp, lp) = (cfg.data_path()?, cfg.labels_path()?);
            let data = std::fs::read_to_string(&dp).map_err(|e| Error::io(&dp, e))?;
            let labels = std::fs::read_to_string(&lp).map_err(|e| Error::io(&lp, e))?;
            let ds = load_long_csv(&data, &labels, &LongCsvSchema { signals: cfg.data.signals.clone() })?;
            Ok(SourceData { signal_names: ds.signal_names, records: ds.records, cached: None })
        }
        DataSource::Cache => {
            let ds = read_cache(&cfg.data_path()?)?;
            let records = ds.records.iter().map(|r| r.fast.grid.to_raw(&r.id, r.label)).collect();
            Ok(SourceData { signal_names: ds.signal_names.clone(), records, cached: Some(ds) })
        }
    }
}

/// Prepared features for one seed: the split and the injected missingness
/// both derive from `seed`. Cache sources keep their stored split, and at
/// fraction 0 their stored features.
pub fn prepare_for_seed(cfg: &ExperimentConfig, source: &SourceData, seed: u64, missing: f64, exec: Exec) -> Result<PreparedDataset> {
    if let Some(ds) = &source.cached {
        if missing == 0.0 {
            return Ok(ds.clone());
        }
    }
    let raw: Vec<RawRecord> = if missing > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x6d15);
        source
            .records
            .iter()
            .map(|r| inject_missingness_raw(r, missing, &mut rng))
            .collect::<Result<_>>()?
    } else {
        source.records.clone()
    };
    let (split, grid) = match &source.cached {
        Some(ds) => (ds.split.clone(), ds.grid.clone()),
        None => {
            let ids: Vec<(String, usize)> = raw.iter().map(|r| (r.id.clone(), r.label)).collect();
            (split_dataset(&ids, cfg.training.split_ratios, seed)?, cfg.grid.clone())
        }
    };
    prepare_dataset(&raw, &source.signal_names, &grid, split, exec)
}

/// Builds an untrained model of `kind`, selecting supports and the branch
/// assignment from the training split.
pub fn build_model(cfg: &ExperimentConfig, kind: ModelKind, ds: &PreparedDataset, seed: u64) -> Result<FitModel> {
    let train = ds.train();
    let train_fast: Vec<&FitFeatures> = train.iter().map(|r| &r.fast).collect();
    let m = ds.num_signals();
    let assignment = if kind.is_multi_resolution() {
        let mut overrides: BTreeMap<usize, Branch> = BTreeMap::new();
        for (name, &branch) in &cfg.model.branch_overrides {
            let s = ds
                .signal_names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::Config(format!("branch override names unknown signal `{name}`")))?;
            overrides.insert(s, branch);
        }
        Some(partition_fast_slow(&train_fast, ds.grid.slow_factor, &overrides)?)
    } else {
        None
    };
    let supports = if kind.uses_supports() {
        let groups = assignment.as_ref().map(|a| a.groups());
        select_support_signals(&train_fast, cfg.model.support_k, groups.as_deref())?
    } else {
        SupportMap::empty(m)
    };
    FitModel::new(ModelSpec {
        kind,
        dims: cfg.model.dims(),
        signals: m,
        classes: ds.classes,
        supports,
        assignment,
        scaling: ds.scaling(),
        init_seed: seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub model: ModelKind,
    pub seed: u64,
    pub missing: f64,
    pub epochs_run: usize,
    pub history: TrainHistory,
    pub validation: MetricsReport,
    pub test: MetricsReport,
}

/// Trains and evaluates one model on one prepared dataset.
pub fn run_model(cfg: &ExperimentConfig, kind: ModelKind, ds: &PreparedDataset, seed: u64, missing: f64, exec: Exec) -> Result<(FitModel, RunResult)> {
    let mut model = build_model(cfg, kind, ds, seed)?;
    let (train, validation, test) = (ds.train(), ds.validation(), ds.test());
    if test.is_empty() {
        return Err(Error::Config("test split is empty".into()));
    }
    let history = train_model(
        &mut model,
        &train,
        &validation,
        &cfg.training.train_config(),
        &cfg.optimizer,
        seed,
        exec,
    )?;
    let result = RunResult {
        model: kind,
        seed,
        missing,
        epochs_run: history.epochs.len(),
        validation: evaluate_model(&model, &validation, exec)?,
        test: evaluate_model(&model, &test, exec)?,
        history,
    };
    log::info!(
        "{kind} seed {seed}: {} epochs, validation macro-F {:.4}, test macro-F {:.4}",
        result.epochs_run,
        result.validation.macro_f(),
        result.test.macro_f()
    );
    Ok((model, result))
}

/// `cfg.model.kind` over every configured seed.
pub fn run_experiment(cfg: &ExperimentConfig, source: &SourceData, exec: Exec) -> Result<Vec<(FitModel, RunResult)>> {
    cfg.training
        .seeds
        .iter()
        .map(|&seed| {
            let ds = prepare_for_seed(cfg, source, seed, cfg.training.missing, exec)?;
            run_model(cfg, cfg.model.kind, &ds, seed, cfg.training.missing, exec)
        })
        .collect()
}
