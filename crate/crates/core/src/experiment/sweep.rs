use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::experiment::config::ExperimentConfig;
use crate::experiment::metrics::median;
use crate::experiment::run::{prepare_for_seed, run_model, SourceData};
use crate::fit::ModelKind;

/// One CSV row: a (model, fraction, seed) cell, or with `seed` empty the
/// median over the successful seeds of that (model, fraction).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub fraction: f64,
    pub seed: Option<u64>,
    pub row: String,
    pub test_macro_f: Option<f64>,
    pub test_weighted_f: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn median_of(&self, model: ModelKind, fraction: f64) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.model == model && r.fraction == fraction && r.seed.is_none())
            .and_then(|r| r.test_macro_f)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Contract(format!("csv serialization: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Contract(format!("csv flush: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Contract(e.to_string()))
    }
}

/// Trains every model at every missingness fraction with every seed.
///
/// Each fraction is injected into a pristine copy of the source. A failed
/// cell is recorded with its error and the sweep continues. Models within a
/// (fraction, seed) run through `exec`.
pub fn missingness_sweep(
    cfg: &ExperimentConfig,
    source: &SourceData,
    fractions: &[f64],
    models: &[ModelKind],
    exec: Exec,
) -> Result<SweepTable> {
    if fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || fractions.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config("sweep fractions must lie in [0, 1] and be sorted ascending".into()));
    }
    let mut cells: Vec<SweepRow> = Vec::new();
    for &fraction in fractions {
        for &seed in &cfg.training.seeds {
            let prepared = prepare_for_seed(cfg, source, seed, fraction, exec);
            let rows = exec.map(models, |&model| {
                let outcome = prepared
                    .as_ref()
                    .map_err(|e| e.to_string())
                    .and_then(|ds| run_model(cfg, model, ds, seed, fraction, exec).map_err(|e| e.to_string()));
                match outcome {
                    Ok((_, res)) => SweepRow {
                        model,
                        fraction,
                        seed: Some(seed),
                        row: "seed".into(),
                        test_macro_f: Some(res.test.macro_f()),
                        test_weighted_f: Some(res.test.weighted.f1),
                        status: "ok".into(),
                    },
                    Err(msg) => {
                        log::warn!("sweep cell {model} fraction {fraction} seed {seed} failed: {msg}");
                        SweepRow {
                            model,
                            fraction,
                            seed: Some(seed),
                            row: "seed".into(),
                            test_macro_f: None,
                            test_weighted_f: None,
                            status: format!("failed: {msg}"),
                        }
                    }
                }
            });
            cells.extend(rows);
        }
    }
    let mut rows = Vec::with_capacity(cells.len() + models.len() * fractions.len());
    for &model in models {
        for &fraction in fractions {
            let group: Vec<&SweepRow> = cells.iter().filter(|r| r.model == model && r.fraction == fraction).collect();
            let ok: Vec<&SweepRow> = group.iter().copied().filter(|r| r.test_macro_f.is_some()).collect();
            let macro_f: Vec<f64> = ok.iter().filter_map(|r| r.test_macro_f).collect();
            let weighted_f: Vec<f64> = ok.iter().filter_map(|r| r.test_weighted_f).collect();
            rows.extend(group.iter().map(|r| (*r).clone()));
            rows.push(SweepRow {
                model,
                fraction,
                seed: None,
                row: "median".into(),
                test_macro_f: median(&macro_f),
                test_weighted_f: median(&weighted_f),
                status: format!("{}/{} seeds ok", ok.len(), group.len()),
            });
        }
    }
    Ok(SweepTable { rows })
}
