use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compute::{OptimizerConfig, OptimizerState, Tape};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::experiment::metrics::{compute_metrics, MetricsReport};
use crate::fit::FitModel;
use crate::pipeline::PreparedRecord;
use crate::sequence::argmax;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; 0 stops after
    /// the first epoch.
    pub patience: usize,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 300, patience: 15, batch_size: 32 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub validation_macro_f: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_validation_macro_f: f64,
}

/// Per-record class probabilities, in input order.
pub fn predict(model: &FitModel, records: &[&PreparedRecord], exec: Exec) -> Result<Vec<Vec<f64>>> {
    exec.map(records, |r| model.predict_proba(&r.fast, &r.slow))
        .into_iter()
        .collect()
}

pub fn evaluate_model(model: &FitModel, records: &[&PreparedRecord], exec: Exec) -> Result<MetricsReport> {
    let probs = predict(model, records, exec)?;
    let predicted: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let actual: Vec<usize> = records.iter().map(|r| r.label).collect();
    compute_metrics(&actual, &predicted, model.spec.classes)
}

fn diverged(epoch: usize, e: Error) -> Error {
    match e {
        Error::Numeric { .. } => Error::Divergence { epoch, message: e.to_string() },
        other => other,
    }
}

/// Mean loss and metrics on `records` without touching gradients.
fn validation_pass(model: &FitModel, records: &[&PreparedRecord], exec: Exec) -> Result<(f64, MetricsReport)> {
    let out: Vec<(f64, usize)> = exec
        .map(records, |r| -> Result<(f64, usize)> {
            let mut tape = Tape::new(&model.params);
            let z = model.logits(&mut tape, &r.fast, &r.slow)?;
            let pred = argmax(tape.value(z));
            let loss = tape.cross_entropy(z, r.label)?;
            Ok((tape.scalar(loss)?, pred))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let loss = out.iter().map(|o| o.0).sum::<f64>() / out.len() as f64;
    let predicted: Vec<usize> = out.iter().map(|o| o.1).collect();
    let actual: Vec<usize> = records.iter().map(|r| r.label).collect();
    Ok((loss, compute_metrics(&actual, &predicted, model.spec.classes)?))
}

/// Mini-batch training with validation-based early stopping.
///
/// Per-record gradients inside a batch are computed through `exec` and
/// summed in record order, so sequential and parallel runs agree bitwise.
/// The parameters with the best validation macro-F (ties broken by lower
/// validation loss) are restored before returning.
pub fn train_model(
    model: &mut FitModel,
    train: &[&PreparedRecord],
    validation: &[&PreparedRecord],
    cfg: &TrainConfig,
    optimizer: &OptimizerConfig,
    seed: u64,
    exec: Exec,
) -> Result<TrainHistory> {
    cfg.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Config("training needs nonempty train and validation splits".into()));
    }
    let mut opt = OptimizerState::new(optimizer.clone(), &model.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5f3c_0a1e_9b27_d461);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, f64, Vec<crate::compute::NamedTensor>)> = None;
    let mut since_best = 0usize;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let model_ref: &FitModel = model;
            let results = exec.map(batch, |&i| -> Result<_> {
                let r = train[i];
                let mut tape = Tape::new(&model_ref.params);
                let loss = model_ref.loss(&mut tape, &r.fast, &r.slow, r.label)?;
                let value = tape.scalar(loss)?;
                Ok((value, tape.backward(loss)?))
            });
            let mut total = model.params.zero_gradients();
            for res in results {
                let (value, grads) = res.map_err(|e| diverged(epoch, e))?;
                if !value.is_finite() {
                    return Err(Error::Divergence { epoch, message: format!("training loss is {value}") });
                }
                loss_sum += value;
                total.add_assign(&grads);
            }
            model.params.zero_grad();
            model.params.accumulate(&total, 1.0 / batch.len() as f64)?;
            opt.step(&mut model.params).map_err(|e| diverged(epoch, e))?;
        }
        let train_loss = loss_sum / train.len() as f64;
        let (validation_loss, report) = validation_pass(model, validation, exec).map_err(|e| diverged(epoch, e))?;
        if !validation_loss.is_finite() {
            return Err(Error::Divergence { epoch, message: format!("validation loss is {validation_loss}") });
        }
        let f = report.macro_f();
        history.epochs.push(EpochRecord { epoch, train_loss, validation_loss, validation_macro_f: f });
        log::debug!("epoch {epoch}: train loss {train_loss:.4}, validation loss {validation_loss:.4}, macro-F {f:.4}");

        let improved = match &best {
            None => true,
            Some((bf, bl, _)) => f > *bf || (f == *bf && validation_loss < *bl),
        };
        if improved {
            best = Some((f, validation_loss, model.params.snapshot()));
            history.best_epoch = epoch;
            history.best_validation_macro_f = f;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if since_best >= cfg.patience {
            break;
        }
    }
    if let Some((_, _, snapshot)) = best {
        model.params.load_snapshot(&snapshot)?;
    }
    Ok(history)
}
