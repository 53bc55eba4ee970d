use serde::{Deserialize, Serialize};

use crate::compute::ParamSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global-norm clipping threshold; 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Adam,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
        }
    }
}

impl OptimizerConfig {
    pub fn sgd(learning_rate: f64) -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate,
            clip_norm: 0.0,
            ..Self::default()
        }
    }

    pub fn adam(learning_rate: f64) -> Self {
        OptimizerConfig {
            learning_rate,
            clip_norm: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) || !(self.clip_norm >= 0.0) {
            return Err(Error::Config("epsilon must be positive and clip_norm non-negative".into()));
        }
        Ok(())
    }
}

/// Moment accumulators and step counter for one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct OptimizerState {
    config: OptimizerConfig,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    pub fn new(config: OptimizerConfig, params: &ParamSet) -> Result<Self> {
        config.validate()?;
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
        Ok(OptimizerState {
            config,
            second: zeros.clone(),
            first: zeros,
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    /// Applies the accumulated gradients, then zeroes them. Returns the
    /// pre-clipping global gradient norm.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<f64> {
        if self.first.len() != params.len() {
            return Err(Error::Contract("optimizer state belongs to a different parameter set".into()));
        }
        let norm = params
            .iter()
            .flat_map(|p| p.grad.data())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt();
        if !norm.is_finite() {
            return Err(Error::Numeric { node: 0, op: "gradient norm" });
        }
        let clip = if self.config.clip_norm > 0.0 && norm > self.config.clip_norm {
            self.config.clip_norm / norm
        } else {
            1.0
        };
        self.step += 1;
        let cfg = &self.config;
        let lr = cfg.learning_rate;
        let t = self.step as i32;
        let bias1 = 1.0 - cfg.beta1.powi(t);
        let bias2 = 1.0 - cfg.beta2.powi(t);
        for (k, p) in params.iter_mut().enumerate() {
            let grad = p.grad.data().to_vec();
            let value = p.value.data_mut();
            match cfg.kind {
                OptimizerKind::Sgd => {
                    for (w, g) in value.iter_mut().zip(&grad) {
                        *w -= lr * clip * g;
                    }
                }
                OptimizerKind::Adam => {
                    let (m, v) = (&mut self.first[k], &mut self.second[k]);
                    for i in 0..value.len() {
                        let g = clip * grad[i];
                        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
                        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
                        let m_hat = m[i] / bias1;
                        let v_hat = v[i] / bias2;
                        value[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
                    }
                }
            }
        }
        params.zero_grad();
        Ok(norm)
    }
}
