//! Seeded generator of labelled multi-resolution records.
//!
//! Every record draws a latent process per signal: a random per-record
//! offset, a slow background oscillation and, for informative signals, a
//! class-dependent component chosen by the labelling rule. Partner signals
//! in a correlated pair mix the source latent in at strength `rho`. Each
//! signal is sampled on its own period and observations are then dropped
//! independently with probability `missing`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{Observation, RawRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticRule {
    /// Class sets the sign and size of a linear trend.
    Trend,
    /// Class sets the oscillation frequency.
    Frequency,
    /// Class sets a constant level shift.
    Level,
}

impl SyntheticRule {
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "trend" => Ok(SyntheticRule::Trend),
            "frequency" => Ok(SyntheticRule::Frequency),
            "level" => Ok(SyntheticRule::Level),
            other => Err(Error::Config(format!(
                "unknown synthetic rule `{other}` (expected trend, frequency or level)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub signals: usize,
    /// Sampling period per signal; a single entry applies to all signals.
    pub periods: Vec<f64>,
    /// `[source, partner]` pairs; the partner shares the source latent.
    pub correlated: Vec<[usize; 2]>,
    pub rho: f64,
    pub classes: usize,
    pub rule: String,
    /// Signals carrying the class-dependent component.
    pub informative: Vec<usize>,
    pub class_strength: f64,
    pub offset_sd: f64,
    pub background_amp: f64,
    pub noise: f64,
    /// Uniform timestamp jitter as a fraction of the period.
    pub jitter: f64,
    pub missing: f64,
    pub records: usize,
    pub horizon: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            signals: 6,
            periods: vec![1.0],
            correlated: Vec::new(),
            rho: 0.0,
            classes: 2,
            rule: "trend".into(),
            informative: vec![0, 1],
            class_strength: 1.0,
            offset_sd: 1.0,
            background_amp: 0.5,
            noise: 0.3,
            jitter: 0.0,
            missing: 0.6,
            records: 400,
            horizon: 48.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<SyntheticRule> {
        let rule = SyntheticRule::from_id(&self.rule)?;
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.signals == 0 || self.records == 0 {
            return cfg_err("synthetic data needs at least one signal and one record".into());
        }
        if self.classes < 2 {
            return cfg_err(format!("need at least 2 classes, got {}", self.classes));
        }
        if !(0.0..=1.0).contains(&self.missing) {
            return cfg_err(format!("missing fraction {} outside [0, 1]", self.missing));
        }
        if !(self.rho.abs() <= 1.0) {
            return cfg_err(format!("|rho| = {} exceeds 1", self.rho.abs()));
        }
        if self.periods.is_empty() || (self.periods.len() != 1 && self.periods.len() != self.signals) {
            return cfg_err(format!("periods must have 1 or {} entries", self.signals));
        }
        if self.periods.iter().any(|&p| !(p > 0.0)) {
            return cfg_err("sampling periods must be positive".into());
        }
        if !(self.horizon > 0.0) || !(self.noise >= 0.0) || !(0.0..1.0).contains(&self.jitter) {
            return cfg_err("horizon must be positive, noise non-negative and jitter in [0, 1)".into());
        }
        let in_range = |s: &usize| *s < self.signals;
        if !self.informative.iter().all(in_range) || !self.correlated.iter().flatten().all(in_range) {
            return cfg_err("signal index out of range in informative/correlated".into());
        }
        if self.correlated.iter().any(|[a, b]| a == b) {
            return cfg_err("a signal cannot be correlated with itself".into());
        }
        Ok(rule)
    }

    pub fn period(&self, signal: usize) -> f64 {
        if self.periods.len() == 1 {
            self.periods[0]
        } else {
            self.periods[signal]
        }
    }

    pub fn signal_names(&self) -> Vec<String> {
        (0..self.signals).map(|s| format!("s{s}")).collect()
    }
}

struct Latent {
    offset: f64,
    bg_phase: f64,
    bg_period: f64,
    class_phase: f64,
}

fn class_position(label: usize, classes: usize) -> f64 {
    2.0 * label as f64 / (classes - 1) as f64 - 1.0
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Vec<RawRecord>> {
    let rule = cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let white = Normal::new(0.0, 1.0).expect("unit normal");
    let mix = (1.0 - cfg.rho * cfg.rho).max(0.0).sqrt();
    let mut records = Vec::with_capacity(cfg.records);

    for r in 0..cfg.records {
        let label = r % cfg.classes;
        let pos = class_position(label, cfg.classes);
        let latents: Vec<Latent> = (0..cfg.signals)
            .map(|_| Latent {
                offset: cfg.offset_sd * white.sample(&mut rng),
                bg_phase: rng.random_range(0.0..2.0 * PI),
                bg_period: cfg.horizon * rng.random_range(0.5..2.0),
                class_phase: rng.random_range(0.0..2.0 * PI),
            })
            .collect();
        let own = |s: usize, t: f64| -> f64 {
            let l = &latents[s];
            let mut v = l.offset + cfg.background_amp * (2.0 * PI * t / l.bg_period + l.bg_phase).sin();
            if cfg.informative.contains(&s) {
                let u = t / cfg.horizon;
                v += cfg.class_strength
                    * match rule {
                        SyntheticRule::Trend => pos * (2.0 * u - 1.0),
                        SyntheticRule::Frequency => {
                            (2.0 * PI * (1.0 + label as f64) * u + l.class_phase).sin()
                        }
                        SyntheticRule::Level => pos,
                    };
            }
            v
        };
        let latent = |s: usize, t: f64| -> f64 {
            let mut v = own(s, t);
            // pairs apply in order, so chains mix the already-mixed source
            for &[src, dst] in &cfg.correlated {
                if dst == s {
                    v = cfg.rho * own(src, t) + mix * v;
                }
            }
            v
        };

        let mut signals = Vec::with_capacity(cfg.signals);
        for s in 0..cfg.signals {
            let period = cfg.period(s);
            let mut obs = Vec::new();
            let mut k = 0usize;
            loop {
                let base = k as f64 * period;
                if base >= cfg.horizon {
                    break;
                }
                let t = if cfg.jitter > 0.0 {
                    (base + rng.random_range(0.0..cfg.jitter) * period).min(cfg.horizon)
                } else {
                    base
                };
                let y = latent(s, t) + cfg.noise * white.sample(&mut rng);
                let keep = rng.random::<f64>() >= cfg.missing;
                if keep && t < cfg.horizon {
                    obs.push(Observation::new(t, y));
                }
                k += 1;
            }
            signals.push(obs);
        }
        records.push(RawRecord::new(format!("syn{r:05}"), label, signals)?);
    }
    Ok(records)
}
