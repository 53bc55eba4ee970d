//! Classifiers for irregular, partially observed, multi-resolution
//! multivariate time series.
//!
//! The crate is organised bottom-up:
//!
//! - [`compute`]: dense tensors, a define-by-run reverse-mode tape,
//!   optimizers and a finite-difference gradient checker.
//! - [`sequence`]: LSTM cells, bidirectional recurrence, global attention
//!   and the classifier head.
//! - [`pipeline`]: gridding of raw observations, mask/delta/last-observed
//!   feature construction, normalization, missingness injection and splits.
//! - [`fit`]: per-signal memory cells, support-signal selection, fast/slow
//!   partitioning and the model family built from them.
//! - [`datasets`]: PhysioNet 2012 and long-format CSV loaders, a synthetic
//!   generator and the preprocessed feature cache.
//! - [`experiment`]: training with early stopping, metrics, missingness
//!   sweeps, configuration and result documents.

pub mod compute;
pub mod datasets;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod fit;
pub mod pipeline;
pub mod sequence;

pub use error::{Error, Result};
