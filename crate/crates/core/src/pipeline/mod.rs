//! From irregular observations to gridded feature tensors.

mod corr;
mod features;
pub(crate) mod grid;
mod missing;
mod normalize;
mod prepare;
mod raw;
mod split;

pub use corr::pearson_corr;
pub use features::{build_fit_features, record_means, FitFeatures, MeanMode};
pub use grid::{grid_record, step_count, GriddedRecord};
pub use missing::{inject_missingness_grid, inject_missingness_raw};
pub use normalize::{compute_normalization, NormalizationStats, MIN_STD};
pub use prepare::{class_count, prepare_dataset, GridConfig, PreparedDataset, PreparedRecord, Scaling};
pub use raw::{Observation, RawRecord};
pub use split::{split_dataset, DatasetSplit, RATIOS_64_16_20, RATIOS_80_10_10};
