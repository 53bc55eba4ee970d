//! Training, evaluation, the missingness sweep, configuration and results.

mod config;
mod metrics;
mod results;
mod run;
mod sweep;
mod train;

pub use config::{
    DataConfig, DataSource, ExperimentConfig, ModelConfig, OutputConfig, SweepConfig, TrainingConfig, DATA_ROOT_ENV,
};
pub use metrics::{compute_metrics, median, Averaged, ClassMetrics, MetricsReport};
pub use results::{git_describe, load_model, save_model, Aggregate, ResultsDocument, Summary, Timing, RESULTS_FORMAT_VERSION};
pub use run::{build_model, load_source, prepare_for_seed, run_experiment, run_model, RunResult, SourceData};
pub use sweep::{missingness_sweep, SweepRow, SweepTable};
pub use train::{evaluate_model, predict, train_model, EpochRecord, TrainConfig, TrainHistory};
