//! Dataset loaders, the synthetic generator and the feature cache.

mod cache;
mod long_csv;
mod physionet;
mod synthetic;

pub use cache::{
    read_cache, read_manifest, write_cache, CacheManifest, CohortManifest, CACHE_VERSION, FEATURES_FILE,
    MANIFEST_FILE,
};
pub use long_csv::{load_long_csv, write_long_csv, LongCsvDataset, LongCsvSchema};
pub use physionet::{
    load_physionet_dir, parse_outcomes, parse_physionet_record, signal_names as physionet_signal_names,
    validate_cohort, Outcomes, ParsedRecord, PhysionetCohort, DIED, EXPECTED_RECORDS, EXPECTED_SURVIVORS,
    PHYSIONET_SIGNALS, PUBLISHED_MISSING_RATES, STATIC_DESCRIPTORS, SURVIVED,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticRule};
