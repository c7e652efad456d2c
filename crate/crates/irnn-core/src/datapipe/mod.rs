//! Event streams to model-ready grids.
//!
//! Raw data is a long-format stream of (sample, time, variable, value)
//! events. This module turns it into aligned per-sample grids: the
//! normalized measurement matrix, the per-feature elapsed-time-since-
//! observation matrix scaled to [0,1], and the binary observation mask,
//! padded to a fixed length.

mod events;
mod norm;
pub mod physionet;
mod sample;
mod split;

pub use events::{load_long_csv, load_outcomes, EventRecord, SampleEvents};
pub use norm::{denormalize, fit_norm_stats, normalize, FeatureStats, NormStats};
pub use sample::{build_dataset, build_sample, BuildReport, Dataset, TimeSeriesSample};
pub use split::split_stratified;
