//! Interpretable additive recurrent models for irregularly sampled
//! multivariate time series.
//!
//! The centerpiece is the I-RNN: a gated recurrent cell whose weight
//! matrices are constrained to be diagonal, so each hidden unit tracks
//! exactly one input feature. Between observations a hidden unit decays
//! toward a (possibly input-dependent) baseline at a learned per-feature
//! rate, and the prediction is an additive combination of the per-feature
//! hidden states. The additive head makes every prediction decomposable
//! into per-feature log-odds contributions.
//!
//! The crate is organized around the pipeline:
//!
//! * [`ndcore`] — dense f64 tensors and a reverse-mode tape covering the
//!   operation set the models need.
//! * [`datapipe`] — long-format event streams to aligned
//!   (values, elapsed, mask) grids with normalization, filling, padding.
//! * [`model`] — the I-RNN cell stack and the GRU/logistic baselines.
//! * [`train`] — BCE + Adam + gradient clipping + early stopping on
//!   validation AUC, plus a small hyperparameter grid.
//! * [`metrics`] — AUC, precision/recall breakeven, cross-correlation.
//! * [`explain`] — contribution traces, global importance, risk curves,
//!   decay curves.
//! * [`synthgen`] — a seeded generator of irregular time series with
//!   known per-feature risk functions for ground-truth benchmarks.

pub mod config;
pub mod datapipe;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod model;
pub mod ndcore;
pub mod rng;
pub mod synthgen;
pub mod train;

pub use error::{Error, Result};
pub use ndcore::{Tape, Tensor};
