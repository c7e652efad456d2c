//! Per-feature normalization statistics.
//!
//! Statistics are fitted on the training split only and frozen: an
//! optional log transform for heavily skewed features, then z-scoring,
//! then clipping to [−4, 4]. Elapsed times are scaled by the feature's
//! maximum observed gap in training so staleness is comparable across
//! features.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::events::SampleEvents;

/// Skewness threshold above which the log transform is applied.
const SKEW_THRESHOLD: f64 = 3.0;
/// Lower bound on the fitted standard deviation.
const STD_FLOOR: f64 = 1e-6;
/// Lower bound on the elapsed-time scale, in hours.
const MAX_ELAPSED_FLOOR: f64 = 1.0;
/// Normalized values are clipped to ±CLIP.
pub const CLIP: f64 = 4.0;

/// Fitted statistics for one feature.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FeatureStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub apply_log: bool,
    pub log_shift: f64,
    /// Maximum gap between consecutive training observations, hours.
    pub max_elapsed: f64,
    /// True when the feature had no observation in the training split.
    pub never_observed: bool,
}

/// Frozen normalization statistics for a feature list, in order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NormStats {
    pub schema_version: u32,
    /// Fixed padded sequence length used when building samples.
    pub max_len: usize,
    pub features: Vec<FeatureStats>,
}

impl NormStats {
    pub fn feature_names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let stats: NormStats = serde_json::from_str(&text)?;
        if stats.schema_version != 1 {
            return Err(Error::Data(format!(
                "unsupported norm stats schema_version {}",
                stats.schema_version
            )));
        }
        Ok(stats)
    }

    /// Identity stats (mean 0, std 1, no log, unit elapsed scale) for
    /// data that is already in model units.
    pub fn identity(feature_names: &[String], max_len: usize) -> Self {
        NormStats {
            schema_version: 1,
            max_len,
            features: feature_names
                .iter()
                .map(|name| FeatureStats {
                    name: name.clone(),
                    mean: 0.0,
                    std: 1.0,
                    apply_log: false,
                    log_shift: 0.0,
                    max_elapsed: MAX_ELAPSED_FLOOR,
                    never_observed: false,
                })
                .collect(),
        }
    }
}

/// Adjusted Fisher–Pearson sample skewness; 0 when undefined (n < 3 or
/// zero variance).
fn sample_skewness(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 3 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return 0.0;
    }
    let g1 = m3 / m2.powf(1.5);
    g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0)
}

/// Fit per-feature statistics on training-split events.
///
/// For each feature: skewness decides the log transform
/// (|skew| > 3.0), the shift makes the transform total on the training
/// range (`ln(v + max(0, −min) + 1)`), mean/std are computed after the
/// optional transform (sample std, floored), and `max_elapsed` is the
/// largest gap between consecutive observations of the feature within a
/// training sample, floored at one hour. Features with no training
/// observation are marked `never_observed` with identity statistics.
pub fn fit_norm_stats(
    train: &[SampleEvents],
    feature_list: &[String],
    max_len: usize,
) -> Result<NormStats> {
    if train.is_empty() {
        return Err(Error::Data("cannot fit statistics on an empty training set".into()));
    }
    let index: HashMap<&str, usize> = feature_list
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); feature_list.len()];
    let mut max_gap: Vec<f64> = vec![0.0; feature_list.len()];

    for group in train {
        let mut last_time: Vec<Option<f64>> = vec![None; feature_list.len()];
        for event in &group.events {
            let Some(&d) = index.get(event.variable.as_str()) else {
                continue;
            };
            values[d].push(event.value);
            if let Some(prev) = last_time[d] {
                max_gap[d] = max_gap[d].max(event.time - prev);
            }
            last_time[d] = Some(event.time);
        }
    }

    let features = feature_list
        .iter()
        .enumerate()
        .map(|(d, name)| {
            let vals = &values[d];
            if vals.is_empty() {
                return FeatureStats {
                    name: name.clone(),
                    mean: 0.0,
                    std: 1.0,
                    apply_log: false,
                    log_shift: 0.0,
                    max_elapsed: MAX_ELAPSED_FLOOR,
                    never_observed: true,
                };
            }
            let skew = sample_skewness(vals);
            let apply_log = skew.abs() > SKEW_THRESHOLD;
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            let log_shift = if apply_log { (-min).max(0.0) + 1.0 } else { 0.0 };
            let transformed: Vec<f64> = if apply_log {
                vals.iter().map(|v| (v + log_shift).ln()).collect()
            } else {
                vals.clone()
            };
            let n = transformed.len() as f64;
            let mean = transformed.iter().sum::<f64>() / n;
            let std = if transformed.len() > 1 {
                let var = transformed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                var.sqrt().max(STD_FLOOR)
            } else {
                STD_FLOOR
            };
            FeatureStats {
                name: name.clone(),
                mean,
                std,
                apply_log,
                log_shift,
                max_elapsed: max_gap[d].max(MAX_ELAPSED_FLOOR),
                never_observed: false,
            }
        })
        .collect();

    Ok(NormStats {
        schema_version: 1,
        max_len,
        features,
    })
}

/// Normalize a raw value: optional log transform, z-score, clip.
/// Total on finite input and monotone non-decreasing in the raw value.
pub fn normalize(value: f64, stats: &FeatureStats) -> f64 {
    let t = if stats.apply_log {
        // Values below the training minimum could make the shifted
        // argument non-positive; the tiny floor keeps the map total.
        (value + stats.log_shift).max(1e-12).ln()
    } else {
        value
    };
    ((t - stats.mean) / stats.std).clamp(-CLIP, CLIP)
}

/// Invert the z-score and log transform (clipping is not invertible;
/// clipped values map back to the clip boundary's preimage).
pub fn denormalize(z: f64, stats: &FeatureStats) -> f64 {
    let t = z * stats.std + stats.mean;
    if stats.apply_log {
        t.exp() - stats.log_shift
    } else {
        t
    }
}
