//! Aligned per-sample grids.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

use super::events::SampleEvents;
use super::norm::{normalize, NormStats};

/// One sample as aligned (values, elapsed, mask) grids.
///
/// All grids have `max_len` rows; rows at index ≥ `valid_len` are
/// all-zero padding. Within the valid region, `elapsed[t,d] == 0` exactly
/// when `mask[t,d] == 1`, elapsed times are scaled to [0,1] by the
/// feature's training max gap, and values are normalized and clipped.
/// Features not yet observed at a step carry value 0 (mean fill) and
/// elapsed 1 (maximum staleness), the same convention as features never
/// observed at all.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSample {
    pub sample_id: String,
    pub label: u8,
    pub valid_len: usize,
    n_features: usize,
    max_len: usize,
    /// Grid time points in hours; 0 in the padded region.
    times: Vec<f64>,
    values: Vec<f64>,
    elapsed: Vec<f64>,
    mask: Vec<u8>,
}

impl TimeSeriesSample {
    /// Assemble a sample from prebuilt row-major grids, validating the
    /// representation invariants: grids sized `max_len × D`, rows at and
    /// beyond `valid_len` all zero, elapsed in [0,1] and zero exactly at
    /// observation instants, values within the clip range.
    #[allow(clippy::too_many_arguments)]
    pub fn from_grids(
        sample_id: String,
        label: u8,
        n_features: usize,
        max_len: usize,
        valid_len: usize,
        times: Vec<f64>,
        values: Vec<f64>,
        elapsed: Vec<f64>,
        mask: Vec<u8>,
    ) -> Result<Self> {
        let cells = max_len * n_features;
        if values.len() != cells || elapsed.len() != cells || mask.len() != cells {
            return Err(Error::dim(
                "from_grids",
                format!("grids must hold {cells} cells (max_len {max_len} × D {n_features})"),
            ));
        }
        if times.len() != max_len {
            return Err(Error::dim(
                "from_grids",
                format!("times must hold max_len = {max_len} entries"),
            ));
        }
        if valid_len == 0 || valid_len > max_len {
            return Err(Error::Contract(format!(
                "valid_len {valid_len} out of range 1..={max_len}"
            )));
        }
        if label > 1 {
            return Err(Error::Contract(format!("label must be 0 or 1, got {label}")));
        }
        for t in 0..max_len {
            for d in 0..n_features {
                let i = t * n_features + d;
                if t >= valid_len {
                    if values[i] != 0.0 || elapsed[i] != 0.0 || mask[i] != 0 {
                        return Err(Error::Contract(format!(
                            "padding row {t} must be all zero"
                        )));
                    }
                    continue;
                }
                if !(0.0..=1.0).contains(&elapsed[i]) {
                    return Err(Error::Contract(format!(
                        "elapsed[{t},{d}] = {} outside [0,1]",
                        elapsed[i]
                    )));
                }
                if values[i].abs() > super::norm::CLIP {
                    return Err(Error::Contract(format!(
                        "values[{t},{d}] = {} outside the clip range",
                        values[i]
                    )));
                }
                if (mask[i] == 1) != (elapsed[i] == 0.0) {
                    return Err(Error::Contract(format!(
                        "mask[{t},{d}] and elapsed[{t},{d}] disagree"
                    )));
                }
            }
        }
        Ok(TimeSeriesSample {
            sample_id,
            label,
            valid_len,
            n_features,
            max_len,
            times,
            values,
            elapsed,
            mask,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn time(&self, t: usize) -> f64 {
        self.times[t]
    }

    pub fn value(&self, t: usize, d: usize) -> f64 {
        self.values[t * self.n_features + d]
    }

    pub fn elapsed(&self, t: usize, d: usize) -> f64 {
        self.elapsed[t * self.n_features + d]
    }

    pub fn observed(&self, t: usize, d: usize) -> bool {
        self.mask[t * self.n_features + d] == 1
    }

    pub fn values_row(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_features..(t + 1) * self.n_features]
    }

    pub fn elapsed_row(&self, t: usize) -> &[f64] {
        &self.elapsed[t * self.n_features..(t + 1) * self.n_features]
    }

    pub fn mask_row_f64(&self, t: usize) -> Vec<f64> {
        self.mask[t * self.n_features..(t + 1) * self.n_features]
            .iter()
            .map(|m| *m as f64)
            .collect()
    }

    /// Last observed (normalized) value of feature `d` within the valid
    /// window, if any.
    pub fn last_observed(&self, d: usize) -> Option<f64> {
        (0..self.valid_len)
            .rev()
            .find(|&t| self.observed(t, d))
            .map(|t| self.value(t, d))
    }

    /// First observed (normalized) value of feature `d` within the valid
    /// window, if any.
    pub fn first_observed(&self, d: usize) -> Option<f64> {
        (0..self.valid_len)
            .find(|&t| self.observed(t, d))
            .map(|t| self.value(t, d))
    }
}

/// What the dataset build skipped or renamed, for reporting.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct BuildReport {
    /// Events whose variable is not in the feature list, by name.
    pub unknown_variables: BTreeMap<String, usize>,
    pub n_samples: usize,
}

/// A built dataset: ordered feature names plus grids per sample.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub samples: Vec<TimeSeriesSample>,
}

impl Dataset {
    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Build one sample's grids from its sorted events.
///
/// The time grid is the distinct observed time points of the known
/// variables. Values are forward filled indefinitely; never-observed
/// features are zero filled (mean fill under z-scoring). Sequences
/// longer than `max_len` keep the most recent `max_len` grid points
/// (forward-fill state and staleness survive the cut); shorter ones are
/// zero padded with `valid_len` recording the true length.
pub fn build_sample(
    events: &SampleEvents,
    stats: &NormStats,
    label: u8,
    max_len: usize,
) -> Result<TimeSeriesSample> {
    if max_len == 0 {
        return Err(Error::Contract("max_len must be at least 1".into()));
    }
    let d_count = stats.n_features();
    let index: HashMap<&str, usize> = stats
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (f.name.as_str(), i))
        .collect();

    let known: Vec<(usize, f64, f64)> = events
        .events
        .iter()
        .filter_map(|e| index.get(e.variable.as_str()).map(|&d| (d, e.time, e.value)))
        .collect();
    if known.is_empty() {
        return Err(Error::Data(format!(
            "sample {} has no events for any known feature",
            events.sample_id
        )));
    }

    let mut grid: Vec<f64> = known.iter().map(|(_, t, _)| *t).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    grid.dedup();
    let t_full = grid.len();

    // Observations per grid cell; a later event at the same (t, d) wins.
    let mut obs: Vec<Option<f64>> = vec![None; t_full * d_count];
    for (d, time, value) in &known {
        let ti = grid
            .binary_search_by(|g| g.partial_cmp(time).expect("finite"))
            .expect("grid contains every event time");
        obs[ti * d_count + d] = Some(*value);
    }

    let mut values = vec![0.0; t_full * d_count];
    let mut elapsed = vec![0.0; t_full * d_count];
    let mut mask = vec![0u8; t_full * d_count];
    for d in 0..d_count {
        let fstats = &stats.features[d];
        let mut last_time: Option<f64> = None;
        let mut fill = 0.0;
        for (ti, t) in grid.iter().enumerate() {
            let cell = ti * d_count + d;
            if let Some(raw) = obs[cell] {
                fill = normalize(raw, fstats);
                last_time = Some(*t);
                values[cell] = fill;
                mask[cell] = 1;
                // elapsed stays 0 at observation instants
            } else {
                values[cell] = fill;
                elapsed[cell] = match last_time {
                    Some(lt) => ((t - lt) / fstats.max_elapsed).min(1.0),
                    None => 1.0,
                };
            }
        }
    }

    // Keep the most recent max_len grid points.
    let start = t_full.saturating_sub(max_len);
    let valid_len = t_full - start;

    let mut sample = TimeSeriesSample {
        sample_id: events.sample_id.clone(),
        label,
        valid_len,
        n_features: d_count,
        max_len,
        times: vec![0.0; max_len],
        values: vec![0.0; max_len * d_count],
        elapsed: vec![0.0; max_len * d_count],
        mask: vec![0u8; max_len * d_count],
    };
    sample.times[..valid_len].copy_from_slice(&grid[start..]);
    let lo = start * d_count;
    let hi = t_full * d_count;
    sample.values[..valid_len * d_count].copy_from_slice(&values[lo..hi]);
    sample.elapsed[..valid_len * d_count].copy_from_slice(&elapsed[lo..hi]);
    sample.mask[..valid_len * d_count].copy_from_slice(&mask[lo..hi]);
    Ok(sample)
}

/// Build a dataset from grouped events and a label per sample id.
/// Unknown variables are counted in the report rather than silently
/// dropped.
pub fn build_dataset(
    groups: &[SampleEvents],
    labels: &HashMap<String, u8>,
    stats: &NormStats,
) -> Result<(Dataset, BuildReport)> {
    let mut report = BuildReport::default();
    let known: std::collections::HashSet<&str> = stats
        .features
        .iter()
        .map(|f| f.name.as_str())
        .collect();

    let mut samples = Vec::with_capacity(groups.len());
    for group in groups {
        for event in &group.events {
            if !known.contains(event.variable.as_str()) {
                *report
                    .unknown_variables
                    .entry(event.variable.clone())
                    .or_insert(0) += 1;
            }
        }
        let label = *labels.get(group.sample_id.as_str()).ok_or_else(|| {
            Error::Data(format!("no label for sample {}", group.sample_id))
        })?;
        samples.push(build_sample(group, stats, label, stats.max_len)?);
    }
    report.n_samples = samples.len();
    Ok((
        Dataset {
            feature_names: stats.feature_names(),
            samples,
        },
        report,
    ))
}
