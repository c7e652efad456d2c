//! Per-feature risk curves: feature value versus average contribution.

use serde::Serialize;

use crate::datapipe::{denormalize, Dataset, NormStats};
use crate::error::{Error, Result};
use crate::model::Model;

use super::lowess::lowess_smooth;
use super::{local_trace, time_average};

/// How (value, contribution) pairs are pooled across a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolingMode {
    /// One pair per sample: the last observed value of the feature
    /// against the sample's time-averaged contribution.
    LastObserved,
    /// One pair per valid timestep: the (filled) input value against
    /// that step's contribution.
    PerTimestep,
}

#[derive(Debug, Clone)]
pub struct RiskCurveOptions {
    pub n_bins: usize,
    pub smooth: bool,
    pub pooling: PoolingMode,
    /// Tricube local-linear span used when `smooth` is set.
    pub span: f64,
}

impl Default for RiskCurveOptions {
    fn default() -> Self {
        RiskCurveOptions {
            n_bins: 20,
            smooth: false,
            pooling: PoolingMode::LastObserved,
            span: 0.3,
        }
    }
}

/// Equal-frequency binned relationship between a feature's value and
/// its contribution, with bin centers in both normalized and raw units.
#[derive(Debug, Clone, Serialize)]
pub struct RiskCurve {
    pub schema_version: u32,
    pub feature: String,
    pub bin_centers_normalized: Vec<f64>,
    pub bin_centers_raw: Vec<f64>,
    pub mean_contribution: Vec<f64>,
    pub counts: Vec<usize>,
    /// Present when smoothing was requested.
    pub smoothed: Option<Vec<f64>>,
    pub n_points: usize,
}

impl RiskCurve {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Build the risk curve for feature `d`.
///
/// Pairs are pooled per `options.pooling`, sorted by (value,
/// contribution) so bin boundaries are deterministic and order
/// invariant, then split into equal-frequency bins (reduced when there
/// are fewer distinct values than requested bins). Raw-unit centers are
/// recovered by inverting the feature's normalization.
pub fn risk_curve(
    model: &Model,
    dataset: &Dataset,
    stats: &NormStats,
    d: usize,
    options: &RiskCurveOptions,
) -> Result<RiskCurve> {
    if d >= dataset.n_features() {
        return Err(Error::Contract(format!(
            "feature index {d} out of range for D = {}",
            dataset.n_features()
        )));
    }
    if options.n_bins == 0 {
        return Err(Error::Contract("n_bins must be at least 1".into()));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for sample in &dataset.samples {
        let trace = local_trace(model, sample, &dataset.feature_names)?;
        match options.pooling {
            PoolingMode::LastObserved => {
                if let Some(v) = sample.last_observed(d) {
                    pairs.push((v, time_average(&trace)[d]));
                }
            }
            PoolingMode::PerTimestep => {
                for t in 0..sample.valid_len {
                    pairs.push((sample.value(t, d), trace.contributions[t][d]));
                }
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Data(format!(
            "feature {} never observed in the dataset",
            dataset.feature_names[d]
        )));
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite values")
            .then(a.1.partial_cmp(&b.1).expect("finite contributions"))
    });

    let mut distinct = 0;
    let mut prev = f64::NAN;
    for (v, _) in &pairs {
        if *v != prev {
            distinct += 1;
            prev = *v;
        }
    }
    let n_bins = options.n_bins.min(distinct).max(1);

    let n = pairs.len();
    let mut centers = Vec::with_capacity(n_bins);
    let mut means = Vec::with_capacity(n_bins);
    let mut counts = Vec::with_capacity(n_bins);
    for k in 0..n_bins {
        let lo = k * n / n_bins;
        let hi = ((k + 1) * n / n_bins).max(lo + 1);
        let bin = &pairs[lo..hi];
        let center = bin.iter().map(|(v, _)| v).sum::<f64>() / bin.len() as f64;
        let mean = bin.iter().map(|(_, c)| c).sum::<f64>() / bin.len() as f64;
        centers.push(center);
        means.push(mean);
        counts.push(bin.len());
    }

    let smoothed = options.smooth.then(|| {
        let xs: Vec<f64> = pairs.iter().map(|(v, _)| *v).collect();
        let ys: Vec<f64> = pairs.iter().map(|(_, c)| *c).collect();
        lowess_smooth(&xs, &ys, &centers, options.span)
    });

    let fstats = &stats.features[d];
    Ok(RiskCurve {
        schema_version: 1,
        feature: dataset.feature_names[d].clone(),
        bin_centers_raw: centers.iter().map(|z| denormalize(*z, fstats)).collect(),
        bin_centers_normalized: centers,
        mean_contribution: means,
        counts,
        smoothed,
        n_points: n,
    })
}
