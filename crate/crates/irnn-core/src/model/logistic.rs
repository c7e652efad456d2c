//! Logistic regression on hand-engineered summary features.

use serde::{Deserialize, Serialize};

use crate::datapipe::TimeSeriesSample;
use crate::error::{Error, Result};
use crate::ndcore::{Tape, Tensor};

/// Summary statistics per feature, in order.
pub const SUMMARY_STATS: [&str; 6] = ["max", "min", "mean", "first", "last", "variance"];

/// Summarize a sample into a length-6D vector: per feature
/// [max, min, mean, first, last, variance], computed over observed
/// values only. Variance is the population variance (0 for n ≤ 1);
/// never-observed features contribute six zeros.
pub fn summarize_features(sample: &TimeSeriesSample) -> Vec<f64> {
    let d_count = sample.n_features();
    let mut out = vec![0.0; 6 * d_count];
    for d in 0..d_count {
        let obs: Vec<f64> = (0..sample.valid_len)
            .filter(|&t| sample.observed(t, d))
            .map(|t| sample.value(t, d))
            .collect();
        if obs.is_empty() {
            continue;
        }
        let n = obs.len() as f64;
        let mean = obs.iter().sum::<f64>() / n;
        let variance = obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let block = &mut out[6 * d..6 * (d + 1)];
        block[0] = obs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        block[1] = obs.iter().cloned().fold(f64::INFINITY, f64::min);
        block[2] = mean;
        block[3] = obs[0];
        block[4] = *obs.last().unwrap();
        block[5] = variance;
    }
    out
}

/// Linear model over the 6D summary vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub d: usize,
    /// Weights, 1×6D.
    pub weights: Tensor,
    /// Bias, length 1.
    pub bias: Tensor,
}

impl LogisticParams {
    pub fn init(d: usize, rng: &mut impl rand::Rng) -> Self {
        let bound = 1.0 / (d as f64).sqrt();
        let data: Vec<f64> = (0..6 * d).map(|_| rng.random_range(-bound..=bound)).collect();
        LogisticParams {
            d,
            weights: Tensor::from_parts(vec![1, 6 * d], data),
            bias: Tensor::zeros(vec![1]),
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![&self.weights, &self.bias]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weights, &mut self.bias]
    }

    pub fn param_count(&self) -> usize {
        6 * self.d + 1
    }

    /// `logit = w·s + b` for a summary vector `s`.
    pub fn logit(&self, summary: &[f64]) -> Result<f64> {
        if summary.len() != 6 * self.d {
            return Err(Error::dim(
                "logistic_forward",
                format!("expected 6·D = {} summaries, got {}", 6 * self.d, summary.len()),
            ));
        }
        let w = self.weights.data();
        let mut acc = self.bias.data()[0];
        for (wi, si) in w.iter().zip(summary) {
            acc += wi * si;
        }
        Ok(acc)
    }

    /// Tape version for training; returns the scalar logit node.
    pub fn logit_on_tape(
        &self,
        summary: Vec<f64>,
        tape: &mut Tape,
    ) -> Result<(crate::ndcore::NodeId, [crate::ndcore::NodeId; 2])> {
        if summary.len() != 6 * self.d {
            return Err(Error::dim(
                "logistic_forward",
                format!("expected 6·D = {} summaries, got {}", 6 * self.d, summary.len()),
            ));
        }
        let w = tape.param(self.weights.clone());
        let b = tape.param(self.bias.clone());
        let n = summary.len();
        let s = tape.input(Tensor::from_parts(vec![n], summary));
        let logit = tape.dense_affine(w, s, b)?;
        Ok((logit, [w, b]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::{build_sample, EventRecord, NormStats, SampleEvents};

    fn sample_from(pairs: &[(&str, f64, f64)], names: &[&str]) -> TimeSeriesSample {
        let mut events: Vec<EventRecord> = pairs
            .iter()
            .map(|(var, t, v)| EventRecord {
                sample_id: "s".into(),
                time: *t,
                variable: (*var).to_string(),
                value: *v,
            })
            .collect();
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        let stats = NormStats::identity(
            &names.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
            8,
        );
        build_sample(
            &SampleEvents {
                sample_id: "s".into(),
                events,
            },
            &stats,
            0,
            8,
        )
        .unwrap()
    }

    #[test]
    fn single_observation_summary() {
        let s = sample_from(&[("a", 1.0, 2.5)], &["a"]);
        let sum = summarize_features(&s);
        assert_eq!(sum, vec![2.5, 2.5, 2.5, 2.5, 2.5, 0.0]);
    }

    #[test]
    fn two_observations_population_variance() {
        let s = sample_from(&[("a", 0.0, 1.0), ("a", 1.0, 3.0)], &["a"]);
        let sum = summarize_features(&s);
        // [max, min, mean, first, last, variance] with population variance 1.
        assert_eq!(sum, vec![3.0, 1.0, 2.0, 1.0, 3.0, 1.0]);
    }

    #[test]
    fn never_observed_feature_contributes_zeros() {
        let s = sample_from(&[("a", 0.0, 1.0)], &["a", "b"]);
        let sum = summarize_features(&s);
        assert_eq!(&sum[6..12], &[0.0; 6]);
    }

    #[test]
    fn forward_filled_values_are_not_summarized() {
        // b observed once at t=0; a's later observations create more grid
        // rows where b is filled, which must not affect b's summary.
        let s = sample_from(
            &[("b", 0.0, 3.0), ("a", 1.0, 1.0), ("a", 2.0, 2.0)],
            &["a", "b"],
        );
        let sum = summarize_features(&s);
        assert_eq!(&sum[6..12], &[3.0, 3.0, 3.0, 3.0, 3.0, 0.0]);
    }

    #[test]
    fn logit_examples() {
        let mut p = LogisticParams {
            d: 1,
            weights: Tensor::from_parts(vec![1, 6], vec![0.0; 6]),
            bias: Tensor::from_parts(vec![1], vec![0.7]),
        };
        let s = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(p.logit(&s).unwrap(), 0.7);

        p.weights.data_mut()[0] = 1.0;
        assert_eq!(p.logit(&s).unwrap(), 1.7);

        assert!(p.logit(&[1.0]).is_err());
    }

    #[test]
    fn logit_matches_tape_dense_affine() {
        let mut rng = crate::rng::stream_rng(3, crate::rng::Stream::Init);
        let p = LogisticParams::init(2, &mut rng);
        let summary: Vec<f64> = (0..12).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let direct = p.logit(&summary).unwrap();
        let mut tape = Tape::new();
        let (logit, _) = p.logit_on_tape(summary, &mut tape).unwrap();
        assert_eq!(direct.to_bits(), tape.value(logit).data()[0].to_bits());
    }
}
