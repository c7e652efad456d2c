//! Explanation artifacts: contribution traces, global importance,
//! per-feature risk curves, decay-rate curves.
//!
//! All of these are read-only passes over a trained diagonal model; the
//! additive head makes the log-odds decomposition exact rather than a
//! post-hoc approximation.

mod decay;
mod lowess;
mod risk;

use std::path::Path;

use serde::Serialize;

use crate::datapipe::{Dataset, TimeSeriesSample};
use crate::error::{Error, Result};
use crate::model::{irnn_forward, Model};

pub use decay::{decay_curve, DecayCurve};
pub use lowess::lowess_smooth;
pub use risk::{risk_curve, PoolingMode, RiskCurve, RiskCurveOptions};

/// Per-timestep, per-feature contributions of one sample, in log-odds
/// units. The additive identity `Σ_d c[t][d] + bias = logit[t]` holds at
/// every valid step.
#[derive(Debug, Clone, Serialize)]
pub struct ContributionTrace {
    pub sample_id: String,
    pub times: Vec<f64>,
    pub logits: Vec<f64>,
    /// `contributions[t][d]`.
    pub contributions: Vec<Vec<f64>>,
    pub bias: f64,
    pub feature_names: Vec<String>,
}

impl ContributionTrace {
    /// CSV with columns `time,logit,c_<feature>...`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("time,logit");
        for name in &self.feature_names {
            out.push_str(&format!(",c_{name}"));
        }
        out.push('\n');
        for t in 0..self.times.len() {
            out.push_str(&format!("{},{}", self.times[t], self.logits[t]));
            for c in &self.contributions[t] {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Contributions of every valid step of one sample. Errors for models
/// without an additive head.
pub fn local_trace(
    model: &Model,
    sample: &TimeSeriesSample,
    feature_names: &[String],
) -> Result<ContributionTrace> {
    let Model::Irnn(params) = model else {
        return Err(Error::Unsupported(format!(
            "local contribution traces need the additive model, got {}",
            model.kind()
        )));
    };
    let trace = irnn_forward(params, sample)?;
    Ok(ContributionTrace {
        sample_id: sample.sample_id.clone(),
        times: (0..sample.valid_len).map(|t| sample.time(t)).collect(),
        logits: trace.logits,
        contributions: trace.contributions,
        bias: trace.bias,
        feature_names: feature_names.to_vec(),
    })
}

/// Time-average of the contributions over valid steps:
/// `u[d] = (1/T) Σ_t c[t][d]`.
pub fn time_average(trace: &ContributionTrace) -> Vec<f64> {
    let t_valid = trace.contributions.len();
    let d = trace.feature_names.len();
    let mut u = vec![0.0; d];
    for row in &trace.contributions {
        for (acc, c) in u.iter_mut().zip(row) {
            *acc += c;
        }
    }
    for acc in &mut u {
        *acc /= t_valid as f64;
    }
    u
}

/// Features ranked by mean |time-averaged contribution| across samples.
#[derive(Debug, Clone, Serialize)]
pub struct GlobalImportance {
    pub schema_version: u32,
    /// `(feature name, importance)`, descending; ties keep feature order.
    pub ranking: Vec<(String, f64)>,
}

impl GlobalImportance {
    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.ranking.iter().position(|(n, _)| n == feature)
    }

    pub fn importance_of(&self, feature: &str) -> Option<f64> {
        self.ranking
            .iter()
            .find(|(n, _)| n == feature)
            .map(|(_, v)| *v)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Mean of |u[d]| over all samples, sorted descending.
pub fn global_importance(model: &Model, dataset: &Dataset) -> Result<GlobalImportance> {
    if dataset.samples.is_empty() {
        return Err(Error::Data("empty dataset".into()));
    }
    let d = dataset.n_features();
    let mut sums = vec![0.0; d];
    for sample in &dataset.samples {
        let trace = local_trace(model, sample, &dataset.feature_names)?;
        for (acc, u) in sums.iter_mut().zip(time_average(&trace)) {
            *acc += u.abs();
        }
    }
    let n = dataset.samples.len() as f64;
    let mut ranking: Vec<(String, f64)> = dataset
        .feature_names
        .iter()
        .cloned()
        .zip(sums.into_iter().map(|s| s / n))
        .collect();
    ranking.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite importance"));
    Ok(GlobalImportance {
        schema_version: 1,
        ranking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::TimeSeriesSample;
    use crate::model::{IrnnConfig, IrnnParams, Model};
    use crate::ndcore::Tensor;
    use crate::rng::{stream_rng, Stream};
    use rand::Rng;

    fn names(d: usize) -> Vec<String> {
        (0..d).map(|i| format!("f{i}")).collect()
    }

    fn random_sample(d: usize, t_valid: usize, max_len: usize, seed: u64) -> TimeSeriesSample {
        let mut rng = stream_rng(seed, Stream::Shuffle);
        let cells = max_len * d;
        let mut values = vec![0.0; cells];
        let mut elapsed = vec![0.0; cells];
        let mut mask = vec![0u8; cells];
        for t in 0..t_valid {
            for k in 0..d {
                let i = t * d + k;
                values[i] = rng.random_range(-2.0..=2.0);
                if rng.random_bool(0.5) {
                    mask[i] = 1;
                } else {
                    elapsed[i] = rng.random_range(0.01..=1.0);
                }
            }
        }
        let mut times = vec![0.0; max_len];
        for (t, slot) in times.iter_mut().enumerate().take(t_valid) {
            *slot = t as f64;
        }
        TimeSeriesSample::from_grids(
            format!("s{seed}"),
            (seed % 2) as u8,
            d,
            max_len,
            t_valid,
            times,
            values,
            elapsed,
            mask,
        )
        .unwrap()
    }

    #[test]
    fn zero_model_trace_is_flat_bias() {
        let mut p = IrnnParams::zeros(2, IrnnConfig::default());
        p.out.b_out = Tensor::vector(vec![1.3]).unwrap();
        let model = Model::Irnn(p);
        let sample = random_sample(2, 4, 5, 1);
        let trace = local_trace(&model, &sample, &names(2)).unwrap();
        for t in 0..4 {
            assert_eq!(trace.logits[t], 1.3);
            assert_eq!(trace.contributions[t], vec![0.0, 0.0]);
        }
    }

    #[test]
    fn trace_matches_forward_internals_and_additivity() {
        let mut rng = stream_rng(2, Stream::Init);
        let p = IrnnParams::init(3, IrnnConfig::default(), &mut rng);
        let sample = random_sample(3, 5, 6, 3);
        let fwd = crate::model::irnn_forward(&p, &sample).unwrap();
        let model = Model::Irnn(p);
        let trace = local_trace(&model, &sample, &names(3)).unwrap();
        assert_eq!(trace.logits, fwd.logits);
        assert_eq!(trace.contributions, fwd.contributions);
        for t in 0..5 {
            let sum: f64 = trace.contributions[t].iter().sum();
            assert!((trace.logits[t] - trace.bias - sum).abs() < 1e-12);
        }
    }

    #[test]
    fn non_additive_model_is_unsupported() {
        let mut rng = stream_rng(3, Stream::Init);
        let model = Model::init(
            crate::model::ModelKind::GruSimple,
            2,
            IrnnConfig::default(),
            &mut rng,
        );
        let sample = random_sample(2, 3, 3, 4);
        assert!(matches!(
            local_trace(&model, &sample, &names(2)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn step_change_moves_only_that_feature() {
        // Inject a step change in feature 0 halfway through; feature 1's
        // contribution trajectory must be unchanged and feature 0's must
        // move at the step.
        let mut rng = stream_rng(5, Stream::Init);
        let p = IrnnParams::init(2, IrnnConfig::default(), &mut rng);
        let t_valid = 6;
        let mk = |jump: f64| {
            let mut values = Vec::new();
            let mut elapsed = Vec::new();
            let mut mask = Vec::new();
            for t in 0..t_valid {
                let v0 = if t >= 3 { jump } else { 0.1 };
                values.extend_from_slice(&[v0, -0.4]);
                elapsed.extend_from_slice(&[0.0, 0.0]);
                mask.extend_from_slice(&[1, 1]);
            }
            TimeSeriesSample::from_grids(
                "step".into(),
                1,
                2,
                t_valid,
                t_valid,
                (0..t_valid).map(|t| t as f64).collect(),
                values,
                elapsed,
                mask,
            )
            .unwrap()
        };
        let base = mk(0.1); // no step
        let stepped = mk(2.0);
        let model = Model::Irnn(p);
        let a = local_trace(&model, &base, &names(2)).unwrap();
        let b = local_trace(&model, &stepped, &names(2)).unwrap();
        for t in 0..t_valid {
            assert_eq!(
                a.contributions[t][1].to_bits(),
                b.contributions[t][1].to_bits()
            );
        }
        for t in 0..3 {
            assert_eq!(
                a.contributions[t][0].to_bits(),
                b.contributions[t][0].to_bits()
            );
        }
        assert!((a.contributions[3][0] - b.contributions[3][0]).abs() > 1e-6);
    }

    #[test]
    fn time_average_examples() {
        let trace = ContributionTrace {
            sample_id: "t".into(),
            times: vec![0.0, 1.0],
            logits: vec![0.0, 0.0],
            contributions: vec![vec![1.0, 0.3], vec![-1.0, 0.3]],
            bias: 0.0,
            feature_names: names(2),
        };
        assert_eq!(time_average(&trace), vec![0.0, 0.3]);

        let trace5 = ContributionTrace {
            sample_id: "t".into(),
            times: (0..5).map(|t| t as f64).collect(),
            logits: vec![0.0; 5],
            contributions: vec![vec![0.3]; 5],
            bias: 0.0,
            feature_names: names(1),
        };
        assert!((time_average(&trace5)[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn time_average_is_the_mean() {
        let mut rng = stream_rng(6, Stream::Shuffle);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let trace = ContributionTrace {
            sample_id: "t".into(),
            times: (0..7).map(|t| t as f64).collect(),
            logits: vec![0.0; 7],
            contributions: rows.clone(),
            bias: 0.0,
            feature_names: names(3),
        };
        let u = time_average(&trace);
        for d in 0..3 {
            let mean: f64 = rows.iter().map(|r| r[d]).sum::<f64>() / 7.0;
            assert!((u[d] - mean).abs() < 1e-15);
        }
    }

    #[test]
    fn global_importance_ranks_and_is_padding_invariant() {
        let mut rng = stream_rng(7, Stream::Init);
        let p = IrnnParams::init(2, IrnnConfig::default(), &mut rng);
        let model = Model::Irnn(p);
        let samples: Vec<TimeSeriesSample> =
            (0..6).map(|i| random_sample(2, 4, 6, 100 + i)).collect();
        let ds = Dataset {
            feature_names: names(2),
            samples: samples.clone(),
        };
        let gi = global_importance(&model, &ds).unwrap();
        assert_eq!(gi.ranking.len(), 2);
        assert!(gi.ranking[0].1 >= gi.ranking[1].1);

        // Permutation invariance.
        let mut reordered = samples.clone();
        reordered.reverse();
        let ds2 = Dataset {
            feature_names: names(2),
            samples: reordered,
        };
        let gi2 = global_importance(&model, &ds2).unwrap();
        for (a, b) in gi.ranking.iter().zip(&gi2.ranking) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }

        // Padding invariance: rebuild the same grids with longer padding.
        let repadded: Vec<TimeSeriesSample> = samples
            .iter()
            .map(|s| {
                let d = s.n_features();
                let t_valid = s.valid_len;
                let max_len = 12;
                let mut values = vec![0.0; max_len * d];
                let mut elapsed = vec![0.0; max_len * d];
                let mut mask = vec![0u8; max_len * d];
                let mut times = vec![0.0; max_len];
                for t in 0..t_valid {
                    times[t] = s.time(t);
                    for k in 0..d {
                        values[t * d + k] = s.value(t, k);
                        elapsed[t * d + k] = s.elapsed(t, k);
                        mask[t * d + k] = s.observed(t, k) as u8;
                    }
                }
                TimeSeriesSample::from_grids(
                    s.sample_id.clone(),
                    s.label,
                    d,
                    max_len,
                    t_valid,
                    times,
                    values,
                    elapsed,
                    mask,
                )
                .unwrap()
            })
            .collect();
        let ds3 = Dataset {
            feature_names: names(2),
            samples: repadded,
        };
        let gi3 = global_importance(&model, &ds3).unwrap();
        for (a, b) in gi.ranking.iter().zip(&gi3.ranking) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn dead_output_weight_ranks_last_with_zero_importance() {
        let mut rng = stream_rng(8, Stream::Init);
        let mut p = IrnnParams::init(2, IrnnConfig::default(), &mut rng);
        p.out.w_out.data_mut()[1] = 0.0;
        let model = Model::Irnn(p);
        let ds = Dataset {
            feature_names: names(2),
            samples: (0..4).map(|i| random_sample(2, 4, 4, 200 + i)).collect(),
        };
        let gi = global_importance(&model, &ds).unwrap();
        assert_eq!(gi.ranking.last().unwrap().0, "f1");
        assert_eq!(gi.ranking.last().unwrap().1, 0.0);
    }

    #[test]
    fn empty_dataset_errors() {
        let mut rng = stream_rng(9, Stream::Init);
        let model = Model::Irnn(IrnnParams::init(2, IrnnConfig::default(), &mut rng));
        let ds = Dataset {
            feature_names: names(2),
            samples: vec![],
        };
        assert!(global_importance(&model, &ds).is_err());
    }
}
