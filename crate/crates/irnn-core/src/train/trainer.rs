//! The epoch loop.

use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::KvConfig;
use crate::datapipe::Dataset;
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::model::{IrnnConfig, Model, ModelKind};
use crate::ndcore::Tensor;
use crate::rng::{stream_rng, Stream};

use super::adam::{adam_step, clip_gradients, AdamState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub adam_betas: (f64, f64),
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            clip_norm: 10.0,
            batch_size: 512,
            max_epochs: 200,
            patience: 10,
            adam_betas: (0.9, 0.95),
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("clip_norm", self.clip_norm),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        let (b1, b2) = self.adam_betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return Err(Error::Config(format!(
                "adam betas must lie in [0,1), got ({b1}, {b2})"
            )));
        }
        Ok(())
    }

    /// Read from a flat key-value config; missing keys keep defaults.
    pub fn from_kv(kv: &KvConfig) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            learning_rate: kv.get_or("learning_rate", d.learning_rate)?,
            clip_norm: kv.get_or("clip_norm", d.clip_norm)?,
            batch_size: kv.get_or("batch_size", d.batch_size)?,
            max_epochs: kv.get_or("max_epochs", d.max_epochs)?,
            patience: kv.get_or("patience", d.patience)?,
            adam_betas: (
                kv.get_or("adam_beta1", d.adam_betas.0)?,
                kv.get_or("adam_beta2", d.adam_betas.1)?,
            ),
            adam_eps: kv.get_or("adam_eps", d.adam_eps)?,
            seed: kv.get_or("seed", d.seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStat {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
}

/// Per-epoch record plus the index of the snapshot that was kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStat>,
    /// Index into `epochs` of the best validation AUC (earliest on ties).
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn best_val_auc(&self) -> f64 {
        self.epochs[self.best_epoch].val_auc
    }

    /// CSV with header `epoch,train_loss,val_auc`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::from("epoch,train_loss,val_auc\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_auc));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Mean validation-score pass, parallel over samples.
fn val_scores(model: &Model, val: &Dataset) -> Result<Vec<f64>> {
    val.samples
        .par_iter()
        .map(|s| model.final_logit(s))
        .collect()
}

/// Train a model with mini-batch Adam and early stopping on validation
/// AUC.
///
/// The loss is the BCE of the final valid time step, averaged over the
/// mini-batch. Training stops at `max_epochs` or once the validation
/// AUC has not improved for more than `patience` epochs; the returned
/// model is the snapshot from the best epoch. Deterministic given the
/// seed: initialization and shuffling use separate seeded streams, and
/// per-sample gradients are reduced in sample order.
pub fn train_model(
    kind: ModelKind,
    irnn_config: IrnnConfig,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<(Model, TrainHistory)> {
    cfg.validate()?;
    if train.samples.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    let val_labels = val.labels();
    if !val_labels.contains(&0) || !val_labels.contains(&1) {
        return Err(Error::UndefinedMetric(
            "validation set must contain both classes".into(),
        ));
    }

    let mut init_rng = stream_rng(cfg.seed, Stream::Init);
    let mut model = Model::init(kind, train.n_features(), irnn_config, &mut init_rng);
    let mut shuffle_rng = stream_rng(cfg.seed, Stream::Shuffle);
    let mut adam = AdamState::new(&model.tensors());

    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
    };
    let mut best: Option<(Model, f64)> = None;
    let mut since_best = 0usize;

    let mut indices: Vec<usize> = (0..train.samples.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for batch in indices.chunks(cfg.batch_size) {
            let results: Vec<(f64, Vec<Tensor>)> = batch
                .par_iter()
                .map(|&i| model.loss_grad(&train.samples[i]))
                .collect::<Result<Vec<_>>>()?;

            // Batch-mean gradient, reduced in sample order.
            let scale = 1.0 / batch.len() as f64;
            let mut mean: Vec<Tensor> = model
                .tensors()
                .iter()
                .map(|t| Tensor::zeros_like(t))
                .collect();
            for (loss, grads) in &results {
                loss_sum += loss;
                for (acc, g) in mean.iter_mut().zip(grads) {
                    for (a, v) in acc.data_mut().iter_mut().zip(g.data()) {
                        *a += v;
                    }
                }
            }
            for t in &mut mean {
                for v in t.data_mut() {
                    *v *= scale;
                }
            }
            clip_gradients(&mut mean, cfg.clip_norm)?;
            adam_step(
                &mut model.tensors_mut(),
                &mut adam,
                &mean,
                cfg.learning_rate,
                cfg.adam_betas,
                cfg.adam_eps,
            )?;
        }

        let scores = val_scores(&model, val)?;
        let val_auc = auc(&scores, &val_labels)?;
        history.epochs.push(EpochStat {
            epoch,
            train_loss: loss_sum / train.samples.len() as f64,
            val_auc,
        });

        let improved = match &best {
            None => true,
            Some((_, best_auc)) => val_auc > *best_auc,
        };
        if improved {
            best = Some((model.clone(), val_auc));
            history.best_epoch = history.epochs.len() - 1;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }

    let (best_model, _) = best.expect("at least one epoch ran");
    Ok((best_model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::TimeSeriesSample;

    /// A separable toy task: the label is the sign of feature 0's last
    /// observed value; D = 2, fully observed, two steps.
    fn toy_dataset(n: usize, seed: u64) -> Dataset {
        use rand::Rng;
        let mut rng = stream_rng(seed, Stream::SynthSample(0));
        let samples: Vec<TimeSeriesSample> = (0..n)
            .map(|i| {
                let v0: f64 = rng.random_range(-2.0..2.0);
                let v0b: f64 = rng.random_range(-2.0..2.0);
                let v1: f64 = rng.random_range(-2.0..2.0);
                let v1b: f64 = rng.random_range(-2.0..2.0);
                let label = (v0b > 0.0) as u8;
                TimeSeriesSample::from_grids(
                    format!("t{i}"),
                    label,
                    2,
                    2,
                    2,
                    vec![0.0, 1.0],
                    vec![v0, v1, v0b, v1b],
                    vec![0.0; 4],
                    vec![1, 1, 1, 1],
                )
                .unwrap()
            })
            .collect();
        Dataset {
            feature_names: vec!["f0".into(), "f1".into()],
            samples,
        }
    }

    #[test]
    fn learns_a_separable_toy_task() {
        let train = toy_dataset(200, 1);
        let val = toy_dataset(80, 2);
        let cfg = TrainConfig {
            max_epochs: 50,
            patience: 10,
            batch_size: 64,
            learning_rate: 0.01,
            seed: 7,
            ..TrainConfig::default()
        };
        let (_, history) =
            train_model(ModelKind::Irnn, IrnnConfig::default(), &train, &val, &cfg).unwrap();
        assert!(
            history.best_val_auc() > 0.95,
            "val AUC {} after {} epochs",
            history.best_val_auc(),
            history.epochs.len()
        );
    }

    #[test]
    fn same_seed_reproduces_the_history_bitwise() {
        let train = toy_dataset(60, 3);
        let val = toy_dataset(40, 4);
        let cfg = TrainConfig {
            max_epochs: 5,
            patience: 5,
            batch_size: 32,
            seed: 11,
            ..TrainConfig::default()
        };
        let (m1, h1) =
            train_model(ModelKind::Logistic, IrnnConfig::default(), &train, &val, &cfg).unwrap();
        let (m2, h2) =
            train_model(ModelKind::Logistic, IrnnConfig::default(), &train, &val, &cfg).unwrap();
        assert_eq!(h1, h2);
        for (a, b) in m1.tensors().iter().zip(m2.tensors()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn zero_patience_stops_one_epoch_past_the_best() {
        // A task learned to AUC 1.0 in the first epoch cannot improve,
        // so the second epoch triggers the stop.
        let train = toy_dataset(200, 5);
        let val = toy_dataset(40, 6);
        let cfg = TrainConfig {
            max_epochs: 30,
            patience: 0,
            batch_size: 64,
            learning_rate: 0.01,
            seed: 13,
            ..TrainConfig::default()
        };
        let (_, history) =
            train_model(ModelKind::Logistic, IrnnConfig::default(), &train, &val, &cfg).unwrap();
        assert_eq!(history.epochs[history.best_epoch].val_auc, 1.0);
        assert_eq!(
            history.epochs.len(),
            history.best_epoch + 2,
            "expected exactly one epoch beyond the first non-improvement"
        );
    }

    #[test]
    fn single_class_validation_is_rejected() {
        let train = toy_dataset(50, 7);
        let mut val = toy_dataset(20, 8);
        for s in &mut val.samples {
            s.label = 1;
        }
        let cfg = TrainConfig::default();
        assert!(matches!(
            train_model(ModelKind::Logistic, IrnnConfig::default(), &train, &val, &cfg),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn best_epoch_dominates_history() {
        let train = toy_dataset(100, 9);
        let val = toy_dataset(50, 10);
        let cfg = TrainConfig {
            max_epochs: 12,
            patience: 12,
            batch_size: 32,
            seed: 17,
            ..TrainConfig::default()
        };
        let (_, history) =
            train_model(ModelKind::GruForward, IrnnConfig::default(), &train, &val, &cfg)
                .unwrap();
        let best = history.best_val_auc();
        for e in &history.epochs {
            assert!(best >= e.val_auc);
        }
        // Earliest epoch wins ties.
        let first_max = history
            .epochs
            .iter()
            .position(|e| e.val_auc == best)
            .unwrap();
        assert_eq!(history.best_epoch, first_max);
    }

    #[test]
    fn one_adam_step_decreases_single_sample_loss() {
        use crate::ndcore::Tensor;
        let data = toy_dataset(6, 20);
        let mut rng = stream_rng(21, Stream::Init);
        for kind in ModelKind::ALL {
            for sample in &data.samples {
                let mut model = Model::init(kind, 2, IrnnConfig::default(), &mut rng);
                let (before, grads) = model.loss_grad(sample).unwrap();
                let mut adam = AdamState::new(&model.tensors());
                let mut g: Vec<Tensor> = grads;
                clip_gradients(&mut g, 10.0).unwrap();
                adam_step(
                    &mut model.tensors_mut(),
                    &mut adam,
                    &g,
                    1e-4,
                    (0.9, 0.95),
                    1e-8,
                )
                .unwrap();
                let (after, _) = model.loss_grad(sample).unwrap();
                assert!(
                    after < before || (after - before).abs() < 1e-12,
                    "{kind}: loss went from {before} to {after}"
                );
            }
        }
    }
}
