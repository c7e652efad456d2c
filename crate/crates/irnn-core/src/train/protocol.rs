//! The multi-seed evaluation protocol.
//!
//! A stratified test fraction is held out once with the master seed.
//! Each seed then re-splits the remainder into train/validation, fits
//! normalization statistics on its training events only, builds the
//! grids, trains with early stopping, and evaluates the selected model
//! on the fixed test set. Reported metrics are mean (std) across seeds.

use std::collections::HashMap;

use serde::Serialize;

use crate::datapipe::{build_dataset, fit_norm_stats, split_stratified, NormStats, SampleEvents};
use crate::error::{Error, Result};
use crate::metrics::EvalReport;
use crate::model::{IrnnConfig, Model, ModelKind};

use super::trainer::{train_model, TrainConfig, TrainHistory};

#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    /// Fraction held out for the fixed test set.
    pub test_fraction: f64,
    /// Fraction of the remainder used for validation in each seed.
    pub val_fraction: f64,
    pub n_seeds: u64,
    pub master_seed: u64,
    pub max_len: usize,
    pub train: TrainConfig,
    pub irnn: IrnnConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            test_fraction: 0.2,
            val_fraction: 0.2,
            n_seeds: 5,
            master_seed: 0,
            max_len: 150,
            train: TrainConfig::default(),
            irnn: IrnnConfig::default(),
        }
    }
}

/// One seed's outcome.
pub struct SeedRun {
    pub seed: u64,
    pub model: Model,
    pub stats: NormStats,
    pub history: TrainHistory,
    pub test_report: EvalReport,
    pub test_scores: Vec<f64>,
}

/// All seeds plus the ids that made up the fixed test set.
pub struct ProtocolRun {
    pub seeds: Vec<SeedRun>,
    pub test_ids: Vec<String>,
}

/// Mean and (population) standard deviation helper for summaries.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Summary row in the comparison-table layout.
#[derive(Debug, Clone, Serialize)]
pub struct ModelRow {
    pub model: String,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub ppv_mean: f64,
    pub ppv_std: f64,
    pub sp_mean: f64,
    pub sp_std: f64,
    pub n_seeds: usize,
}

impl ModelRow {
    pub fn from_reports(model: ModelKind, reports: &[&EvalReport]) -> ModelRow {
        let aucs: Vec<f64> = reports.iter().map(|r| r.auc).collect();
        let ppvs: Vec<f64> = reports.iter().map(|r| r.ppv).collect();
        let sps: Vec<f64> = reports.iter().map(|r| r.specificity).collect();
        let (auc_mean, auc_std) = mean_std(&aucs);
        let (ppv_mean, ppv_std) = mean_std(&ppvs);
        let (sp_mean, sp_std) = mean_std(&sps);
        ModelRow {
            model: model.name().to_string(),
            auc_mean,
            auc_std,
            ppv_mean,
            ppv_std,
            sp_mean,
            sp_std,
            n_seeds: reports.len(),
        }
    }

    /// `model, AUC mean (std), PPV, Sp` formatted like the comparison
    /// tables.
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.3} ({:.3}),{:.3} ({:.3}),{:.3} ({:.3})",
            self.model,
            self.auc_mean,
            self.auc_std,
            self.ppv_mean,
            self.ppv_std,
            self.sp_mean,
            self.sp_std
        )
    }
}

/// Run the protocol for one model kind, holding out the test set with
/// the master seed.
pub fn run_protocol(
    kind: ModelKind,
    groups: &[SampleEvents],
    labels: &HashMap<String, u8>,
    feature_list: &[String],
    cfg: &ProtocolConfig,
) -> Result<ProtocolRun> {
    if groups.is_empty() {
        return Err(Error::Data("no samples".into()));
    }
    let label_vec: Vec<u8> = groups
        .iter()
        .map(|g| {
            labels
                .get(g.sample_id.as_str())
                .copied()
                .ok_or_else(|| Error::Data(format!("no label for sample {}", g.sample_id)))
        })
        .collect::<Result<Vec<u8>>>()?;

    // Fixed test holdout on the master seed.
    let parts = split_stratified(
        &label_vec,
        &[1.0 - cfg.test_fraction, cfg.test_fraction],
        cfg.master_seed,
    )?;
    let (trainval_idx, test_idx) = (&parts[0], &parts[1]);

    let pick = |idx: &[usize]| -> Vec<SampleEvents> {
        idx.iter().map(|&i| groups[i].clone()).collect()
    };
    let seeds = run_protocol_split(
        kind,
        &pick(trainval_idx),
        &pick(test_idx),
        labels,
        feature_list,
        cfg,
    )?;

    Ok(ProtocolRun {
        seeds,
        test_ids: test_idx.iter().map(|&i| groups[i].sample_id.clone()).collect(),
    })
}

/// Run the per-seed protocol against an explicit train-val/test split
/// (e.g. one frozen by an earlier preparation step).
pub fn run_protocol_split(
    kind: ModelKind,
    trainval_groups: &[SampleEvents],
    test_groups: &[SampleEvents],
    labels: &HashMap<String, u8>,
    feature_list: &[String],
    cfg: &ProtocolConfig,
) -> Result<Vec<SeedRun>> {
    let trainval_labels: Vec<u8> = trainval_groups
        .iter()
        .map(|g| {
            labels
                .get(g.sample_id.as_str())
                .copied()
                .ok_or_else(|| Error::Data(format!("no label for sample {}", g.sample_id)))
        })
        .collect::<Result<Vec<u8>>>()?;

    let mut seeds = Vec::new();
    for k in 0..cfg.n_seeds {
        let seed = cfg.master_seed + 1 + k;
        let inner = split_stratified(
            &trainval_labels,
            &[1.0 - cfg.val_fraction, cfg.val_fraction],
            seed,
        )?;
        let train_groups: Vec<SampleEvents> =
            inner[0].iter().map(|&i| trainval_groups[i].clone()).collect();
        let val_groups: Vec<SampleEvents> =
            inner[1].iter().map(|&i| trainval_groups[i].clone()).collect();

        let stats = fit_norm_stats(&train_groups, feature_list, cfg.max_len)?;
        let (train_ds, _) = build_dataset(&train_groups, labels, &stats)?;
        let (val_ds, _) = build_dataset(&val_groups, labels, &stats)?;
        let (test_ds, _) = build_dataset(test_groups, labels, &stats)?;

        let train_cfg = TrainConfig {
            seed,
            ..cfg.train
        };
        let (model, history) = train_model(kind, cfg.irnn, &train_ds, &val_ds, &train_cfg)?;

        let test_scores: Vec<f64> = {
            use rayon::prelude::*;
            test_ds
                .samples
                .par_iter()
                .map(|s| model.final_logit(s))
                .collect::<Result<Vec<f64>>>()?
        };
        let test_report = EvalReport::from_scores(&test_scores, &test_ds.labels())?;
        seeds.push(SeedRun {
            seed,
            model,
            stats,
            history,
            test_report,
            test_scores,
        });
    }
    Ok(seeds)
}
