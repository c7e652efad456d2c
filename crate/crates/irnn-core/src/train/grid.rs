//! Hyperparameter grid over learning rate × clip norm.

use serde::Serialize;

use crate::datapipe::Dataset;
use crate::error::Result;
use crate::model::{IrnnConfig, Model, ModelKind};

use super::trainer::{train_model, TrainConfig, TrainHistory};

/// The search ranges used throughout.
pub const LR_GRID: [f64; 3] = [0.0003, 0.001, 0.01];
pub const CLIP_GRID: [f64; 3] = [1.0, 10.0, 20.0];

#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub val_auc: f64,
    pub epochs_run: usize,
}

/// Train every (lr, clip) cell independently and return the winner:
/// highest validation AUC, ties broken toward lower lr then lower clip.
pub fn grid_search(
    kind: ModelKind,
    irnn_config: IrnnConfig,
    train: &Dataset,
    val: &Dataset,
    base: &TrainConfig,
    lrs: &[f64],
    clips: &[f64],
) -> Result<(TrainConfig, Model, TrainHistory, Vec<GridCell>)> {
    let mut lrs: Vec<f64> = lrs.to_vec();
    let mut clips: Vec<f64> = clips.to_vec();
    if lrs.is_empty() || clips.is_empty() {
        return Err(crate::Error::Config("grid must be non-empty".into()));
    }
    lrs.sort_by(|a, b| a.partial_cmp(b).expect("finite lr"));
    clips.sort_by(|a, b| a.partial_cmp(b).expect("finite clip"));

    let mut cells = Vec::new();
    let mut best: Option<(TrainConfig, Model, TrainHistory)> = None;
    for &lr in &lrs {
        for &clip in &clips {
            let cfg = TrainConfig {
                learning_rate: lr,
                clip_norm: clip,
                ..*base
            };
            let (model, history) = train_model(kind, irnn_config, train, val, &cfg)?;
            cells.push(GridCell {
                learning_rate: lr,
                clip_norm: clip,
                val_auc: history.best_val_auc(),
                epochs_run: history.epochs.len(),
            });
            // Strict improvement keeps the earliest (lowest lr, clip).
            let better = match &best {
                None => true,
                Some((_, _, h)) => history.best_val_auc() > h.best_val_auc(),
            };
            if better {
                best = Some((cfg, model, history));
            }
        }
    }
    let (cfg, model, history) = best.expect("grid is non-empty");
    Ok((cfg, model, history, cells))
}
