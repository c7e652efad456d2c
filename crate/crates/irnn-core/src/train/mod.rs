//! Binary cross-entropy training with Adam, gradient clipping,
//! mini-batching, and early stopping on validation AUC.

mod adam;
mod grid;
mod protocol;
mod trainer;

use crate::error::{Error, Result};

pub use adam::{adam_step, clip_gradients, AdamState};
pub use grid::{grid_search, GridCell, CLIP_GRID, LR_GRID};
pub use protocol::{
    mean_std, run_protocol, run_protocol_split, ModelRow, ProtocolConfig, ProtocolRun, SeedRun,
};
pub use trainer::{train_model, EpochStat, TrainConfig, TrainHistory};

/// Numerically stable binary cross entropy on a logit:
/// `max(l,0) − l·y + ln(1+exp(−|l|))`.
pub fn bce_loss(logit: f64, label: u8) -> Result<f64> {
    if !logit.is_finite() {
        return Err(Error::Numeric(format!("bce_loss on non-finite logit {logit}")));
    }
    if label > 1 {
        return Err(Error::Contract(format!("label must be 0 or 1, got {label}")));
    }
    Ok(logit.max(0.0) - logit * label as f64 + (-logit.abs()).exp().ln_1p())
}
