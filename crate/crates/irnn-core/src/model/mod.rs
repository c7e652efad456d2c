//! Model zoo: the I-RNN and its baselines behind one enum.

mod dense_gru;
mod irnn;
mod logistic;

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datapipe::TimeSeriesSample;
use crate::error::{Error, Result};
use crate::ndcore::{Tape, Tensor};

pub use dense_gru::{
    dense_gru_forward, dense_gru_forward_on_tape, dense_gru_step, BoundDenseGru,
    DenseGruNodes, DenseGruParams, DenseGruTrace, GruInput,
};
pub use irnn::{
    additive_head, decay_step, irnn_forward, irnn_forward_on_tape, masked_gru_step, BoundIrnn,
    DecayParams, DecayWeight, IrnnConfig, IrnnNodes, IrnnParams, IrnnTrace, MaskedGruParams,
    MuParams, OutputParams,
};
pub use logistic::{summarize_features, LogisticParams, SUMMARY_STATS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Irnn,
    GruForward,
    GruSimple,
    Logistic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Irnn,
        ModelKind::GruForward,
        ModelKind::GruSimple,
        ModelKind::Logistic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Irnn => "irnn",
            ModelKind::GruForward => "gru_forward",
            ModelKind::GruSimple => "gru_simple",
            ModelKind::Logistic => "logistic",
        }
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irnn" => Ok(ModelKind::Irnn),
            "gru_forward" => Ok(ModelKind::GruForward),
            "gru_simple" => Ok(ModelKind::GruSimple),
            "logistic" => Ok(ModelKind::Logistic),
            other => Err(Error::Config(format!(
                "unknown model {other:?}; expected irnn, gru_forward, gru_simple or logistic"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Any trainable model in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
pub enum Model {
    Irnn(IrnnParams),
    GruForward(DenseGruParams),
    GruSimple(DenseGruParams),
    Logistic(LogisticParams),
}

/// Size card for parameter-parity checks and logging.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub d: usize,
    pub hidden: usize,
    pub input_width: usize,
    pub param_count: usize,
}

impl Model {
    pub fn init(
        kind: ModelKind,
        d: usize,
        config: IrnnConfig,
        rng: &mut impl rand::Rng,
    ) -> Model {
        match kind {
            ModelKind::Irnn => Model::Irnn(IrnnParams::init(d, config, rng)),
            ModelKind::GruForward => {
                Model::GruForward(DenseGruParams::init(d, GruInput::Values, rng))
            }
            ModelKind::GruSimple => {
                Model::GruSimple(DenseGruParams::init(d, GruInput::ValuesElapsedMask, rng))
            }
            ModelKind::Logistic => Model::Logistic(LogisticParams::init(d, rng)),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Irnn(_) => ModelKind::Irnn,
            Model::GruForward(_) => ModelKind::GruForward,
            Model::GruSimple(_) => ModelKind::GruSimple,
            Model::Logistic(_) => ModelKind::Logistic,
        }
    }

    /// Number of input features D.
    pub fn d(&self) -> usize {
        match self {
            Model::Irnn(p) => p.d,
            Model::GruForward(p) | Model::GruSimple(p) => match p.input {
                GruInput::Values => p.input_width,
                GruInput::ValuesElapsedMask => p.input_width / 3,
            },
            Model::Logistic(p) => p.d,
        }
    }

    pub fn summary(&self) -> ModelSummary {
        let (hidden, input_width) = match self {
            Model::Irnn(p) => (p.d, p.d),
            Model::GruForward(p) | Model::GruSimple(p) => (p.hidden, p.input_width),
            Model::Logistic(p) => (0, 6 * p.d),
        };
        ModelSummary {
            kind: self.kind(),
            d: self.d(),
            hidden,
            input_width,
            param_count: self.param_count(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        match self {
            Model::Irnn(p) => p.tensors(),
            Model::GruForward(p) | Model::GruSimple(p) => p.tensors(),
            Model::Logistic(p) => p.tensors(),
        }
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Model::Irnn(p) => p.tensors_mut(),
            Model::GruForward(p) | Model::GruSimple(p) => p.tensors_mut(),
            Model::Logistic(p) => p.tensors_mut(),
        }
    }

    /// The logit at the sample's final valid step.
    pub fn final_logit(&self, sample: &TimeSeriesSample) -> Result<f64> {
        let mut tape = Tape::new();
        let logit = self.final_logit_on_tape(sample, &mut tape)?.0;
        Ok(tape.value(logit).data()[0])
    }

    /// Final-step BCE loss and its gradient, aligned with `tensors()`.
    pub fn loss_grad(&self, sample: &TimeSeriesSample) -> Result<(f64, Vec<Tensor>)> {
        let mut tape = Tape::new();
        let (logit, param_ids) = self.final_logit_on_tape(sample, &mut tape)?;
        let loss = tape.bce_with_logit(logit, sample.label as f64)?;
        let grads = tape.backward(loss)?;
        let out = param_ids
            .iter()
            .zip(self.tensors())
            .map(|(id, t)| {
                grads
                    .param_grad(*id)
                    .cloned()
                    .unwrap_or_else(|| Tensor::zeros_like(t))
            })
            .collect();
        Ok((tape.value(loss).data()[0], out))
    }

    fn final_logit_on_tape(
        &self,
        sample: &TimeSeriesSample,
        tape: &mut Tape,
    ) -> Result<(crate::ndcore::NodeId, Vec<crate::ndcore::NodeId>)> {
        match self {
            Model::Irnn(p) => {
                let nodes = irnn_forward_on_tape(p, sample, tape)?;
                let logit = *nodes.logits.last().expect("valid_len >= 1");
                Ok((logit, nodes.bound.param_ids()))
            }
            Model::GruForward(p) | Model::GruSimple(p) => {
                let nodes = dense_gru_forward_on_tape(p, sample, tape)?;
                let logit = *nodes.logits.last().expect("valid_len >= 1");
                Ok((logit, nodes.bound.param_ids()))
            }
            Model::Logistic(p) => {
                let summary = summarize_features(sample);
                let (logit, ids) = p.logit_on_tape(summary, tape)?;
                Ok((logit, ids.to_vec()))
            }
        }
    }

    /// Per-step hidden-state trace for correlation diagnostics: ĥ for
    /// the I-RNN, h for the dense baselines. Logistic has no trace.
    pub fn hidden_trace(&self, sample: &TimeSeriesSample) -> Result<Vec<Vec<f64>>> {
        match self {
            Model::Irnn(p) => Ok(irnn_forward(p, sample)?.h_hat),
            Model::GruForward(p) | Model::GruSimple(p) => Ok(dense_gru_forward(p, sample)?.h),
            Model::Logistic(_) => Err(Error::Unsupported(
                "logistic model has no hidden-state trace".into(),
            )),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = WeightsFile {
            schema_version: 1,
            model: self.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let file: WeightsFile = serde_json::from_str(&text)?;
        if file.schema_version != 1 {
            return Err(Error::Data(format!(
                "unsupported weights schema_version {}",
                file.schema_version
            )));
        }
        Ok(file.model)
    }
}

/// On-disk weights document. 64-bit values round-trip bit-exactly
/// through the shortest-round-trip decimal encoding.
#[derive(Debug, Serialize, Deserialize)]
struct WeightsFile {
    schema_version: u32,
    #[serde(flatten)]
    model: Model,
}
