//! Dense GRU baselines.
//!
//! Two input conventions share one cell:
//! * forward-fill variant: the input at step t is the measurement row
//!   x_t (width D);
//! * simple variant: the input is the concatenation [x_t; δ_t; m_t]
//!   (width 3D), feeding the missingness pattern to the model.
//!
//! Hidden width equals the feature count so parameter budgets stay
//! comparable with the diagonal model. A dense scalar head reads the
//! hidden state.

use serde::{Deserialize, Serialize};

use crate::datapipe::TimeSeriesSample;
use crate::error::{Error, Result};
use crate::ndcore::{NodeId, Tape, Tensor};

/// Which rows feed the cell at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GruInput {
    /// Forward-filled measurements only (width D).
    Values,
    /// `[values; elapsed; mask]` concatenated (width 3D).
    ValuesElapsedMask,
}

/// Standard dense GRU parameters with `hidden` units over `input_width`
/// inputs, single-bias form, plus a scalar output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseGruParams {
    pub input_width: usize,
    pub hidden: usize,
    pub input: GruInput,
    pub w_ir: Tensor,
    pub w_iz: Tensor,
    pub w_in: Tensor,
    pub w_hr: Tensor,
    pub w_hz: Tensor,
    pub w_hn: Tensor,
    pub b_r: Tensor,
    pub b_z: Tensor,
    pub b_n: Tensor,
    /// Head weights, 1×hidden.
    pub head_w: Tensor,
    /// Head bias, length 1.
    pub head_b: Tensor,
}

pub struct BoundDenseGru {
    pub w_ir: NodeId,
    pub w_iz: NodeId,
    pub w_in: NodeId,
    pub w_hr: NodeId,
    pub w_hz: NodeId,
    pub w_hn: NodeId,
    pub b_r: NodeId,
    pub b_z: NodeId,
    pub b_n: NodeId,
    pub head_w: NodeId,
    pub head_b: NodeId,
    pub zeros_h: NodeId,
}

impl DenseGruParams {
    /// Hidden width = feature count D; input width depends on the
    /// variant. Weights uniform in [−1/√D, 1/√D], biases zero.
    pub fn init(d: usize, input: GruInput, rng: &mut impl rand::Rng) -> Self {
        let input_width = match input {
            GruInput::Values => d,
            GruInput::ValuesElapsedMask => 3 * d,
        };
        let hidden = d;
        let bound = 1.0 / (d as f64).sqrt();
        let mut mat = |rows: usize, cols: usize| {
            let data: Vec<f64> = (0..rows * cols)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            Tensor::from_parts(vec![rows, cols], data)
        };
        DenseGruParams {
            input_width,
            hidden,
            input,
            w_ir: mat(hidden, input_width),
            w_iz: mat(hidden, input_width),
            w_in: mat(hidden, input_width),
            w_hr: mat(hidden, hidden),
            w_hz: mat(hidden, hidden),
            w_hn: mat(hidden, hidden),
            b_r: Tensor::zeros(vec![hidden]),
            b_z: Tensor::zeros(vec![hidden]),
            b_n: Tensor::zeros(vec![hidden]),
            head_w: mat(1, hidden),
            head_b: Tensor::zeros(vec![1]),
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        vec![
            &self.w_ir,
            &self.w_iz,
            &self.w_in,
            &self.w_hr,
            &self.w_hz,
            &self.w_hn,
            &self.b_r,
            &self.b_z,
            &self.b_n,
            &self.head_w,
            &self.head_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.w_ir,
            &mut self.w_iz,
            &mut self.w_in,
            &mut self.w_hr,
            &mut self.w_hz,
            &mut self.w_hn,
            &mut self.b_r,
            &mut self.b_z,
            &mut self.b_n,
            &mut self.head_w,
            &mut self.head_b,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn bind(&self, tape: &mut Tape) -> BoundDenseGru {
        BoundDenseGru {
            w_ir: tape.param(self.w_ir.clone()),
            w_iz: tape.param(self.w_iz.clone()),
            w_in: tape.param(self.w_in.clone()),
            w_hr: tape.param(self.w_hr.clone()),
            w_hz: tape.param(self.w_hz.clone()),
            w_hn: tape.param(self.w_hn.clone()),
            b_r: tape.param(self.b_r.clone()),
            b_z: tape.param(self.b_z.clone()),
            b_n: tape.param(self.b_n.clone()),
            head_w: tape.param(self.head_w.clone()),
            head_b: tape.param(self.head_b.clone()),
            zeros_h: tape.input(Tensor::zeros(vec![self.hidden])),
        }
    }

    /// The row of inputs for step t under this variant.
    pub fn step_input(&self, sample: &TimeSeriesSample, t: usize) -> Vec<f64> {
        match self.input {
            GruInput::Values => sample.values_row(t).to_vec(),
            GruInput::ValuesElapsedMask => {
                let mut row =
                    Vec::with_capacity(3 * sample.n_features());
                row.extend_from_slice(sample.values_row(t));
                row.extend_from_slice(sample.elapsed_row(t));
                row.extend(sample.mask_row_f64(t));
                row
            }
        }
    }
}

impl BoundDenseGru {
    pub fn param_ids(&self) -> Vec<NodeId> {
        vec![
            self.w_ir, self.w_iz, self.w_in, self.w_hr, self.w_hz, self.w_hn, self.b_r,
            self.b_z, self.b_n, self.head_w, self.head_b,
        ]
    }
}

/// One dense GRU update, single-bias form.
pub fn dense_gru_step(
    tape: &mut Tape,
    p: &BoundDenseGru,
    x: NodeId,
    h_prev: NodeId,
) -> Result<NodeId> {
    let rx = tape.dense_affine(p.w_ir, x, p.b_r)?;
    let rh = tape.dense_affine(p.w_hr, h_prev, p.zeros_h)?;
    let r_pre = tape.add(rx, rh)?;
    let r = tape.sigmoid(r_pre);

    let zx = tape.dense_affine(p.w_iz, x, p.b_z)?;
    let zh = tape.dense_affine(p.w_hz, h_prev, p.zeros_h)?;
    let z_pre = tape.add(zx, zh)?;
    let z = tape.sigmoid(z_pre);

    let gated = tape.hadamard(r, h_prev)?;
    let nx = tape.dense_affine(p.w_in, x, p.b_n)?;
    let nh = tape.dense_affine(p.w_hn, gated, p.zeros_h)?;
    let n_pre = tape.add(nx, nh)?;
    let n = tape.tanh(n_pre);

    let keep = tape.one_minus(z);
    let old = tape.hadamard(keep, h_prev)?;
    let new = tape.hadamard(z, n)?;
    tape.add(old, new)
}

/// Per-step logits and hidden-state node handles.
pub struct DenseGruNodes {
    pub bound: BoundDenseGru,
    pub logits: Vec<NodeId>,
    pub h: Vec<NodeId>,
}

/// Unroll the dense GRU over the sample's valid steps with a scalar
/// head at each step.
pub fn dense_gru_forward_on_tape(
    params: &DenseGruParams,
    sample: &TimeSeriesSample,
    tape: &mut Tape,
) -> Result<DenseGruNodes> {
    if sample.valid_len == 0 {
        return Err(Error::Contract("sample has valid_len 0".into()));
    }
    let expected = match params.input {
        GruInput::Values => sample.n_features(),
        GruInput::ValuesElapsedMask => 3 * sample.n_features(),
    };
    if expected != params.input_width {
        return Err(Error::dim(
            "dense_gru_forward",
            format!(
                "model input width {} but sample provides {}",
                params.input_width, expected
            ),
        ));
    }
    let bound = params.bind(tape);
    let mut state = bound.zeros_h;
    let mut nodes = DenseGruNodes {
        logits: Vec::with_capacity(sample.valid_len),
        h: Vec::with_capacity(sample.valid_len),
        bound,
    };
    for t in 0..sample.valid_len {
        let x = tape.input(Tensor::from_parts(
            vec![params.input_width],
            params.step_input(sample, t),
        ));
        let h = dense_gru_step(tape, &nodes.bound, x, state)?;
        let logit = tape.dense_affine(nodes.bound.head_w, h, nodes.bound.head_b)?;
        state = h;
        nodes.h.push(h);
        nodes.logits.push(logit);
    }
    Ok(nodes)
}

/// Per-step logits and hidden states as plain values.
#[derive(Debug, Clone)]
pub struct DenseGruTrace {
    pub logits: Vec<f64>,
    pub h: Vec<Vec<f64>>,
}

impl DenseGruTrace {
    pub fn final_logit(&self) -> f64 {
        *self.logits.last().expect("valid_len >= 1")
    }
}

pub fn dense_gru_forward(
    params: &DenseGruParams,
    sample: &TimeSeriesSample,
) -> Result<DenseGruTrace> {
    let mut tape = Tape::new();
    let nodes = dense_gru_forward_on_tape(params, sample, &mut tape)?;
    Ok(DenseGruTrace {
        logits: nodes
            .logits
            .iter()
            .map(|id| tape.value(*id).data()[0])
            .collect(),
        h: nodes
            .h
            .iter()
            .map(|id| tape.value(*id).data().to_vec())
            .collect(),
    })
}
