//! The I-RNN cell stack: diagonal-masked GRU, exponential decay to a
//! baseline, additive output head.
//!
//! Every recurrent weight matrix is identity-masked, i.e. diagonal, so
//! hidden unit d is a function of feature d alone. Between observations
//! the hidden state relaxes from its post-update value toward a baseline
//! at a rectified-linear rate driven by the per-feature elapsed time.
//! The prediction is a weighted sum of the per-feature states plus a
//! bias, which makes each feature's log-odds contribution explicit.

use serde::{Deserialize, Serialize};

use crate::datapipe::TimeSeriesSample;
use crate::error::{Error, Result};
use crate::ndcore::{NodeId, Tape, Tensor};

/// Diagonal GRU weights: each `w_*` is the diagonal of an
/// identity-masked D×D matrix, stored as a length-D vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedGruParams {
    pub w_ir: Tensor,
    pub w_iz: Tensor,
    pub w_in: Tensor,
    pub w_hr: Tensor,
    pub w_hz: Tensor,
    pub w_hn: Tensor,
    pub b_r: Tensor,
    pub b_z: Tensor,
    pub b_n: Tensor,
}

/// Baseline/decay weights; either constrained to diagonal (no feature
/// interactions) or a dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", content = "values", rename_all = "snake_case")]
pub enum DecayWeight {
    Diagonal(Tensor),
    Dense(Tensor),
}

impl DecayWeight {
    pub fn tensor(&self) -> &Tensor {
        match self {
            DecayWeight::Diagonal(t) | DecayWeight::Dense(t) => t,
        }
    }

    pub fn tensor_mut(&mut self) -> &mut Tensor {
        match self {
            DecayWeight::Diagonal(t) | DecayWeight::Dense(t) => t,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, DecayWeight::Diagonal(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuParams {
    pub weight: DecayWeight,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    /// Baseline parameters; `None` means a static baseline μ ≡ 0.
    pub mu: Option<MuParams>,
    pub gamma_weight: DecayWeight,
    pub b_gamma: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputParams {
    /// Per-feature output weights, length D.
    pub w_out: Tensor,
    /// Scalar bias, stored as a length-1 tensor.
    pub b_out: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrnnConfig {
    pub mu_diagonal: bool,
    pub mu_static: bool,
    pub gamma_diagonal: bool,
}

impl Default for IrnnConfig {
    fn default() -> Self {
        // Diagonal baseline and decay keep the feature-isolation
        // guarantee; dynamic baseline is the main formulation.
        IrnnConfig {
            mu_diagonal: true,
            mu_static: false,
            gamma_diagonal: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrnnParams {
    pub d: usize,
    pub config: IrnnConfig,
    pub gru: MaskedGruParams,
    pub decay: DecayParams,
    pub out: OutputParams,
}

/// Parameter leaves registered on a tape.
pub struct BoundIrnn {
    pub w_ir: NodeId,
    pub w_iz: NodeId,
    pub w_in: NodeId,
    pub w_hr: NodeId,
    pub w_hz: NodeId,
    pub w_hn: NodeId,
    pub b_r: NodeId,
    pub b_z: NodeId,
    pub b_n: NodeId,
    pub mu: Option<(NodeId, NodeId, bool)>, // (weight, bias, diagonal)
    pub gamma_weight: NodeId,
    pub gamma_diagonal: bool,
    pub b_gamma: NodeId,
    pub w_out: NodeId,
    pub b_out: NodeId,
    /// Shared all-zero length-D input, used as the zero bias.
    pub zeros_d: NodeId,
    pub d: usize,
}

impl BoundIrnn {
    /// Parameter node ids in the same canonical order as
    /// [`IrnnParams::tensors`].
    pub fn param_ids(&self) -> Vec<NodeId> {
        let mut v = vec![
            self.w_ir, self.w_iz, self.w_in, self.w_hr, self.w_hz, self.w_hn, self.b_r,
            self.b_z, self.b_n,
        ];
        if let Some((w, b, _)) = self.mu {
            v.push(w);
            v.push(b);
        }
        v.push(self.gamma_weight);
        v.push(self.b_gamma);
        v.push(self.w_out);
        v.push(self.b_out);
        v
    }
}

impl IrnnParams {
    /// Fresh parameters: weights uniform in [−1/√D, 1/√D], biases zero
    /// except the decay bias at 0.1 so the rectifier starts active.
    pub fn init(d: usize, config: IrnnConfig, rng: &mut impl rand::Rng) -> Self {
        let bound = 1.0 / (d as f64).sqrt();
        let gru = MaskedGruParams {
            w_ir: uniform_vector(d, bound, rng),
            w_iz: uniform_vector(d, bound, rng),
            w_in: uniform_vector(d, bound, rng),
            w_hr: uniform_vector(d, bound, rng),
            w_hz: uniform_vector(d, bound, rng),
            w_hn: uniform_vector(d, bound, rng),
            b_r: Tensor::zeros(vec![d]),
            b_z: Tensor::zeros(vec![d]),
            b_n: Tensor::zeros(vec![d]),
        };
        let mu = if config.mu_static {
            None
        } else {
            let weight = if config.mu_diagonal {
                DecayWeight::Diagonal(uniform_vector(d, bound, rng))
            } else {
                DecayWeight::Dense(uniform_matrix(d, d, bound, rng))
            };
            Some(MuParams {
                weight,
                bias: Tensor::zeros(vec![d]),
            })
        };
        let gamma_weight = if config.gamma_diagonal {
            DecayWeight::Diagonal(uniform_vector(d, bound, rng))
        } else {
            DecayWeight::Dense(uniform_matrix(d, d, bound, rng))
        };
        let decay = DecayParams {
            mu,
            gamma_weight,
            b_gamma: Tensor::from_parts(vec![d], vec![0.1; d]),
        };
        let out = OutputParams {
            w_out: uniform_vector(d, bound, rng),
            b_out: Tensor::zeros(vec![1]),
        };
        IrnnParams {
            d,
            config,
            gru,
            decay,
            out,
        }
    }

    /// All-zero parameters (useful for tests and as a degenerate model).
    pub fn zeros(d: usize, config: IrnnConfig) -> Self {
        let zd = || Tensor::zeros(vec![d]);
        IrnnParams {
            d,
            config,
            gru: MaskedGruParams {
                w_ir: zd(),
                w_iz: zd(),
                w_in: zd(),
                w_hr: zd(),
                w_hz: zd(),
                w_hn: zd(),
                b_r: zd(),
                b_z: zd(),
                b_n: zd(),
            },
            decay: DecayParams {
                mu: if config.mu_static {
                    None
                } else {
                    Some(MuParams {
                        weight: if config.mu_diagonal {
                            DecayWeight::Diagonal(zd())
                        } else {
                            DecayWeight::Dense(Tensor::zeros(vec![d, d]))
                        },
                        bias: zd(),
                    })
                },
                gamma_weight: if config.gamma_diagonal {
                    DecayWeight::Diagonal(zd())
                } else {
                    DecayWeight::Dense(Tensor::zeros(vec![d, d]))
                },
                b_gamma: zd(),
            },
            out: OutputParams {
                w_out: zd(),
                b_out: Tensor::zeros(vec![1]),
            },
        }
    }

    /// Parameter tensors in canonical order (matches `bind` and the
    /// gradient/optimizer layout).
    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut v = vec![
            &self.gru.w_ir,
            &self.gru.w_iz,
            &self.gru.w_in,
            &self.gru.w_hr,
            &self.gru.w_hz,
            &self.gru.w_hn,
            &self.gru.b_r,
            &self.gru.b_z,
            &self.gru.b_n,
        ];
        if let Some(mu) = &self.decay.mu {
            v.push(mu.weight.tensor());
            v.push(&mu.bias);
        }
        v.push(self.decay.gamma_weight.tensor());
        v.push(&self.decay.b_gamma);
        v.push(&self.out.w_out);
        v.push(&self.out.b_out);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut v = vec![
            &mut self.gru.w_ir,
            &mut self.gru.w_iz,
            &mut self.gru.w_in,
            &mut self.gru.w_hr,
            &mut self.gru.w_hz,
            &mut self.gru.w_hn,
            &mut self.gru.b_r,
            &mut self.gru.b_z,
            &mut self.gru.b_n,
        ];
        if let Some(mu) = &mut self.decay.mu {
            v.push(mu.weight.tensor_mut());
            v.push(&mut mu.bias);
        }
        v.push(self.decay.gamma_weight.tensor_mut());
        v.push(&mut self.decay.b_gamma);
        v.push(&mut self.out.w_out);
        v.push(&mut self.out.b_out);
        v
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Register every parameter as a tape leaf, in canonical order.
    pub fn bind(&self, tape: &mut Tape) -> BoundIrnn {
        let g = &self.gru;
        let w_ir = tape.param(g.w_ir.clone());
        let w_iz = tape.param(g.w_iz.clone());
        let w_in = tape.param(g.w_in.clone());
        let w_hr = tape.param(g.w_hr.clone());
        let w_hz = tape.param(g.w_hz.clone());
        let w_hn = tape.param(g.w_hn.clone());
        let b_r = tape.param(g.b_r.clone());
        let b_z = tape.param(g.b_z.clone());
        let b_n = tape.param(g.b_n.clone());
        let mu = self.decay.mu.as_ref().map(|mu| {
            (
                tape.param(mu.weight.tensor().clone()),
                tape.param(mu.bias.clone()),
                mu.weight.is_diagonal(),
            )
        });
        let gamma_weight = tape.param(self.decay.gamma_weight.tensor().clone());
        let b_gamma = tape.param(self.decay.b_gamma.clone());
        let w_out = tape.param(self.out.w_out.clone());
        let b_out = tape.param(self.out.b_out.clone());
        let zeros_d = tape.input(Tensor::zeros(vec![self.d]));
        BoundIrnn {
            w_ir,
            w_iz,
            w_in,
            w_hr,
            w_hz,
            w_hn,
            b_r,
            b_z,
            b_n,
            mu,
            gamma_weight,
            gamma_diagonal: self.decay.gamma_weight.is_diagonal(),
            b_gamma,
            w_out,
            b_out,
            zeros_d,
            d: self.d,
        }
    }
}

fn uniform_vector(n: usize, bound: f64, rng: &mut impl rand::Rng) -> Tensor {
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::from_parts(vec![n], data)
}

fn uniform_matrix(rows: usize, cols: usize, bound: f64, rng: &mut impl rand::Rng) -> Tensor {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Tensor::from_parts(vec![rows, cols], data)
}

/// One masked-GRU update:
/// `r = σ(w_ir⊙x + w_hr⊙h + b_r)`, `z` analogous,
/// `n = tanh(w_in⊙x + w_hn⊙(r⊙h) + b_n)`,
/// `h' = (1−z)⊙h + z⊙n`.
/// Component d of the output depends only on component d of the inputs.
pub fn masked_gru_step(
    tape: &mut Tape,
    p: &BoundIrnn,
    x: NodeId,
    h_prev: NodeId,
) -> Result<NodeId> {
    let rx = tape.diag_affine(p.w_ir, x, p.b_r)?;
    let rh = tape.hadamard(p.w_hr, h_prev)?;
    let r_pre = tape.add(rx, rh)?;
    let r = tape.sigmoid(r_pre);

    let zx = tape.diag_affine(p.w_iz, x, p.b_z)?;
    let zh = tape.hadamard(p.w_hz, h_prev)?;
    let z_pre = tape.add(zx, zh)?;
    let z = tape.sigmoid(z_pre);

    let gated = tape.hadamard(r, h_prev)?;
    let nx = tape.diag_affine(p.w_in, x, p.b_n)?;
    let nh = tape.hadamard(p.w_hn, gated)?;
    let n_pre = tape.add(nx, nh)?;
    let n = tape.tanh(n_pre);

    let keep = tape.one_minus(z);
    let old = tape.hadamard(keep, h_prev)?;
    let new = tape.hadamard(z, n)?;
    tape.add(old, new)
}

/// Decay toward the baseline:
/// `μ = W_μ x + b_μ` (0 if static), `γ = max(0, W_γ δ + b_γ)`,
/// `ĥ = h·exp(−γ) + μ·(1 − exp(−γ))`.
///
/// The convex-combination form is algebraically `μ + (h−μ)·exp(−γ)` and
/// makes `γ = 0 ⇒ ĥ = h` exact in floating point.
///
/// Returns `(ĥ, μ, γ)`; `μ` is `None` for a static baseline.
pub fn decay_step(
    tape: &mut Tape,
    p: &BoundIrnn,
    x: NodeId,
    h: NodeId,
    delta: NodeId,
) -> Result<(NodeId, Option<NodeId>, NodeId)> {
    let gamma_pre = if p.gamma_diagonal {
        tape.diag_affine(p.gamma_weight, delta, p.b_gamma)?
    } else {
        tape.dense_affine(p.gamma_weight, delta, p.b_gamma)?
    };
    let gamma = tape.max0(gamma_pre);
    let e = tape.exp_neg(gamma)?;

    match p.mu {
        None => {
            let h_hat = tape.hadamard(h, e)?;
            Ok((h_hat, None, gamma))
        }
        Some((mu_w, mu_b, diagonal)) => {
            let mu = if diagonal {
                tape.diag_affine(mu_w, x, mu_b)?
            } else {
                tape.dense_affine(mu_w, x, mu_b)?
            };
            let kept = tape.hadamard(h, e)?;
            let fade = tape.one_minus(e);
            let toward = tape.hadamard(mu, fade)?;
            let h_hat = tape.add(kept, toward)?;
            Ok((h_hat, Some(mu), gamma))
        }
    }
}

/// Additive output: `contributions[d] = w_out[d]·ĥ[d]`,
/// `logit = Σ_d contributions[d] + b_out`.
/// Returns `(logit, contributions)`.
pub fn additive_head(
    tape: &mut Tape,
    p: &BoundIrnn,
    h_hat: NodeId,
) -> Result<(NodeId, NodeId)> {
    let contributions = tape.diag_affine(p.w_out, h_hat, p.zeros_d)?;
    let total = tape.sum(contributions);
    let logit = tape.add(total, p.b_out)?;
    Ok((logit, contributions))
}

/// Node handles for every step of a forward pass, `t < valid_len`.
pub struct IrnnNodes {
    pub bound: BoundIrnn,
    pub logits: Vec<NodeId>,
    pub contributions: Vec<NodeId>,
    pub h: Vec<NodeId>,
    pub h_hat: Vec<NodeId>,
    pub mu: Vec<Option<NodeId>>,
    pub gamma: Vec<NodeId>,
}

/// Unroll the recurrence on a tape over the sample's valid steps.
/// The recurrent state is the decayed ĥ (ĥ₀ = 0); padded steps are
/// never executed.
pub fn irnn_forward_on_tape(
    params: &IrnnParams,
    sample: &TimeSeriesSample,
    tape: &mut Tape,
) -> Result<IrnnNodes> {
    if sample.valid_len == 0 {
        return Err(Error::Contract("sample has valid_len 0".into()));
    }
    if sample.n_features() != params.d {
        return Err(Error::dim(
            "irnn_forward",
            format!("model D = {}, sample D = {}", params.d, sample.n_features()),
        ));
    }
    let bound = params.bind(tape);
    let mut state = bound.zeros_d;
    let mut nodes = IrnnNodes {
        logits: Vec::with_capacity(sample.valid_len),
        contributions: Vec::with_capacity(sample.valid_len),
        h: Vec::with_capacity(sample.valid_len),
        h_hat: Vec::with_capacity(sample.valid_len),
        mu: Vec::with_capacity(sample.valid_len),
        gamma: Vec::with_capacity(sample.valid_len),
        bound,
    };
    for t in 0..sample.valid_len {
        let x = tape.input(Tensor::from_parts(
            vec![params.d],
            sample.values_row(t).to_vec(),
        ));
        let delta = tape.input(Tensor::from_parts(
            vec![params.d],
            sample.elapsed_row(t).to_vec(),
        ));
        let h = masked_gru_step(tape, &nodes.bound, x, state)?;
        let (h_hat, mu, gamma) = decay_step(tape, &nodes.bound, x, h, delta)?;
        let (logit, contributions) = additive_head(tape, &nodes.bound, h_hat)?;
        state = h_hat;
        nodes.h.push(h);
        nodes.h_hat.push(h_hat);
        nodes.mu.push(mu);
        nodes.gamma.push(gamma);
        nodes.logits.push(logit);
        nodes.contributions.push(contributions);
    }
    Ok(nodes)
}

/// Forward-pass values per valid step: logits, per-feature
/// contributions, and the internals (h, ĥ, μ, γ).
#[derive(Debug, Clone)]
pub struct IrnnTrace {
    pub logits: Vec<f64>,
    pub contributions: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    pub h_hat: Vec<Vec<f64>>,
    pub mu: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub bias: f64,
}

impl IrnnTrace {
    /// Prediction at the final valid time step.
    pub fn final_logit(&self) -> f64 {
        *self.logits.last().expect("valid_len >= 1")
    }
}

/// Run the recurrence and extract values.
pub fn irnn_forward(params: &IrnnParams, sample: &TimeSeriesSample) -> Result<IrnnTrace> {
    let mut tape = Tape::new();
    let nodes = irnn_forward_on_tape(params, sample, &mut tape)?;
    let grab = |ids: &[NodeId]| -> Vec<Vec<f64>> {
        ids.iter().map(|id| tape.value(*id).data().to_vec()).collect()
    };
    let zero_mu = vec![0.0; params.d];
    Ok(IrnnTrace {
        logits: nodes
            .logits
            .iter()
            .map(|id| tape.value(*id).data()[0])
            .collect(),
        contributions: grab(&nodes.contributions),
        h: grab(&nodes.h),
        h_hat: grab(&nodes.h_hat),
        mu: nodes
            .mu
            .iter()
            .map(|m| match m {
                Some(id) => tape.value(*id).data().to_vec(),
                None => zero_mu.clone(),
            })
            .collect(),
        gamma: grab(&nodes.gamma),
        bias: params.out.b_out.data()[0],
    })
}
