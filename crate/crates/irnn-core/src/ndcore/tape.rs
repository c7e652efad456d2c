//! Reverse-mode tape.
//!
//! Operations are recorded in topological order during the forward pass;
//! `backward` replays them in reverse, accumulating adjoints per node.
//! A tape is a single-threaded unit of work: one sample's forward pass
//! and (optionally) its backward pass. Independent samples get
//! independent tapes, and their gradients are summed by the caller.

use crate::error::{Error, Result};

use super::tensor::{Storage, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf { param: bool },
    DiagAffine { w: NodeId, x: NodeId, b: NodeId },
    DenseAffine { w: NodeId, x: NodeId, b: NodeId },
    Sigmoid { input: NodeId },
    Tanh { input: NodeId },
    ExpNeg { input: NodeId },
    Max0 { input: NodeId },
    Hadamard { a: NodeId, b: NodeId },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    OneMinus { input: NodeId },
    Sum { input: NodeId },
    Scale { input: NodeId, factor: f64 },
    BceWithLogit { logit: NodeId, label: f64 },
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
}

/// Elementwise operation kinds; unary kinds take one operand, binary two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementwise {
    Sigmoid,
    Tanh,
    ExpNeg,
    Max0,
    OneMinus,
    Hadamard,
    Add,
    Sub,
}

/// Gradients of a scalar output with respect to parameter leaves.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient for a parameter leaf; `None` if the parameter does not
    /// reach the output (treated as zero by callers).
    pub fn param_grad(&self, id: NodeId) -> Option<&Tensor> {
        self.grads.get(id.index()).and_then(|g| g.as_ref())
    }
}

impl NodeId {
    fn index(self) -> usize {
        self.0
    }
}

/// Recording tape for one forward/backward pass.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Record a constant input leaf (receives no gradient).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf { param: false }, value)
    }

    /// Record a trainable parameter leaf.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf { param: true }, value)
    }

    /// `w ⊙ x + b` for length-D vectors. This is the identity-masked
    /// matrix product: equal to `dense_affine(diag(w), x, b)` with O(D)
    /// work, and component d of the output depends only on component d
    /// of the inputs.
    pub fn diag_affine(&mut self, w: NodeId, x: NodeId, b: NodeId) -> Result<NodeId> {
        let (wv, xv, bv) = (self.value(w), self.value(x), self.value(b));
        if !(wv.same_shape(xv) && wv.same_shape(bv) && wv.shape().len() == 1) {
            return Err(Error::dim(
                "diag_affine",
                format!("w {:?}, x {:?}, b {:?}", wv.shape(), xv.shape(), bv.shape()),
            ));
        }
        let data: Storage = wv
            .data()
            .iter()
            .zip(xv.data())
            .zip(bv.data())
            .map(|((w, x), b)| w * x + b)
            .collect();
        let value = Tensor::from_storage(&[data.len()], data);
        Ok(self.push(Op::DiagAffine { w, x, b }, value))
    }

    /// `W x + b` with `W` of shape rows×cols, `x` length cols, `b` length rows.
    pub fn dense_affine(&mut self, w: NodeId, x: NodeId, b: NodeId) -> Result<NodeId> {
        let (wv, xv, bv) = (self.value(w), self.value(x), self.value(b));
        let ok = wv.shape().len() == 2
            && xv.shape().len() == 1
            && bv.shape().len() == 1
            && wv.shape()[1] == xv.shape()[0]
            && wv.shape()[0] == bv.shape()[0];
        if !ok {
            return Err(Error::dim(
                "dense_affine",
                format!("W {:?}, x {:?}, b {:?}", wv.shape(), xv.shape(), bv.shape()),
            ));
        }
        let (rows, cols) = (wv.shape()[0], wv.shape()[1]);
        let mut data = Storage::with_capacity(rows);
        for r in 0..rows {
            let row = &wv.data()[r * cols..(r + 1) * cols];
            let mut acc = bv.data()[r];
            for (wi, xi) in row.iter().zip(xv.data()) {
                acc += wi * xi;
            }
            data.push(acc);
        }
        let value = Tensor::from_storage(&[rows], data);
        Ok(self.push(Op::DenseAffine { w, x, b }, value))
    }

    pub fn sigmoid(&mut self, input: NodeId) -> NodeId {
        let value = self.map_unary(input, sigmoid);
        self.push(Op::Sigmoid { input }, value)
    }

    pub fn tanh(&mut self, input: NodeId) -> NodeId {
        let value = self.map_unary(input, f64::tanh);
        self.push(Op::Tanh { input }, value)
    }

    /// `exp(−x)`. Errors if the result overflows.
    pub fn exp_neg(&mut self, input: NodeId) -> Result<NodeId> {
        let value = self.map_unary(input, |v| (-v).exp());
        if !value.data().iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("exp_neg overflow".into()));
        }
        Ok(self.push(Op::ExpNeg { input }, value))
    }

    /// `max(0, x)` rectifier.
    pub fn max0(&mut self, input: NodeId) -> NodeId {
        let value = self.map_unary(input, |v| v.max(0.0));
        self.push(Op::Max0 { input }, value)
    }

    pub fn one_minus(&mut self, input: NodeId) -> NodeId {
        let value = self.map_unary(input, |v| 1.0 - v);
        self.push(Op::OneMinus { input }, value)
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.map_binary("hadamard", a, b, |x, y| x * y)?;
        Ok(self.push(Op::Hadamard { a, b }, value))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.map_binary("add", a, b, |x, y| x + y)?;
        Ok(self.push(Op::Add { a, b }, value))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.map_binary("sub", a, b, |x, y| x - y)?;
        Ok(self.push(Op::Sub { a, b }, value))
    }

    /// Sum of all entries, as a length-1 tensor.
    pub fn sum(&mut self, input: NodeId) -> NodeId {
        let total: f64 = self.value(input).data().iter().sum();
        let value = Tensor::from_storage(&[1], smallvec::smallvec![total]);
        self.push(Op::Sum { input }, value)
    }

    /// Scalar-times-tensor; the only broadcasting the tape performs.
    pub fn scale(&mut self, input: NodeId, factor: f64) -> NodeId {
        let value = self.map_unary(input, |v| factor * v);
        self.push(Op::Scale { input, factor }, value)
    }

    /// Numerically stable binary cross entropy on a length-1 logit:
    /// `max(l,0) − l·y + ln(1+exp(−|l|))`. Gradient is `σ(l) − y`.
    pub fn bce_with_logit(&mut self, logit: NodeId, label: f64) -> Result<NodeId> {
        if self.value(logit).len() != 1 {
            return Err(Error::dim(
                "bce_with_logit",
                format!("logit shape {:?}", self.value(logit).shape()),
            ));
        }
        if label != 0.0 && label != 1.0 {
            return Err(Error::Contract(format!("label must be 0 or 1, got {label}")));
        }
        let l = self.value(logit).data()[0];
        let loss = l.max(0.0) - l * label + (-l.abs()).exp().ln_1p();
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("bce loss not finite at logit {l}")));
        }
        let value = Tensor::from_storage(&[1], smallvec::smallvec![loss]);
        Ok(self.push(Op::BceWithLogit { logit, label }, value))
    }

    /// Dispatch by kind; unary kinds expect one operand, binary two.
    pub fn elementwise(&mut self, kind: Elementwise, operands: &[NodeId]) -> Result<NodeId> {
        let one = |ops: &[NodeId]| -> Result<NodeId> {
            match ops {
                [a] => Ok(*a),
                _ => Err(Error::Contract(format!(
                    "{kind:?} takes 1 operand, got {}",
                    ops.len()
                ))),
            }
        };
        let two = |ops: &[NodeId]| -> Result<(NodeId, NodeId)> {
            match ops {
                [a, b] => Ok((*a, *b)),
                _ => Err(Error::Contract(format!(
                    "{kind:?} takes 2 operands, got {}",
                    ops.len()
                ))),
            }
        };
        match kind {
            Elementwise::Sigmoid => Ok(self.sigmoid(one(operands)?)),
            Elementwise::Tanh => Ok(self.tanh(one(operands)?)),
            Elementwise::ExpNeg => self.exp_neg(one(operands)?),
            Elementwise::Max0 => Ok(self.max0(one(operands)?)),
            Elementwise::OneMinus => Ok(self.one_minus(one(operands)?)),
            Elementwise::Hadamard => {
                let (a, b) = two(operands)?;
                self.hadamard(a, b)
            }
            Elementwise::Add => {
                let (a, b) = two(operands)?;
                self.add(a, b)
            }
            Elementwise::Sub => {
                let (a, b) = two(operands)?;
                self.sub(a, b)
            }
        }
    }

    /// Reverse sweep from a scalar output. Returns gradients for every
    /// parameter leaf; non-parameter leaves receive none. Accumulation
    /// order is fixed by node id, so results are bitwise deterministic.
    pub fn backward(&self, output: NodeId) -> Result<Gradients> {
        if self.value(output).len() != 1 {
            return Err(Error::Contract(format!(
                "backward requires a scalar output, got shape {:?}",
                self.value(output).shape()
            )));
        }
        let mut adjoint: Vec<Option<Storage>> = vec![None; self.nodes.len()];
        adjoint[output.0] = Some(smallvec::smallvec![1.0]);

        for id in (0..=output.0).rev() {
            let Some(g) = adjoint[id].take() else {
                continue;
            };
            match self.nodes[id].op {
                Op::Leaf { param } => {
                    if param {
                        adjoint[id] = Some(g);
                    }
                }
                Op::DiagAffine { w, x, b } => {
                    accumulate_mul(&mut adjoint, w, &g, self.value(x).data());
                    accumulate_mul(&mut adjoint, x, &g, self.value(w).data());
                    accumulate(&mut adjoint, b, &g);
                }
                Op::DenseAffine { w, x, b } => {
                    let wv = self.value(w);
                    let (rows, cols) = (wv.shape()[0], wv.shape()[1]);
                    let xv = self.value(x).data();
                    let gw = slot(&mut adjoint, w, rows * cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            gw[r * cols + c] += g[r] * xv[c];
                        }
                    }
                    let wd = wv.data();
                    let gx = slot(&mut adjoint, x, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            gx[c] += wd[r * cols + c] * g[r];
                        }
                    }
                    accumulate(&mut adjoint, b, &g);
                }
                Op::Sigmoid { input } => {
                    let s = self.nodes[id].value.data();
                    let local: Storage =
                        g.iter().zip(s).map(|(gi, si)| gi * si * (1.0 - si)).collect();
                    accumulate(&mut adjoint, input, &local);
                }
                Op::Tanh { input } => {
                    let t = self.nodes[id].value.data();
                    let local: Storage =
                        g.iter().zip(t).map(|(gi, ti)| gi * (1.0 - ti * ti)).collect();
                    accumulate(&mut adjoint, input, &local);
                }
                Op::ExpNeg { input } => {
                    let e = self.nodes[id].value.data();
                    let local: Storage = g.iter().zip(e).map(|(gi, ei)| -gi * ei).collect();
                    accumulate(&mut adjoint, input, &local);
                }
                Op::Max0 { input } => {
                    // Subgradient 0 at the kink.
                    let x = self.value(input).data();
                    let local: Storage = g
                        .iter()
                        .zip(x)
                        .map(|(gi, xi)| if *xi > 0.0 { *gi } else { 0.0 })
                        .collect();
                    accumulate(&mut adjoint, input, &local);
                }
                Op::OneMinus { input } => {
                    let local: Storage = g.iter().map(|gi| -gi).collect();
                    accumulate(&mut adjoint, input, &local);
                }
                Op::Hadamard { a, b } => {
                    accumulate_mul(&mut adjoint, a, &g, self.value(b).data());
                    accumulate_mul(&mut adjoint, b, &g, self.value(a).data());
                }
                Op::Add { a, b } => {
                    accumulate(&mut adjoint, a, &g);
                    accumulate(&mut adjoint, b, &g);
                }
                Op::Sub { a, b } => {
                    accumulate(&mut adjoint, a, &g);
                    let neg: Storage = g.iter().map(|gi| -gi).collect();
                    accumulate(&mut adjoint, b, &neg);
                }
                Op::Sum { input } => {
                    let n = self.value(input).len();
                    let gs = slot(&mut adjoint, input, n);
                    for gi in gs.iter_mut() {
                        *gi += g[0];
                    }
                }
                Op::Scale { input, factor } => {
                    let local: Storage = g.iter().map(|gi| factor * gi).collect();
                    accumulate(&mut adjoint, input, &local);
                }
                Op::BceWithLogit { logit, label } => {
                    let l = self.value(logit).data()[0];
                    let local: Storage = smallvec::smallvec![g[0] * (sigmoid(l) - label)];
                    accumulate(&mut adjoint, logit, &local);
                }
            }
        }

        let grads = self
            .nodes
            .iter()
            .zip(adjoint)
            .map(|(node, adj)| match node.op {
                Op::Leaf { param: true } => {
                    let data =
                        adj.unwrap_or_else(|| smallvec::smallvec![0.0; node.value.len()]);
                    Some(Tensor::from_storage(node.value.shape(), data))
                }
                _ => None,
            })
            .collect();
        Ok(Gradients { grads })
    }

    fn push(&mut self, op: Op, value: Tensor) -> NodeId {
        debug_assert!(value.data().iter().all(|v| v.is_finite()));
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    fn map_unary(&self, input: NodeId, f: impl Fn(f64) -> f64) -> Tensor {
        let v = self.value(input);
        let data: Storage = v.data().iter().map(|x| f(*x)).collect();
        Tensor::from_storage(v.shape(), data)
    }

    fn map_binary(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor> {
        let (av, bv) = (self.value(a), self.value(b));
        if !av.same_shape(bv) {
            return Err(Error::dim(
                op,
                format!("{:?} vs {:?}", av.shape(), bv.shape()),
            ));
        }
        let data: Storage = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(x, y)| f(*x, *y))
            .collect();
        Ok(Tensor::from_storage(av.shape(), data))
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn slot<'a>(adjoint: &'a mut [Option<Storage>], id: NodeId, n: usize) -> &'a mut Storage {
    adjoint[id.0].get_or_insert_with(|| smallvec::smallvec![0.0; n])
}

fn accumulate(adjoint: &mut [Option<Storage>], id: NodeId, g: &[f64]) {
    let gs = adjoint[id.0].get_or_insert_with(|| smallvec::smallvec![0.0; g.len()]);
    for (acc, gi) in gs.iter_mut().zip(g) {
        *acc += gi;
    }
}

fn accumulate_mul(adjoint: &mut [Option<Storage>], id: NodeId, g: &[f64], other: &[f64]) {
    let gs = adjoint[id.0].get_or_insert_with(|| smallvec::smallvec![0.0; g.len()]);
    for ((acc, gi), oi) in gs.iter_mut().zip(g).zip(other) {
        *acc += gi * oi;
    }
}
