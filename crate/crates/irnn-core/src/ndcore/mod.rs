//! Minimal dense numeric core with reverse-mode differentiation.
//!
//! The operation set is deliberately small: diagonal and dense affine
//! maps plus the elementwise functions the recurrent cells use. All
//! arithmetic is 64-bit and the tape replays gradients in a fixed order,
//! so forward values and gradients are bitwise reproducible.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::gradcheck;
pub use tape::{Elementwise, Gradients, NodeId, Tape};
pub use tensor::Tensor;

pub(crate) use tape::sigmoid;
