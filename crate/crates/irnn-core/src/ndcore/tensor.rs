//! Dense row-major f64 tensors.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Inline capacity for tensor storage; recurrent state vectors for
/// typical feature counts live on the stack, which keeps the tape free
/// of per-node heap traffic.
pub(crate) const INLINE: usize = 8;

pub(crate) type Storage = SmallVec<[f64; INLINE]>;
type Shape = SmallVec<[usize; 2]>;

/// A dense tensor of 64-bit reals, stored row-major.
///
/// Invariants: the product of `shape` equals the data length and every
/// entry is finite. In practice only vectors (rank 1) and matrices
/// (rank 2) occur here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Shape,
    data: Storage,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dim(
                "tensor",
                format!("shape {shape:?} holds {expected} entries, got {}", data.len()),
            ));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("tensor entries must be finite".into()));
        }
        Ok(Tensor {
            shape: Shape::from_vec(shape),
            data: Storage::from_vec(data),
        })
    }

    pub fn vector(data: Vec<f64>) -> Result<Self> {
        let n = data.len();
        Tensor::new(vec![n], data)
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn scalar(value: f64) -> Result<Self> {
        Tensor::new(vec![1], vec![value])
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: Shape::from_vec(shape),
            data: smallvec::smallvec![0.0; n],
        }
    }

    pub fn zeros_like(other: &Tensor) -> Self {
        Tensor {
            shape: other.shape.clone(),
            data: smallvec::smallvec![0.0; other.data.len()],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// The single entry of a length-1 tensor.
    pub fn item(&self) -> Result<f64> {
        if self.data.len() != 1 {
            return Err(Error::Contract(format!(
                "item() on tensor of shape {:?}",
                self.shape
            )));
        }
        Ok(self.data[0])
    }

    pub(crate) fn same_shape(&self, other: &Tensor) -> bool {
        self.shape == other.shape
    }

    /// Internal constructor for op outputs whose shape is known correct.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            shape: Shape::from_vec(shape),
            data: Storage::from_vec(data),
        }
    }

    /// Internal constructor from inline storage.
    pub(crate) fn from_storage(shape: &[usize], data: Storage) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Tensor {
            shape: Shape::from_slice(shape),
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_product_must_match_data_len() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(vec![2, 2], vec![1.0; 4]).is_ok());
    }

    #[test]
    fn non_finite_entries_rejected() {
        assert!(Tensor::vector(vec![1.0, f64::NAN]).is_err());
        assert!(Tensor::vector(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn item_requires_single_entry() {
        assert_eq!(Tensor::scalar(3.5).unwrap().item().unwrap(), 3.5);
        assert!(Tensor::vector(vec![1.0, 2.0]).unwrap().item().is_err());
    }

    #[test]
    fn serialization_is_shape_and_data() {
        let t = Tensor::matrix(1, 2, vec![0.1, 0.2]).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(json, r#"{"shape":[1,2],"data":[0.1,0.2]}"#);
        let back: Tensor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
