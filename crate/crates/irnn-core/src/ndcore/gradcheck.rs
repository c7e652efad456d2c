//! Central finite-difference verification of analytic gradients.

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Compare analytic gradients against central finite differences.
///
/// `value_fn` evaluates the scalar objective at the given parameters;
/// `analytic` holds the analytic gradient per parameter tensor, aligned
/// with `params`. Each parameter entry is perturbed by ±`step` and the
/// relative error is `|a − n| / max(1e-8, |a| + |n|)`. Returns the
/// maximum relative error over all parameter entries.
pub fn gradcheck<F>(
    mut value_fn: F,
    params: &[Tensor],
    analytic: &[Tensor],
    step: f64,
) -> Result<f64>
where
    F: FnMut(&[Tensor]) -> Result<f64>,
{
    if step <= 0.0 {
        return Err(Error::Contract(format!("step must be positive, got {step}")));
    }
    if params.len() != analytic.len() {
        return Err(Error::Contract(format!(
            "{} parameter tensors but {} gradient tensors",
            params.len(),
            analytic.len()
        )));
    }
    let mut work: Vec<Tensor> = params.to_vec();
    let mut max_err = 0.0_f64;
    for ti in 0..params.len() {
        if params[ti].len() != analytic[ti].len() {
            return Err(Error::Contract(format!(
                "gradient tensor {ti} has {} entries, parameter has {}",
                analytic[ti].len(),
                params[ti].len()
            )));
        }
        for i in 0..params[ti].len() {
            let orig = params[ti].data()[i];
            work[ti].data_mut()[i] = orig + step;
            let up = value_fn(&work)?;
            work[ti].data_mut()[i] = orig - step;
            let down = value_fn(&work)?;
            work[ti].data_mut()[i] = orig;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::Numeric(format!(
                    "objective not finite near parameter [{ti}][{i}]"
                )));
            }
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[ti].data()[i];
            let err = (a - numeric).abs() / f64::max(1e-8, a.abs() + numeric.abs());
            max_err = max_err.max(err);
        }
    }
    Ok(max_err)
}
