//! Adam optimizer state and gradient clipping.

use crate::error::{Error, Result};
use crate::ndcore::Tensor;

/// Scale all gradients by `clip_norm / ‖g‖₂` when the global L2 norm
/// exceeds `clip_norm`; direction is preserved exactly.
pub fn clip_gradients(grads: &mut [Tensor], clip_norm: f64) -> Result<f64> {
    if clip_norm <= 0.0 {
        return Err(Error::Contract(format!(
            "clip_norm must be positive, got {clip_norm}"
        )));
    }
    let sq: f64 = grads
        .iter()
        .flat_map(|g| g.data().iter())
        .map(|v| v * v)
        .sum();
    let norm = sq.sqrt();
    if norm > clip_norm {
        let scale = clip_norm / norm;
        for g in grads.iter_mut() {
            for v in g.data_mut() {
                *v *= scale;
            }
        }
    }
    Ok(norm)
}

/// First/second moment accumulators per parameter tensor plus the step
/// counter for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[&Tensor]) -> Self {
        AdamState {
            m: params.iter().map(|t| Tensor::zeros_like(t)).collect(),
            v: params.iter().map(|t| Tensor::zeros_like(t)).collect(),
            step: 0,
        }
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut [&mut Tensor],
    state: &mut AdamState,
    grads: &[Tensor],
    lr: f64,
    betas: (f64, f64),
    eps: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Contract(format!(
            "adam_step: {} params, {} grads, state for {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = betas;
    let m_corr = 1.0 - b1.powi(t);
    let v_corr = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let p = params[i].data_mut();
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for j in 0..p.len() {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            let m_hat = m[j] / m_corr;
            let v_hat = v[j] / v_corr;
            p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grads(data: &[f64]) -> Vec<Tensor> {
        vec![Tensor::vector(data.to_vec()).unwrap()]
    }

    #[test]
    fn small_gradients_pass_unchanged() {
        let mut g = grads(&[0.3, 0.4]); // norm 0.5
        clip_gradients(&mut g, 1.0).unwrap();
        assert_eq!(g[0].data(), &[0.3, 0.4]);
    }

    #[test]
    fn large_gradients_are_rescaled_to_the_clip_norm() {
        let mut g = grads(&[3.0, 4.0]); // norm 5
        let norm = clip_gradients(&mut g, 1.0).unwrap();
        assert_eq!(norm, 5.0);
        assert!((g[0].data()[0] - 0.6).abs() < 1e-15);
        assert!((g[0].data()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_gradients_unchanged() {
        let mut g = grads(&[0.0, 0.0]);
        clip_gradients(&mut g, 1.0).unwrap();
        assert_eq!(g[0].data(), &[0.0, 0.0]);
    }

    #[test]
    fn clipping_never_increases_norm_and_preserves_direction() {
        for k in 1..20 {
            let mut g = grads(&[0.7 * k as f64, -0.3 * k as f64, 1.1]);
            let before: Vec<f64> = g[0].data().to_vec();
            let norm_before: f64 = before.iter().map(|v| v * v).sum::<f64>().sqrt();
            clip_gradients(&mut g, 2.5).unwrap();
            let after = g[0].data();
            let norm_after: f64 = after.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm_after <= norm_before + 1e-12);
            assert!(norm_after <= 2.5 + 1e-12);
            // Same direction: after = c · before with c ≥ 0.
            let c = if norm_before > 0.0 { norm_after / norm_before } else { 0.0 };
            for (a, b) in after.iter().zip(&before) {
                assert!((a - c * b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_step_moves_by_lr_signs() {
        let mut p = Tensor::vector(vec![1.0, -2.0]).unwrap();
        let refs = vec![&p];
        let mut state = AdamState::new(&refs);
        drop(refs);
        let g = grads(&[0.3, -0.7]);
        adam_step(
            &mut [&mut p],
            &mut state,
            &g,
            0.1,
            (0.9, 0.95),
            1e-8,
        )
        .unwrap();
        // Bias correction makes m̂/√v̂ ≈ sign(g) on the first step.
        assert!((p.data()[0] - (1.0 - 0.1)).abs() < 1e-6);
        assert!((p.data()[1] - (-2.0 + 0.1)).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_never_moves_parameters() {
        let mut p = Tensor::vector(vec![0.5]).unwrap();
        let refs = vec![&p];
        let mut state = AdamState::new(&refs);
        drop(refs);
        for _ in 0..10 {
            adam_step(
                &mut [&mut p],
                &mut state,
                &grads(&[0.0]),
                0.1,
                (0.9, 0.95),
                1e-8,
            )
            .unwrap();
        }
        assert_eq!(p.data(), &[0.5]);
    }

    #[test]
    fn two_steps_match_hand_tracked_accumulators() {
        // f(p) = p² from p = 1 with lr = 0.1 and betas (0.9, 0.95).
        let lr = 0.1;
        let (b1, b2) = (0.9, 0.95);
        let eps = 1e-8;

        // Hand arithmetic.
        let mut hp = 1.0_f64;
        let mut hm = 0.0_f64;
        let mut hv = 0.0_f64;
        for t in 1..=2 {
            let g = 2.0 * hp;
            hm = b1 * hm + (1.0 - b1) * g;
            hv = b2 * hv + (1.0 - b2) * g * g;
            let m_hat = hm / (1.0 - b1.powi(t));
            let v_hat = hv / (1.0 - b2.powi(t));
            hp -= lr * m_hat / (v_hat.sqrt() + eps);
        }

        let mut p = Tensor::vector(vec![1.0]).unwrap();
        let refs = vec![&p];
        let mut state = AdamState::new(&refs);
        drop(refs);
        for _ in 0..2 {
            let g = grads(&[2.0 * p.data()[0]]);
            adam_step(&mut [&mut p], &mut state, &g, lr, (b1, b2), eps).unwrap();
        }
        assert!((p.data()[0] - hp).abs() < 1e-15);
    }
}
