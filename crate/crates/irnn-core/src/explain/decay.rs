//! Decay-rate curves: γ_d as a function of normalized elapsed time.

use serde::Serialize;

use crate::datapipe::NormStats;
use crate::error::{Error, Result};
use crate::model::{DecayWeight, IrnnParams};

/// `γ_d(δ) = max(0, w_γ[d]·δ + b_γ[d])` on a grid of normalized elapsed
/// times, with the grid also expressed in raw hours via the feature's
/// elapsed-time scale.
#[derive(Debug, Clone, Serialize)]
pub struct DecayCurve {
    pub schema_version: u32,
    pub feature: String,
    pub delta_normalized: Vec<f64>,
    pub delta_hours: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl DecayCurve {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Evaluate feature `d`'s decay rate on `grid` (normalized elapsed
/// times in [0,1]). Requires the diagonal decay configuration; a dense
/// W_γ mixes features and has no per-feature curve.
pub fn decay_curve(
    params: &IrnnParams,
    stats: &NormStats,
    d: usize,
    grid: &[f64],
) -> Result<DecayCurve> {
    if d >= params.d {
        return Err(Error::Contract(format!(
            "feature index {d} out of range for D = {}",
            params.d
        )));
    }
    let DecayWeight::Diagonal(w) = &params.decay.gamma_weight else {
        return Err(Error::Unsupported(
            "decay curves need the diagonal decay configuration".into(),
        ));
    };
    let (w_d, b_d) = (w.data()[d], params.decay.b_gamma.data()[d]);
    let gamma: Vec<f64> = grid.iter().map(|delta| (w_d * delta + b_d).max(0.0)).collect();
    let max_elapsed = stats.features[d].max_elapsed;
    Ok(DecayCurve {
        schema_version: 1,
        feature: stats.features[d].name.clone(),
        delta_normalized: grid.to_vec(),
        delta_hours: grid.iter().map(|delta| delta * max_elapsed).collect(),
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datapipe::NormStats;
    use crate::model::{IrnnConfig, IrnnParams};
    use crate::ndcore::Tensor;

    fn grid() -> Vec<f64> {
        (0..=10).map(|i| i as f64 / 10.0).collect()
    }

    fn stats() -> NormStats {
        let mut s = NormStats::identity(&["f0".into()], 4);
        s.features[0].max_elapsed = 6.0;
        s
    }

    #[test]
    fn zero_weights_mean_no_decay() {
        let p = IrnnParams::zeros(1, IrnnConfig::default());
        let c = decay_curve(&p, &stats(), 0, &grid()).unwrap();
        assert!(c.gamma.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn linear_piece_and_hours_axis() {
        let mut p = IrnnParams::zeros(1, IrnnConfig::default());
        if let DecayWeight::Diagonal(w) = &mut p.decay.gamma_weight {
            w.data_mut()[0] = 1.0;
        }
        let c = decay_curve(&p, &stats(), 0, &grid()).unwrap();
        assert!((c.gamma[5] - 0.5).abs() < 1e-15);
        assert!((c.delta_hours[5] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rectifier_zeroes_the_tail() {
        // w = −2, b = 1: γ = 0 for δ ≥ 0.5.
        let mut p = IrnnParams::zeros(1, IrnnConfig::default());
        if let DecayWeight::Diagonal(w) = &mut p.decay.gamma_weight {
            w.data_mut()[0] = -2.0;
        }
        p.decay.b_gamma.data_mut()[0] = 1.0;
        let c = decay_curve(&p, &stats(), 0, &grid()).unwrap();
        for (delta, g) in c.delta_normalized.iter().zip(&c.gamma) {
            if *delta >= 0.5 {
                assert_eq!(*g, 0.0);
            } else {
                assert!((g - (1.0 - 2.0 * delta)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn curve_is_convex_piecewise_linear_nonnegative() {
        let mut p = IrnnParams::zeros(1, IrnnConfig::default());
        if let DecayWeight::Diagonal(w) = &mut p.decay.gamma_weight {
            w.data_mut()[0] = -1.3;
        }
        p.decay.b_gamma.data_mut()[0] = 0.4;
        let g = grid();
        let c = decay_curve(&p, &stats(), 0, &g).unwrap();
        for v in &c.gamma {
            assert!(*v >= 0.0);
        }
        // Convexity on the uniform grid: second differences ≥ 0.
        for w in c.gamma.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-12);
        }
    }

    #[test]
    fn dense_decay_config_is_unsupported() {
        let config = IrnnConfig {
            gamma_diagonal: false,
            ..IrnnConfig::default()
        };
        let mut p = IrnnParams::zeros(1, config);
        p.decay.gamma_weight = DecayWeight::Dense(Tensor::zeros(vec![1, 1]));
        assert!(matches!(
            decay_curve(&p, &stats(), 0, &grid()),
            Err(Error::Unsupported(_))
        ));
    }
}
