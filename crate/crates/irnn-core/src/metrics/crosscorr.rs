//! Feature / hidden-state cross-correlation.
//!
//! With diagonal masking each hidden unit should track its own feature,
//! so the D×H Pearson matrix over pooled valid timesteps comes out
//! close to diagonal; a dense recurrent model smears correlation across
//! all entries.

use crate::error::{Error, Result};

/// Pearson correlations between features (rows) and hidden units
/// (columns), pooled over all valid timesteps of all samples.
#[derive(Debug, Clone)]
pub struct CrossCorrelation {
    pub matrix: Vec<Vec<f64>>,
    /// Entry flagged when either pooled column has zero variance (the
    /// correlation is reported as 0 there).
    pub degenerate: Vec<Vec<bool>>,
    pub n_points: usize,
}

impl CrossCorrelation {
    /// Fraction of features whose own-unit correlation dominates every
    /// other unit's in absolute value.
    pub fn diagonal_dominance(&self) -> f64 {
        let d = self.matrix.len();
        if d == 0 {
            return 0.0;
        }
        let mut wins = 0;
        for i in 0..d {
            let own = self.matrix[i][i].abs();
            let best_other = (0..self.matrix[i].len())
                .filter(|j| *j != i)
                .map(|j| self.matrix[i][j].abs())
                .fold(0.0, f64::max);
            if own > best_other {
                wins += 1;
            }
        }
        wins as f64 / d as f64
    }
}

/// Pool per-sample traces and correlate.
///
/// `hidden[s]` is a T_s×H trace and `features[s]` a T_s×D trace for
/// sample s; row counts must agree per sample. Requires at least two
/// pooled rows.
pub fn cross_correlation(
    hidden: &[Vec<Vec<f64>>],
    features: &[Vec<Vec<f64>>],
) -> Result<CrossCorrelation> {
    if hidden.len() != features.len() {
        return Err(Error::Contract(format!(
            "{} hidden traces but {} feature traces",
            hidden.len(),
            features.len()
        )));
    }
    let mut rows_h: Vec<&[f64]> = Vec::new();
    let mut rows_f: Vec<&[f64]> = Vec::new();
    for (hs, fs) in hidden.iter().zip(features) {
        if hs.len() != fs.len() {
            return Err(Error::Contract(format!(
                "trace length mismatch: {} hidden rows vs {} feature rows",
                hs.len(),
                fs.len()
            )));
        }
        for (h, f) in hs.iter().zip(fs) {
            rows_h.push(h);
            rows_f.push(f);
        }
    }
    let n = rows_h.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "need at least 2 pooled timesteps, got {n}"
        )));
    }
    let h_width = rows_h[0].len();
    let f_width = rows_f[0].len();

    let column = |rows: &[&[f64]], j: usize| -> Vec<f64> {
        rows.iter().map(|r| r[j]).collect()
    };
    let moments = |xs: &[f64]| -> (f64, f64) {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
        (mean, var)
    };

    let f_cols: Vec<(Vec<f64>, f64, f64)> = (0..f_width)
        .map(|d| {
            let c = column(&rows_f, d);
            let (m, v) = moments(&c);
            (c, m, v)
        })
        .collect();
    let h_cols: Vec<(Vec<f64>, f64, f64)> = (0..h_width)
        .map(|j| {
            let c = column(&rows_h, j);
            let (m, v) = moments(&c);
            (c, m, v)
        })
        .collect();

    // Constant up to accumulated rounding counts as zero variance.
    let essentially_zero = |var: f64, mean: f64| {
        var <= (1e-12 * (1.0 + mean.abs())).powi(2) * n as f64
    };

    let mut matrix = vec![vec![0.0; h_width]; f_width];
    let mut degenerate = vec![vec![false; h_width]; f_width];
    for (d, (fc, fm, fv)) in f_cols.iter().enumerate() {
        for (j, (hc, hm, hv)) in h_cols.iter().enumerate() {
            if essentially_zero(*fv, *fm) || essentially_zero(*hv, *hm) {
                degenerate[d][j] = true;
                continue;
            }
            let cov: f64 = fc
                .iter()
                .zip(hc)
                .map(|(x, y)| (x - fm) * (y - hm))
                .sum();
            matrix[d][j] = (cov / (fv * hv).sqrt()).clamp(-1.0, 1.0);
        }
    }
    Ok(CrossCorrelation {
        matrix,
        degenerate,
        n_points: n,
    })
}
