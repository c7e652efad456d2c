//! Tricube-weighted local linear regression (LOWESS-style smoother,
//! single pass, no robustness iterations).

/// Smooth `(x, y)` pairs and evaluate at `eval` points. For each
/// evaluation point the nearest `span` fraction of the data is fitted
/// with a weighted least-squares line under tricube weights
/// `w = (1 − (d/d_max)³)³`. Inputs need not be sorted.
pub fn lowess_smooth(x: &[f64], y: &[f64], eval: &[f64], span: f64) -> Vec<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n == 0 {
        return vec![0.0; eval.len()];
    }
    let span = span.clamp(0.0, 1.0);
    let window = ((span * n as f64).ceil() as usize).clamp(2.min(n), n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("finite x"));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();

    eval.iter()
        .map(|&x0| {
            // Nearest-`window` contiguous slice around x0.
            let pos = xs.partition_point(|v| *v < x0);
            let mut lo = pos.saturating_sub(window / 2);
            if lo + window > n {
                lo = n - window;
            }
            // Slide to truly nearest neighbors.
            while lo > 0 && x0 - xs[lo - 1] < xs[lo + window - 1] - x0 {
                lo -= 1;
            }
            while lo + window < n && xs[lo + window] - x0 < x0 - xs[lo] {
                lo += 1;
            }
            let xw = &xs[lo..lo + window];
            let yw = &ys[lo..lo + window];
            let d_max = xw
                .iter()
                .map(|v| (v - x0).abs())
                .fold(0.0_f64, f64::max)
                .max(1e-12);

            // Weighted linear fit.
            let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (xi, yi) in xw.iter().zip(yw) {
                let u = ((xi - x0).abs() / d_max).min(1.0);
                let w = (1.0 - u.powi(3)).powi(3);
                sw += w;
                swx += w * xi;
                swy += w * yi;
                swxx += w * xi * xi;
                swxy += w * xi * yi;
            }
            if sw <= 0.0 {
                return yw.iter().sum::<f64>() / window as f64;
            }
            let denom = sw * swxx - swx * swx;
            if denom.abs() < 1e-12 {
                swy / sw
            } else {
                let slope = (sw * swxy - swx * swy) / denom;
                let intercept = (swy - slope * swx) / sw;
                intercept + slope * x0
            }
        })
        .collect()
}
