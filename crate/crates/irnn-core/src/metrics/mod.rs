//! Ranking metrics and the hidden-state correlation diagnostic.

mod crosscorr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use crosscorr::{cross_correlation, CrossCorrelation};

/// Threshold metrics at the precision = recall operating point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub auc: f64,
    pub breakeven_threshold: f64,
    pub ppv: f64,
    pub specificity: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl EvalReport {
    pub fn from_scores(scores: &[f64], labels: &[u8]) -> Result<EvalReport> {
        let auc = auc(scores, labels)?;
        let be = breakeven(scores, labels)?;
        Ok(EvalReport {
            schema_version: 1,
            auc,
            breakeven_threshold: be.threshold,
            ppv: be.ppv,
            specificity: be.specificity,
            n_pos: labels.iter().filter(|l| **l == 1).count(),
            n_neg: labels.iter().filter(|l| **l == 0).count(),
        })
    }
}

fn check_two_classes(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|l| **l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "need both classes, got {n_pos} positive / {n_neg} negative"
        )));
    }
    Ok((n_pos, n_neg))
}

/// Area under the ROC curve as the Mann–Whitney statistic
/// `P(score⁺ > score⁻) + ½·P(tie)`.
///
/// Two routes guard each other: exact pair counting for n ≤ 10⁴ and the
/// tie-averaged rank-sum identity above that; both are exposed for
/// cross-checks.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() <= 10_000 {
        auc_pair_count(scores, labels)
    } else {
        auc_rank_sum(scores, labels)
    }
}

/// O(P·N) concordant-pair count; the oracle route.
pub fn auc_pair_count(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n_pos, n_neg) = check_two_classes(scores, labels)?;
    let pos: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l == 1)
        .map(|(s, _)| *s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, l)| **l == 0)
        .map(|(s, _)| *s)
        .collect();
    let mut favorable = 0.0_f64;
    for p in &pos {
        for n in &neg {
            if p > n {
                favorable += 1.0;
            } else if p == n {
                favorable += 0.5;
            }
        }
    }
    Ok(favorable / (n_pos as f64 * n_neg as f64))
}

/// O(n log n) rank-sum route with tie-averaged ranks.
pub fn auc_rank_sum(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (n_pos, n_neg) = check_two_classes(scores, labels)?;
    let n = scores.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    let mut rank_sum_pos = 0.0_f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Average 1-based rank over the tie group [i, j].
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for k in i..=j {
            if labels[order[k]] == 1 {
                rank_sum_pos += rank;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// The breakeven operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakeven {
    pub threshold: f64,
    pub ppv: f64,
    pub specificity: f64,
    /// The achieved |precision − recall| (0 when an exact breakeven
    /// threshold exists).
    pub gap: f64,
}

/// Scan all achievable thresholds (midpoints between consecutive
/// distinct scores plus below-min/above-max sentinels) and return the
/// one minimizing |precision − recall|, ties broken toward higher
/// specificity. Candidates with no predicted positives are skipped
/// (precision undefined). Prediction rule: score ≥ threshold.
pub fn breakeven(scores: &[f64], labels: &[u8]) -> Result<Breakeven> {
    check_two_classes(scores, labels)?;

    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    distinct.dedup();

    // Finite stand-ins for the ±∞ sentinels: they induce the same
    // all-positive / all-negative classifications and keep the report
    // JSON-representable.
    let mut candidates = vec![distinct[0] - 1.0];
    candidates.extend(distinct.windows(2).map(|w| (w[0] + w[1]) / 2.0));
    candidates.push(distinct[distinct.len() - 1] + 1.0);

    let n_pos = labels.iter().filter(|l| **l == 1).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;

    let mut best: Option<Breakeven> = None;
    for thr in candidates {
        let mut tp = 0.0;
        let mut fp = 0.0;
        for (s, l) in scores.iter().zip(labels) {
            if *s >= thr {
                if *l == 1 {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        if tp + fp == 0.0 {
            continue;
        }
        let precision = tp / (tp + fp);
        let recall = tp / n_pos;
        let specificity = (n_neg - fp) / n_neg;
        let gap = (precision - recall).abs();
        let better = match &best {
            None => true,
            Some(b) => {
                gap < b.gap - 1e-15 || ((gap - b.gap).abs() <= 1e-15 && specificity > b.specificity)
            }
        };
        if better {
            best = Some(Breakeven {
                threshold: thr,
                ppv: precision,
                specificity,
                gap,
            });
        }
    }
    best.ok_or_else(|| Error::UndefinedMetric("no achievable threshold".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn auc_worked_example() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0, 0, 1, 1];
        assert_eq!(auc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn separated_scores_give_one_and_ties_a_half() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.5, 0.5, 0.5, 0.5], &[0, 1, 0, 1]).unwrap(), 0.5);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(
            auc(&[0.1, 0.2], &[1, 1]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn pair_count_and_rank_sum_agree() {
        let mut rng = crate::rng::stream_rng(17, crate::rng::Stream::Shuffle);
        for _ in 0..30 {
            let n = rng.random_range(5..120);
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random_range(0..12) as f64) / 12.0) // many ties
                .collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let a = auc_pair_count(&scores, &labels).unwrap();
            let b = auc_rank_sum(&scores, &labels).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn auc_is_invariant_under_increasing_transforms() {
        let mut rng = crate::rng::stream_rng(18, crate::rng::Stream::Shuffle);
        let scores: Vec<f64> = (0..60).map(|_| rng.random_range(-3.0..3.0)).collect();
        let labels: Vec<u8> = (0..60).map(|i| (i % 3 == 0) as u8).collect();
        let base = auc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| s.tanh()).collect();
        let shifted: Vec<f64> = scores.iter().map(|s| 3.0 * s + 40.0).collect();
        assert_eq!(base, auc(&squashed, &labels).unwrap());
        assert_eq!(base, auc(&shifted, &labels).unwrap());
    }

    #[test]
    fn auc_of_negated_scores_complements() {
        let scores = [0.1, 0.2, 0.33, 0.47, 0.92, 0.6];
        let labels = [0, 1, 0, 1, 1, 0];
        let a = auc(&scores, &labels).unwrap();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let b = auc(&neg, &labels).unwrap();
        assert!((a + b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn breakeven_separable_case() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let labels = [1, 1, 0, 0];
        let be = breakeven(&scores, &labels).unwrap();
        assert_eq!(be.ppv, 1.0);
        assert_eq!(be.specificity, 1.0);
        assert_eq!(be.gap, 0.0);
        assert!(be.threshold > 0.2 && be.threshold < 0.8);
    }

    #[test]
    fn breakeven_reports_best_achievable_gap() {
        // Inverted scores: the scan still returns the best point rather
        // than assuming an exact breakeven exists.
        let scores = [0.9, 0.1];
        let labels = [0, 1];
        let be = breakeven(&scores, &labels).unwrap();
        assert_eq!(be.gap, 0.0); // precision = recall = 0 at the midpoint
        assert_eq!(be.ppv, 0.0);
    }

    /// Brute force over every threshold between and beyond all scores.
    fn breakeven_oracle(scores: &[f64], labels: &[u8]) -> Breakeven {
        let mut sorted: Vec<f64> = scores.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut thresholds = vec![sorted[0] - 1.0, sorted[sorted.len() - 1] + 1.0];
        for w in sorted.windows(2) {
            thresholds.push((w[0] + w[1]) / 2.0);
        }
        thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n_pos = labels.iter().filter(|l| **l == 1).count() as f64;
        let n_neg = labels.len() as f64 - n_pos;
        let mut best: Option<Breakeven> = None;
        for thr in thresholds {
            let tp = scores
                .iter()
                .zip(labels)
                .filter(|(s, l)| **s >= thr && **l == 1)
                .count() as f64;
            let fp = scores
                .iter()
                .zip(labels)
                .filter(|(s, l)| **s >= thr && **l == 0)
                .count() as f64;
            if tp + fp == 0.0 {
                continue;
            }
            let p = tp / (tp + fp);
            let r = tp / n_pos;
            let sp = (n_neg - fp) / n_neg;
            let gap = (p - r).abs();
            let better = match &best {
                None => true,
                Some(b) => {
                    gap < b.gap - 1e-15 || ((gap - b.gap).abs() <= 1e-15 && sp > b.specificity)
                }
            };
            if better {
                best = Some(Breakeven {
                    threshold: thr,
                    ppv: p,
                    specificity: sp,
                    gap,
                });
            }
        }
        best.unwrap()
    }

    #[test]
    fn breakeven_matches_exhaustive_scan() {
        let mut rng = crate::rng::stream_rng(19, crate::rng::Stream::Shuffle);
        for _ in 0..20 {
            let n = rng.random_range(10..200);
            let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let got = breakeven(&scores, &labels).unwrap();
            let want = breakeven_oracle(&scores, &labels);
            assert_eq!(got.ppv, want.ppv);
            assert_eq!(got.specificity, want.specificity);
            assert_eq!(got.gap, want.gap);
        }
    }
}
