//! Stratified dataset partitioning.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Partition indices `0..labels.len()` into `fractions.len()` groups,
/// stratified by label and deterministic given the seed.
///
/// Within each class, counts per partition are `floor(frac·n)` with the
/// remainder distributed by largest fractional part (ties toward the
/// earlier partition). Errors if the fractions do not sum to 1 or if any
/// partition ends up without one of the classes.
pub fn split_stratified(
    labels: &[u8],
    fractions: &[f64],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() {
        return Err(Error::Contract("at least one fraction required".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 || fractions.iter().any(|f| *f <= 0.0) {
        return Err(Error::Contract(format!(
            "fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }

    let mut rng = stream_rng(seed, Stream::Split);
    let mut partitions: Vec<Vec<usize>> = vec![Vec::new(); fractions.len()];

    for class in [0u8, 1u8] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == class)
            .map(|(i, _)| i)
            .collect();
        members.shuffle(&mut rng);

        let n = members.len();
        let mut counts: Vec<usize> = fractions.iter().map(|f| (f * n as f64) as usize).collect();
        let assigned: usize = counts.iter().sum();
        // Largest-remainder allocation of the leftover items.
        let mut remainders: Vec<(usize, f64)> = fractions
            .iter()
            .enumerate()
            .map(|(k, f)| (k, f * n as f64 - counts[k] as f64))
            .collect();
        remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        for i in 0..n - assigned {
            counts[remainders[i % remainders.len()].0] += 1;
        }

        let mut cursor = 0;
        for (k, count) in counts.iter().enumerate() {
            if *count == 0 {
                return Err(Error::Data(format!(
                    "class {class} absent from partition {k} at fractions {fractions:?}"
                )));
            }
            partitions[k].extend_from_slice(&members[cursor..cursor + count]);
            cursor += count;
        }
    }

    for p in &mut partitions {
        p.sort_unstable();
    }
    Ok(partitions)
}
