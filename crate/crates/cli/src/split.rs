//! Seeded row selection: repetition subsamples and train/validation splits.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `round(fraction · n)` row indices drawn uniformly without replacement,
/// returned in ascending order.
pub fn subsample(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let m = ((fraction * n as f64).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = index::sample(&mut rng, n, m).into_vec();
    rows.sort_unstable();
    rows
}

/// Train/validation split stratified on the label. Each class sends
/// `round(valid_fraction · class size)` rows to validation. The training
/// side is never left empty. Both index lists are ascending.
pub fn stratified(labels: &[bool], valid_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut valid) = (Vec::new(), Vec::new());
    for class in [false, true] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rows.shuffle(&mut rng);
        let k = (valid_fraction * rows.len() as f64).round() as usize;
        valid.extend_from_slice(&rows[..k]);
        train.extend_from_slice(&rows[k..]);
    }
    if train.is_empty() {
        if let Some(r) = valid.pop() {
            train.push(r);
        }
    }
    train.sort_unstable();
    valid.sort_unstable();
    (train, valid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsample_size_and_order() {
        let rows = subsample(1_000, 0.25, 3);
        assert_eq!(rows.len(), 250);
        assert!(rows.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(rows, subsample(1_000, 0.25, 3));
        assert_ne!(rows, subsample(1_000, 0.25, 4));
        assert_eq!(subsample(10, 1.0, 0), (0..10).collect::<Vec<_>>());
        assert!(subsample(100, 0.001, 0).is_empty());
    }

    #[test]
    fn split_preserves_label_balance() {
        let labels: Vec<bool> = (0..1_000).map(|i| i % 10 == 0).collect();
        let (train, valid) = stratified(&labels, 0.2, 1);
        assert_eq!(train.len() + valid.len(), 1_000);
        assert_eq!(valid.len(), 200);
        assert_eq!(valid.iter().filter(|&&i| labels[i]).count(), 20);
        let mut all: Vec<usize> = train.iter().chain(&valid).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1_000).collect::<Vec<_>>());
    }

    #[test]
    fn tiny_inputs_keep_a_training_row() {
        let (train, valid) = stratified(&[true], 0.9, 0);
        assert_eq!((train, valid), (vec![0], vec![]));
    }
}
