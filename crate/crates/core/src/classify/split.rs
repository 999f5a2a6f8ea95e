use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ClassifyError;

/// Shuffles with a seeded ChaCha8 stream and cuts into train / validation /
/// test. The first two sizes are `round(ratio * n)`; test takes the rest.
pub fn split_dataset<T: Clone>(items: &[T], ratios: [f64; 3], seed: u64) -> Result<[Vec<T>; 3], ClassifyError> {
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(ClassifyError::InvalidRatios(ratios));
    }
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((ratios[0] * n as f64).round() as usize).min(n);
    let n_val = ((ratios[1] * n as f64).round() as usize).min(n - n_train);
    let take = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect::<Vec<T>>();
    Ok([
        take(&order[..n_train]),
        take(&order[n_train..n_train + n_val]),
        take(&order[n_train + n_val..]),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn sizes_and_partition() {
        let items: Vec<usize> = (0..1763).collect();
        let [a, b, c] = split_dataset(&items, [0.6, 0.2, 0.2], 42).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (1058, 353, 352));
        let all: BTreeSet<usize> = a.iter().chain(&b).chain(&c).copied().collect();
        assert_eq!(all.len(), 1763);
        let [small, v, t] = split_dataset(&(0..10).collect::<Vec<_>>(), [0.6, 0.2, 0.2], 1).unwrap();
        assert_eq!((small.len(), v.len(), t.len()), (6, 2, 2));
    }

    #[test]
    fn seeded_and_validated() {
        let items: Vec<u32> = (0..100).collect();
        assert_eq!(split_dataset(&items, [0.6, 0.2, 0.2], 3).unwrap(), split_dataset(&items, [0.6, 0.2, 0.2], 3).unwrap());
        assert_ne!(split_dataset(&items, [0.6, 0.2, 0.2], 3).unwrap()[0], split_dataset(&items, [0.6, 0.2, 0.2], 4).unwrap()[0]);
        assert!(matches!(split_dataset(&items, [0.6, 0.3, 0.2], 3), Err(ClassifyError::InvalidRatios(_))));
        assert!(matches!(split_dataset(&items, [1.2, -0.2, 0.0], 3), Err(ClassifyError::InvalidRatios(_))));
    }
}
