//! Planted-ground-truth dataset for checking what a selector recovers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::Result;

/// Number of informative features in [`planted`].
pub const PLANTED: usize = 3;

/// `n` samples of `PLANTED + noise` standard-normal features. The binary
/// label is the majority vote of the signs of features 0, 1 and 2; the rest
/// are independent noise.
pub fn planted(n: usize, noise: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = PLANTED + noise;
    let mut columns = vec![Vec::with_capacity(n); d];
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let positives = row[..PLANTED].iter().filter(|&&v| v > 0.0).count();
        labels.push(i64::from(positives * 2 > PLANTED));
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    Dataset::from_columns(columns, &labels)
}
