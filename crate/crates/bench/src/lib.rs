//! Shared input generators for the benchmark targets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use disent_core::numerics::DenseMatrix;

/// Deterministic random matrix with entries in `[-scale, scale)`.
pub fn random_matrix(seed: u64, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    DenseMatrix::from_vec(rows, cols, data).expect("finite by construction")
}

/// Deterministic binary labels.
pub fn random_labels(seed: u64, n: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..2)).collect()
}

/// Deterministic small-alphabet labelings for metric benchmarks.
pub fn random_labelings(seed: u64, n: usize, alphabet: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = (0..n).map(|_| rng.gen_range(0..alphabet)).collect();
    let v = (0..n).map(|_| rng.gen_range(0..alphabet)).collect();
    (u, v)
}
