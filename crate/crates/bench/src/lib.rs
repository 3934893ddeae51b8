//! Input builders shared by the benchmarks.

use csi_core::{Dataset, DenseMatrix, TaskKind, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Dense Gaussian design with uniform responses in `[-1, 1]`.
pub fn gaussian_dataset(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Dataset::new(
        DenseMatrix::new(n, d, x).expect("sizes match").into(),
        Vector::new(y).expect("finite"),
        TaskKind::Regression,
    )
    .expect("consistent")
}

/// Index values and noisy ±1 labels that increase with the index on average.
pub fn lpav_input(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 10.0).collect();
    let y = p
        .iter()
        .map(|t| if rng.random::<f64>() < 0.5 + 0.4 * (t / 10.0).tanh() { 1.0 } else { -1.0 })
        .collect();
    (p, y)
}

pub fn gaussian_vector(d: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}
