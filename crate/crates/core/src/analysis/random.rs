use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::measure::SignedMeasure;

/// Generator for one trial, derived from `(seed, property, trial)` so trials
/// are independent of evaluation order.
pub fn trial_rng(seed: u64, property: &str, trial: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((property.len() as u64).to_le_bytes());
    h.update(property.as_bytes());
    h.update(trial.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Atoms uniform in `[-1, 1]^dim`, weights uniform in `[-2, 2]`, between 1 and
/// `max_atoms` atoms before merging.
pub fn random_signed(rng: &mut impl Rng, dim: usize, max_atoms: usize) -> SignedMeasure {
    let n = rng.random_range(1..=max_atoms);
    let positions: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
    SignedMeasure::from_flat(dim, positions, weights).expect("finite random atoms")
}

pub fn random_dim(rng: &mut impl Rng) -> usize {
    rng.random_range(1..=2)
}
