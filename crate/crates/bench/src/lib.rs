//! Criterion benchmarks for the `bigpolar` library; see `benches/`.

use bigpolar::{BitVec, Seed};
use rand::Rng;

/// Uniformly random bit vector of length `n`.
pub fn random_bits(n: usize, seed: u64) -> BitVec {
    let mut rng = Seed::new(seed).rng();
    BitVec::from_bools(&(0..n).map(|_| rng.gen()).collect::<Vec<bool>>())
}
