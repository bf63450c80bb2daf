//! Seed handling. Every stochastic routine takes an explicit `u64` seed; tasks
//! fanned out in parallel derive their own stream from `(seed, task id)` so the
//! result does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from a parent seed and a task label.
pub fn derive_seed(seed: u64, task: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(task.as_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

/// Derives a child seed from a parent seed and an index (sweep points, repeats).
pub fn derive_seed_indexed(seed: u64, task: &str, index: u64) -> u64 {
    derive_seed(seed, &format!("{task}#{index}"))
}
