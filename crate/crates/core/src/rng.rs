//! Seeded random streams.
//!
//! Every stochastic routine draws from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! seeded with `ChaCha8Rng::seed_from_u64`. Uniform reals in `[0, 1)` are
//! `(next_u64() >> 11) * 2^-53`. Derived seeds are the first eight bytes
//! (little-endian) of `SHA-256(tag || parent_le)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Child seed for a labelled sub-stream of `parent`.
pub fn derive_seed(parent: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update(parent.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Per-item seed: `SHA-256("item" || master_le || index_le)`, first 8 bytes LE.
pub fn item_seed(master: u64, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"item");
    h.update(master.to_le_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}
