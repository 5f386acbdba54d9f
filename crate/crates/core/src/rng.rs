//! Seed derivation. Every source of randomness in a run is a ChaCha8 stream
//! whose seed is derived from (master seed, purpose tag, index), so runs are
//! replayable and independent streams never alias.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Deterministically mix a master seed, a purpose tag and an index into a
/// fresh stream seed.
pub fn derive_seed(master: u64, tag: &str, idx: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(tag)) ^ idx)
}

pub fn stream(master: u64, tag: &str, idx: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, idx))
}
