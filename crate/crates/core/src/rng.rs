//! Seed derivation.
//!
//! Every stochastic component draws from a `ChaCha8Rng` seeded through
//! [`derive_seed`], which hashes `(base seed, component tag, index)` with a
//! fixed FNV-1a / splitmix64 combination. The scheme is stable across
//! platforms and releases, so a run is fully reproducible from its top-level
//! seed, and independent components (folds, trees, restarts, reference
//! datasets) get decorrelated streams that do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(base, tag, index)`.
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    let mut h = FNV_OFFSET ^ base;
    for &b in tag.as_bytes() {
        h = (h ^ u64::from(b)).wrapping_mul(FNV_PRIME);
    }
    splitmix(h ^ splitmix(index))
}

/// A deterministic generator for the given component stream.
pub fn stream(base: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, tag, index))
}
