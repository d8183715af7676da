//! Seeded random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator whose seed is
//! derived from a base seed and a path of stream indices (for example
//! `[BOOTSTRAP, set_index]`). Derivation mixes each path element into the state
//! with the SplitMix64 finalizer, so a given `(seed, path)` always yields the
//! same stream regardless of the order in which streams are consumed or how
//! work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags keep unrelated consumers of one seed apart.
pub mod tag {
    pub const BOOTSTRAP: u64 = 0x0b00_7570;
    pub const SPLIT: u64 = 0x5911_7000;
    pub const CURVE: u64 = 0xc0_4e00;
    pub const TRIAL: u64 = 0x7417_a100;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed` and a path of indices.
pub fn derive_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Generator for the substream identified by `(seed, path)`.
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, path))
}
