//! Seed derivation and the generator used for every random draw.
//!
//! All randomness in a run flows from one user seed. Sub-seeds are derived
//! by folding tags and indices through the SplitMix64 finalizer:
//!
//! ```text
//! derive(seed, tag, replicate, size_index)
//!   = mix(mix(mix(seed ^ mix(hash(tag))) ^ mix(replicate + 1)) ^ mix(size_index + 1))
//! ```
//!
//! so that a single cell of an experiment grid can be rerun on its own and
//! reproduces the draws of the full run.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Counter-based stream generator; `set_word_pos` allows index-range partitioning.
pub type SimRng = ChaCha12Rng;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a, used to turn command tags into integers.
pub fn tag_hash(tag: &str) -> u64 {
    tag.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

pub fn derive(seed: u64, tag: &str, replicate: u64, size_index: u64) -> u64 {
    let s = mix(seed ^ mix(tag_hash(tag)));
    let s = mix(s ^ mix(replicate.wrapping_add(1)));
    mix(s ^ mix(size_index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
