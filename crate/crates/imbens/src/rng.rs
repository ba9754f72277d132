//! Deterministic seed plumbing.
//!
//! Every stochastic routine takes a [`RandomSeed`] and derives private
//! sub-streams from it instead of sharing one mutable generator. That keeps
//! results bit-identical no matter how work is ordered or parallelised:
//! ensemble member `m` always sees `seed.derive("member", m)` regardless of
//! which rayon worker fits it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Master seed for a deterministic computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSeed(pub u64);

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a_extend(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

impl RandomSeed {
    /// Derive a child seed for the sub-stream identified by `(tag, index)`.
    ///
    /// The derivation is a pure FNV-1a hash over the parent seed, the tag
    /// bytes and the index, so equal inputs always give equal children and
    /// distinct tags give statistically unrelated streams.
    pub fn derive(self, tag: &str, index: u64) -> RandomSeed {
        let mut h = FNV_OFFSET;
        h = fnv1a_extend(h, &self.0.to_le_bytes());
        h = fnv1a_extend(h, tag.as_bytes());
        h = fnv1a_extend(h, &index.to_le_bytes());
        RandomSeed(h)
    }

    /// Instantiate the actual generator for this seed.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}
