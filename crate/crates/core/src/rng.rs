//! Seeded random stream derivation.
//!
//! Every source of randomness in a simulation is a ChaCha stream derived
//! from the master seed plus a fixed set of integer tags, so results do
//! not depend on execution order or thread scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Stream roles, kept distinct so e.g. the partition shuffle can never
/// collide with a client's attack noise.
pub mod tag {
    pub const DATA: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const ROSTER: u64 = 3;
    pub const ATTACK: u64 = 4;
    /// Substitute client id for colluding sybil clients sharing one stream.
    pub const SYBIL_SHARED: u64 = u64::MAX;
}

/// First word of the derived stream, for operations that take a plain
/// seed (partitioning, roster assignment, data generation).
pub fn sub_seed(master: u64, tags: &[u64]) -> u64 {
    use rand::Rng;
    stream(master, tags).gen()
}

/// Derive an independent ChaCha stream from the master seed and tags.
pub fn stream(master: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for t in tags {
        hasher.update(t.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}
