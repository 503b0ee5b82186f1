//! Counter-style seed derivation and per-stream generators.
//!
//! A stream seed is the splitmix64 finalizer folded over
//! `(master, n, replica, tag)`; each stream then drives its own
//! xoshiro256++ generator, so replicas never share state.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type StreamRng = Xoshiro256PlusPlus;

/// Stream tags separating the random inputs of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamTag {
    Path = 1,
    Scenery = 2,
    Bootstrap = 3,
    Oracle = 4,
    Limit = 5,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `master` one word at a time.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix64(master.wrapping_add(GOLDEN)), |acc, &p| {
        mix64(acc.wrapping_add(GOLDEN).wrapping_add(mix64(p)))
    })
}

pub fn replica_seed(master: u64, n: u64, replica: u64, tag: StreamTag) -> u64 {
    derive_seed(master, &[n, replica, tag as u64])
}

pub fn stream(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}
