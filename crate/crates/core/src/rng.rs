//! Deterministic random streams.
//!
//! Every sampler in the crate takes an explicit [`Stream`]; Monte-Carlo
//! drivers derive one substream per path from a master seed, so an
//! ensemble is reproducible bit-for-bit regardless of how paths are
//! scheduled across workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Master stream for a given seed.
pub fn master(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent substream `index` of the master seed.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
