//! Named, counter-addressed random streams derived from one user seed.
//!
//! Every stochastic stage draws from `stream(seed, Stream::X, index)`, so a
//! given resample, fiber or noise record always sees the same numbers no
//! matter how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    FixtureNoise = 1,
    Resampling = 2,
    EnsembleFibers = 3,
    FiberSegments = 4,
    Trials = 5,
}

pub fn stream(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((which as u64) << 48) ^ index);
    rng
}

/// A derived seed for handing a whole sub-computation its own seed space.
pub fn derive_seed(seed: u64, which: Stream, index: u64) -> u64 {
    use rand::Rng;
    stream(seed, which, index).random()
}
