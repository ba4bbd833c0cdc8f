//! Seeded random streams.
//!
//! Every random draw in the crate goes through a ChaCha stream keyed by a
//! master seed and a stream index, so independent cells of a study (or grid
//! points of a sampler) can run concurrently and still reproduce exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generator for a bare seed (stream 0).
pub fn seeded(seed: u64) -> Rng {
    stream(seed, 0)
}
