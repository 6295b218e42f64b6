//! Seedable, splittable random streams.
//!
//! Every randomized routine takes `&mut impl Rng`; callers that need
//! independent sub-streams (per level, per band, per trial) fork them from a
//! parent so a single master seed fixes the whole run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent child stream, advancing the parent by one draw.
pub fn fork<R: Rng + ?Sized>(parent: &mut R) -> StreamRng {
    ChaCha8Rng::seed_from_u64(parent.random())
}

/// Child stream keyed by `(seed, index)` without touching any parent state.
pub fn substream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
