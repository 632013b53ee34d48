//! Seeded random streams. Every stochastic step derives its own ChaCha stream
//! from a master seed and a (purpose, index) pair, so results do not depend on
//! evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Purpose tags keep streams for different pipeline stages disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Stream {
    Init = 1,
    Split = 2,
    Epoch = 3,
    TrainPair = 4,
    ValidationPair = 5,
    EvalPair = 6,
    Crop = 7,
    Downsample = 8,
}

pub fn stream(seed: u64, purpose: Stream, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) ^ index);
    rng
}
