//! Seed derivation for reproducible, parallel Monte-Carlo work.
//!
//! Every random quantity is drawn from a ChaCha8 stream addressed by
//! `(master seed, domain, index)`. Domains keep training data, test data,
//! weight initialization and batch shuffling on disjoint streams, and the
//! index lets each sample own its generator so work can be spread across
//! threads without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Independent purposes a master seed is split into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    TrainData,
    TestData,
    Init,
    Shuffle,
    Scenario,
    Custom(u32),
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::TrainData => 1,
            Domain::TestData => 2,
            Domain::Init => 3,
            Domain::Shuffle => 4,
            Domain::Scenario => 5,
            Domain::Custom(c) => 0x1_0000_0000 | u64::from(c),
        }
    }
}

/// Generator for item `index` of `domain` under `master`.
pub fn stream(master: u64, domain: Domain, index: u64) -> Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&domain.tag().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(index);
    rng
}

/// Generator seeded directly from a `u64`.
pub fn from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
