//! Seeded random streams.
//!
//! Every experiment derives its randomness from a master seed. Trial `i`
//! uses a ChaCha8 generator seeded with the master seed on stream `i`, so
//! trials are independent of each other and of how they are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn trial_stream(master_seed: u64, trial: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}
