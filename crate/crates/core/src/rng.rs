//! Deterministic RNG streams.
//!
//! Every stochastic component draws from a ChaCha8 generator keyed by the run seed
//! and a purpose tag, with the 64-bit stream selector picking the chain, specimen or
//! fold. Results are therefore independent of scheduling and thread count.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Simulate = 1,
    Chain = 2,
    Predict = 3,
    Folds = 4,
    Ppc = 5,
}

fn mix(mut x: u64) -> u64 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ mix(purpose as u64)));
    rng.set_stream(index);
    rng
}

/// Seed for a nested run (e.g. one CV fold) derived from a parent seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(mix(index.wrapping_add(0xA5A5))))
}
