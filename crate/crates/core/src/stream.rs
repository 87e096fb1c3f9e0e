//! Seed derivation and counter-based RNG streams.
//!
//! Every task, training run, and augmentation pass draws from a dedicated
//! ChaCha stream derived from a master seed plus a stable identifier, so
//! results are independent of scheduling order and thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A seeded RNG on the given stream id. Streams with distinct ids are
/// statistically independent for the same seed.
pub fn chacha_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.into());
    rng
}

/// Derives a child seed from a parent seed and a salt (splitmix64 mix).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
