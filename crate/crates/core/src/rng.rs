//! Seeded randomness. Every randomized routine takes an explicit `u64` seed
//! and draws from ChaCha8 so results are bit-reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type DetRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> DetRng {
    ChaCha8Rng::seed_from_u64(seed)
}
