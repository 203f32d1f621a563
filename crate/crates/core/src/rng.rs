//! Counter-based seed splitting. Every random stream in a run is addressed by
//! `(master seed, stream id)`, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one stream key.
pub fn key(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5151_7E5A_u64, |acc, &p| mix64(acc ^ mix64(p)))
}

/// Independent generator for `stream` under `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for Monte Carlo trial `trial` derived from a master seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    key(&[master, 0x74_7269_616c, trial])
}
