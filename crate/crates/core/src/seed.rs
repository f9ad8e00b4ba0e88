//! Deterministic seed derivation. Every random stream in a run is keyed off the
//! run seed plus a small tuple of counters, never off shared RNG state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one key.
pub(crate) fn derive_key(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x005E_ED0F_D15A_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub(crate) fn rng_for(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_key(parts))
}

/// Uniform in `[0, 1)` from a 64-bit key.
pub(crate) fn unit_f64(key: u64) -> f64 {
    (key >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) mod salt {
    pub const INIT: u64 = 1;
    pub const SHUFFLE: u64 = 2;
    pub const DROPOUT_INPUT: u64 = 3;
    pub const DROPOUT_HIDDEN: u64 = 4;
    pub const SYNTH: u64 = 5;
}
