//! Seed derivation. Every random quantity is drawn from a ChaCha8 stream
//! keyed by `(base_seed, module_id, trial_index)`; within a trial, small and
//! large jumps use separate ChaCha streams so they are independent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// ChaCha stream carrying the small-jump (band) noise.
pub const SMALL_JUMP_STREAM: u64 = 1;
/// ChaCha stream carrying the large-jump (compound Poisson) noise.
pub const LARGE_JUMP_STREAM: u64 = 2;
/// ChaCha stream for anything else (segment samplers, mark tests).
pub const AUX_STREAM: u64 = 3;

pub mod module {
    pub const FIRST_JUMP: u64 = 0x11;
    pub const CONVERGENCE: u64 = 0x12;
    pub const IRREDUCIBILITY: u64 = 0x13;
    pub const RESOLVENT: u64 = 0x14;
    pub const DISSIPATIVITY: u64 = 0x15;
    pub const LIPSCHITZ: u64 = 0x16;
    pub const SIMULATE: u64 = 0x17;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes the base seed with a module identifier and a trial index.
pub fn derive_seed(base: u64, module_id: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ module_id) ^ trial)
}

/// Generator for one `(seed, stream)` pair.
pub fn stream_rng(seed: u64, stream: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
