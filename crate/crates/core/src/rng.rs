//! Seed derivation.
//!
//! * A trial's seed is `splitmix64(master_seed + (trial_index + 1) * GOLDEN)`,
//!   where `splitmix64` is the output function of the SplitMix64 generator.
//! * The random source of round `r` (the transition from round `r` to `r + 1`)
//!   is a ChaCha8 generator keyed by four successive SplitMix64 outputs
//!   started at the trial seed, positioned on stream `r`.
//!
//! A round therefore never depends on how many values earlier rounds drew,
//! and trajectories do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    let mut state = master_seed.wrapping_add(trial_index.wrapping_add(1).wrapping_mul(GOLDEN));
    splitmix64(&mut state)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

pub fn round_rng(trial_seed: u64, round: u64) -> ChaCha8Rng {
    let mut rng = seeded(trial_seed);
    rng.set_stream(round);
    rng
}
