//! Seed derivation for reproducible trials.
//!
//! Every experiment draws from ChaCha8 streams. A trial's stream is keyed by
//! the run seed and the trial index, so trials can execute in any order or in
//! parallel and still produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Identifier recorded in reports.
pub const STREAM_ALGORITHM: &str = "chacha8/splitmix64-derived";

/// SplitMix64 finalizer.
// Kept out of line: inlined chains of this mixer send LLVM's loop
// vectorizer into exponential-time analysis.
#[inline(never)]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, domain: &str, index: u64) -> u64 {
    let mut h = mix64(seed);
    for b in domain.bytes() {
        h = mix64(h ^ b as u64);
    }
    mix64(h ^ index)
}

pub fn trial_rng(seed: u64, domain: &str, index: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, domain, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = trial_rng(1, "x", 0).gen();
        assert_eq!(a, trial_rng(1, "x", 0).gen::<u64>());
        assert_ne!(a, trial_rng(1, "x", 1).gen::<u64>());
        assert_ne!(a, trial_rng(1, "y", 0).gen::<u64>());
        assert_ne!(a, trial_rng(2, "x", 0).gen::<u64>());
    }
}
