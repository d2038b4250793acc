//! Deterministic stream derivation for parallel Monte Carlo.
//!
//! Every independent unit of work (one trial of one pattern) gets its own
//! counter-derived ChaCha stream, so results do not depend on how work is
//! scheduled across threads or on how many draws earlier units consumed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for the work item `(trial, pattern)` under a base seed.
///
/// The 64-bit stream id packs the trial in the high 32 bits and the pattern
/// index in the low 32 bits, so distinct work items never collide.
pub fn trial_pattern_rng(seed: u64, trial: u32, pattern: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((trial as u64) << 32) | pattern as u64);
    rng
}

/// Derives an independent child seed from a base seed and an integer tag.
///
/// SplitMix64 finalization scrambles the combined value, so structured tags
/// (small consecutive integers) still yield decorrelated seeds.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn distinct_work_items_get_distinct_streams() {
        let mut a = trial_pattern_rng(7, 0, 1);
        let mut b = trial_pattern_rng(7, 1, 0);
        let xs: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_ne!(xs, ys, "trial and pattern indices must not alias");
    }

    #[test]
    fn same_work_item_reproduces() {
        let mut a = trial_pattern_rng(7, 3, 5);
        let mut b = trial_pattern_rng(7, 3, 5);
        let xs: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn derived_seeds_differ_for_consecutive_tags() {
        let s0 = derive_seed(42, 0);
        let s1 = derive_seed(42, 1);
        assert_ne!(s0, s1);
        assert_eq!(s0, derive_seed(42, 0), "derivation is a pure function");
    }
}
