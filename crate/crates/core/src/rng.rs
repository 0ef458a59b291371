//! Seeded randomness.
//!
//! Every stochastic operation in this crate draws from [`SimRng`], which is
//! ChaCha20 as implemented by `rand_chacha`. ChaCha20 is counter-based and its
//! output is specified bit-for-bit, so a given seed yields the same stream on
//! every platform. Trial loops derive one independent stream per trial by
//! selecting the ChaCha stream id, which keeps results identical whether the
//! trials run sequentially or on a thread pool.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type SimRng = ChaCha20Rng;

/// Generator for a master seed.
pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Independent generator for trial `index` of a run keyed by `master`.
pub fn trial_rng(master: u64, index: u64) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// A sub-seed for grid point `index`, for runs that nest trial loops.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(master);
    // Stream ids above 2^63 are reserved for sub-seeds so they never collide
    // with trial streams.
    rng.set_stream(index | (1 << 63));
    rng.next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_streams_are_distinct_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(trial_rng(7, 0), |r, _| Some(r.next_u64())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(trial_rng(7, 0), |r, _| Some(r.next_u64())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(trial_rng(7, 1), |r, _| Some(r.next_u64())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn chacha_stream_is_pinned() {
        // Recorded from rand_chacha 0.3; a change here means seeded runs no
        // longer reproduce earlier results.
        assert_eq!(rng_from_seed(0).next_u64(), 0x063c_ded6_81f5_f7b2);
        assert_eq!(derive_seed(0, 0), 0x6ad3_9ecf_92e7_eff2);
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
    }
}
