//! Seeded random source shared by every sampler in the crate.
//!
//! The generator is xoshiro256++ seeded through SplitMix64 from a single
//! `u64` (the reference seeding procedure of the xoshiro family). Uniform
//! reals take the top 53 bits of one `next_u64` output: `(x >> 11) * 2^-53`.
//! Discrete draws use inverse-CDF over the probability vector in index
//! order, consuming exactly one `next_u64` per draw. A port that follows
//! these three rules reproduces sampled tables bit for bit.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone)]
pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    /// Derive an independent stream for a sub-task (restart, rep, grid point).
    pub fn derive(seed: u64, stream: u64) -> Self {
        // Mix the stream id through one SplitMix64 round so neighbouring ids
        // do not produce correlated seeds.
        let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        Rng::new(z ^ (z >> 31))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Inverse-CDF draw from `probs`; the last index with positive mass
    /// absorbs rounding slack.
    pub fn categorical(&mut self, probs: &[f64]) -> usize {
        let r = self.uniform();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                last = i;
            }
            acc += p;
            if r < acc {
                return i;
            }
        }
        last
    }

    /// Uniform integer in `0..bound` (bound > 0), by inverse-CDF on the
    /// uniform real so the one-draw-per-sample rule holds.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.uniform() * bound as f64) as usize).min(bound - 1)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        // Fisher-Yates, high index first.
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
