//! Portable pseudo-random numbers for reproducible fixtures.
//!
//! The generator is xorshift64* with shifts (12, 25, 27) and multiplier
//! `0x2545F4914F6CDD1D`:
//!
//! ```text
//! x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
//! return x * 0x2545F4914F6CDD1D  (wrapping)
//! ```
//!
//! A zero seed is replaced by `0x9E3779B97F4A7C15`. Floats take the top 53
//! bits: `(next >> 11) * 2^-53`. Bounded integers use the high half of the
//! 128-bit product `next * bound`. Shuffles are Fisher-Yates from the back.
//! Every step is integer or exactly rounded arithmetic, so sequences match
//! across platforms and languages.

/// xorshift64* generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XorShift64Star {
    state: u64,
}

const ZERO_SEED: u64 = 0x9E37_79B9_7F4A_7C15;

impl XorShift64Star {
    /// Seeds the generator.
    pub fn new(seed: u64) -> Self {
        Self {
            state: if seed == 0 { ZERO_SEED } else { seed },
        }
    }

    /// Next raw 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `0..bound`; `bound` must be positive.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    /// Fair coin.
    pub fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
