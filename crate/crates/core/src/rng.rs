//! Reproducible random source shared by every stochastic operation.
//!
//! The generator is xoshiro256** with its 256-bit state expanded from the
//! 64-bit seed by SplitMix64. Integer ranges are drawn with Lemire's
//! multiply-and-reject method, so a draw from a range of size `n` consumes
//! one `u64` output, plus one more for every rejected sample. Rejection
//! only happens when the low 64 bits of `x * n` fall below `2^64 mod n`.
//!
//! Independent sub-streams are keyed by integers (chunk index, step, ...)
//! and derived from the seed alone, never from the current stream position:
//!
//! ```text
//! derive(seed, key) = mix64(seed + 0x9E3779B97F4A7C15 * (key + 1))   (wrapping)
//! mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!           z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31
//! ```

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Identifier of the generator recorded alongside seeds in outputs.
pub const ALGORITHM_ID: &str = "xoshiro256**+splitmix64";

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the sub-stream `key` of `seed`.
pub fn derive_seed(seed: u64, key: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(key.wrapping_add(1))))
}

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    inner: Xoshiro256StarStar,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm_id(&self) -> &'static str {
        ALGORITHM_ID
    }

    /// Fresh generator for sub-stream `key`, independent of how far `self`
    /// has advanced.
    pub fn substream(&self, key: u64) -> SeededRng {
        SeededRng::new(derive_seed(self.seed, key))
    }

    /// Uniform integer in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        let mut m = u128::from(self.inner.next_u64()) * u128::from(n);
        let mut low = m as u64;
        if low < n {
            let threshold = n.wrapping_neg() % n;
            while low < threshold {
                m = u128::from(self.inner.next_u64()) * u128::from(n);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Uniform integer in the closed range `[lo, hi]`.
    pub fn uniform_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "empty range [{lo}, {hi}]");
        let span = hi - lo;
        if span == u64::MAX {
            return self.inner.next_u64();
        }
        lo + self.below(span + 1)
    }

    /// Uniform real in `[0, 1)` with 53 random bits.
    pub fn unit_f64(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
