//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`RandomSource`]. A source is
//! identified by a `(master_seed, stream_index)` pair and produces the same
//! sequence on every platform:
//!
//! 1. The pair is mixed into a 64-bit key with the SplitMix64 finalizer:
//!    `key = fmix(master_seed ^ fmix(stream_index + 0x9E3779B97F4A7C15))`.
//! 2. The key seeds a xoshiro256** generator (state filled by four SplitMix64
//!    steps from the key, as in the reference seeding procedure).
//! 3. Uniforms on `[0, 1)` are `(x >> 11) · 2⁻⁵³` for each 64-bit output `x`.
//!
//! Parallel work never shares a source; it derives one child stream per task
//! with [`RandomSource::derive`].

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn fmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a `(seed, index)` pair into a single 64-bit stream key.
#[inline]
pub fn stream_key(master_seed: u64, stream_index: u64) -> u64 {
    fmix64(master_seed ^ fmix64(stream_index.wrapping_add(GOLDEN_GAMMA)))
}

/// A single-owner, deterministic random stream.
#[derive(Clone, Debug)]
pub struct RandomSource {
    master_seed: u64,
    stream_index: u64,
    rng: Xoshiro256StarStar,
}

/// Builds the stream for `(master_seed, index)`.
pub fn derive_stream(master_seed: u64, index: u64) -> RandomSource {
    RandomSource::new(master_seed, index)
}

impl RandomSource {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let key = stream_key(master_seed, stream_index);
        RandomSource {
            master_seed,
            stream_index,
            rng: Xoshiro256StarStar::seed_from_u64(key),
        }
    }

    /// Stream 0 of `seed`.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Child stream `index` of this stream. Children of distinct parents or
    /// distinct indices are independent; deriving does not advance `self`.
    pub fn derive(&self, index: u64) -> RandomSource {
        RandomSource::new(stream_key(self.master_seed, self.stream_index), index)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`; safe to feed to quantile
    /// functions with infinite tails.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        let x = lo + (hi - lo) * self.uniform();
        if x >= hi && hi > lo {
            lo.max(f64::from_bits(hi.to_bits() - 1))
        } else {
            x
        }
    }

    /// Uniform integer in `0..n` (Lemire's widening multiply, unbiased).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// Standard normal draw by inversion of the normal CDF.
    pub fn standard_normal(&mut self) -> f64 {
        crate::special::norm_quantile(self.uniform_open())
    }
}
