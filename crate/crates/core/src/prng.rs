//! SplitMix64 streams.
//!
//! Every random decision in the forest (train/test shuffle, bootstrap draws,
//! per-node feature order) comes from an [`RngState`] derived from a
//! `(seed, stream_index)` pair. The algorithm is fixed bit-for-bit:
//!
//! ```text
//! GOLDEN    = 0x9E3779B97F4A7C15
//! mix(z)    = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!             z ^= z >> 27; z *= 0x94D049BB133111EB;
//!             z ^ (z >> 31)                      (wrapping arithmetic)
//! derive(seed, k) = mix(seed ^ (k * GOLDEN))
//! next(s)   = s' = s + GOLDEN; (mix(s'), s')
//! ```
//!
//! Bounded draws reject raw values `>= floor(2^64 / n) * n` before reducing
//! modulo `n`, so they are exactly uniform. Distinct `(seed, stream_index)` pairs
//! give distinct initial states except with negligible (unasserted) collision
//! probability.

use crate::error::{invalid, Result};

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream index reserved for the train/test shuffle.
pub const SPLIT_STREAM: u64 = u64::MAX;
/// Stream index reserved for the synthetic data generator.
pub const SYNTHETIC_STREAM: u64 = u64::MAX - 1;

/// The SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one independent stream: a user seed plus a stream index
/// (tree index, or one of the reserved indices above).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub stream_index: u64,
}

impl StreamKey {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    pub fn state(self) -> RngState {
        RngState::derive(self.seed, self.stream_index)
    }
}

/// A SplitMix64 state. Plain value; copying it forks the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngState(pub u64);

impl RngState {
    pub fn derive(seed: u64, stream_index: u64) -> Self {
        RngState(mix64(seed ^ stream_index.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Pure form of [`RngState::next_u64`].
    #[inline]
    pub fn step(self) -> (u64, RngState) {
        let next = self.0.wrapping_add(GOLDEN_GAMMA);
        (mix64(next), RngState(next))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let (value, next) = self.step();
        *self = next;
        value
    }

    /// Uniform draw in `[0, n)`.
    pub fn bounded(&mut self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(invalid("bounded draw requires n >= 1"));
        }
        let zone = ((1u128 << 64) / n as u128) * n as u128;
        loop {
            let v = self.next_u64();
            if (v as u128) < zone {
                return Ok(v % n);
            }
        }
    }

    /// Uniform `usize` in `[0, n)`.
    pub fn bounded_usize(&mut self, n: usize) -> Result<usize> {
        self.bounded(n as u64).map(|v| v as usize)
    }

    /// Uniform float in `(0, 1]` built from the top 53 bits.
    pub fn unit_open_closed(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fisher-Yates over `[0, m)`, swapping from the highest index down.
    pub fn shuffle(&mut self, m: usize) -> Result<Vec<usize>> {
        if m == 0 {
            return Err(invalid("shuffle requires m >= 1"));
        }
        let mut perm: Vec<usize> = (0..m).collect();
        self.shuffle_in_place(&mut perm);
        Ok(perm)
    }

    pub fn shuffle_in_place<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            // i + 1 >= 2, so the draw cannot fail
            let j = self.bounded_usize(i + 1).expect("non-zero bound");
            items.swap(i, j);
        }
    }
}

pub fn derive_stream(seed: u64, stream_index: u64) -> RngState {
    RngState::derive(seed, stream_index)
}
