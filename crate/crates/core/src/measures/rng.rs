//! Counter-based 64-bit generator.
//!
//! The `i`-th draw of a stream with seed `s` is `mix(s + (i + 1)·GAMMA)`, where
//! `mix` is the SplitMix64 finalizer. Draws depend only on `(s, i)`, so streams
//! are bit-reproducible on every platform and can be indexed directly.

/// Weyl increment (odd, `2^64 / φ`).
pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX2: u64 = 0x94D0_49BB_1331_11EB;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX2);
    z ^ (z >> 31)
}

/// The `index`-th 64-bit draw of the stream `seed`.
#[inline]
pub fn draw_u64(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// The `index`-th draw mapped to `[0, 1)` using the top 53 bits.
#[inline]
pub fn draw_unit(seed: u64, index: u64) -> f64 {
    (draw_u64(seed, index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential view over a counter-based stream.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    seed: u64,
    counter: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = draw_u64(self.seed, self.counter);
        self.counter += 1;
        v
    }

    pub fn next_f64(&mut self) -> f64 {
        let v = draw_unit(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        lo + (self.next_u64() % (hi - lo + 1) as u64) as usize
    }
}
