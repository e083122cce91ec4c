//! Deterministic seeded random streams for the audit samplers.
//!
//! Reports must replay bit-for-bit from `(seed, sample index)` alone, across
//! worker counts and library upgrades, so the generator is a fixed splitmix64
//! rather than an external RNG whose stream may change between versions.

/// splitmix64 stream. Every audit sample owns an independent stream derived
/// from the audit seed and the sample index.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
}

impl Stream {
    /// Stream for one `(seed, index)` pair. Distinct indices give
    /// decorrelated streams.
    pub fn for_sample(seed: u64, index: u64) -> Stream {
        let mut s = Stream {
            state: seed ^ 0x9e3779b97f4a7c15u64.wrapping_mul(index.wrapping_add(1)),
        };
        // burn a few outputs so nearby indices decorrelate
        s.next_u64();
        s.next_u64();
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi]`.
    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
