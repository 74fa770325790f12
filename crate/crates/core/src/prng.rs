//! Portable counter-based pseudo-random generator.
//!
//! Both parties of a session must regenerate the same frame layout from a
//! shared seed, possibly from independent implementations, so the generator
//! and every derived sampling routine are fixed here rather than delegated to
//! a library whose output may change between versions.
//!
//! The generator is SplitMix64: output `i` (0-based) of the stream keyed by
//! `seed` is `mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)` with wrapping
//! arithmetic, where `mix64` is the finalizer
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z =  z ^ (z >> 31)
//! ```
//!
//! Derived draws:
//! - uniform `f64` in `[0, 1)`: `(u >> 11) * 2^-53`
//! - bit: `u >> 63`
//! - integer below `bound`: Lemire's multiply-shift with rejection
//!   (`m = u * bound` as 128-bit, reject while `low64(m) < 2^64 mod bound`,
//!   result `high64(m)`)

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Output `index` of the stream keyed by `seed`, computed directly.
#[inline]
pub fn keyed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// Independent sub-seed for a named purpose.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag.wrapping_add(GAMMA)))
}

#[inline]
pub fn unit_f64(u: u64) -> f64 {
    (u >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential view over a keyed stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    seed: u64,
    counter: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = keyed(self.seed, self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }

    /// Uniform integer in `0..bound`. `bound` must be non-zero.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = (self.next_u64() as u128) * (bound as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    /// First `take` entries of a Fisher-Yates shuffle of `0..n`.
    ///
    /// Step `i` swaps position `i` with `i + next_below(n - i)`; the returned
    /// prefix is a uniform ordered `take`-subset of `0..n`.
    pub fn partial_shuffle(&mut self, n: usize, take: usize) -> Vec<usize> {
        assert!(take <= n);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..take {
            let j = i + self.next_below((n - i) as u64) as usize;
            perm.swap(i, j);
        }
        perm.truncate(take);
        perm
    }

    pub fn bits(&mut self, count: usize) -> Vec<u8> {
        (0..count).map(|_| self.next_bit()).collect()
    }
}
