//! Counter-based 64-bit random numbers.
//!
//! Every draw is a pure function of `(key, counter)`, so a value can be
//! recomputed in isolation without replaying a stream. The mixer is the
//! SplitMix64 finaliser.

/// SplitMix64 finaliser.
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Combines two words into one well-mixed key.
pub fn hash2(a: u64, b: u64) -> u64 {
    mix64(mix64(a) ^ b.rotate_left(32) ^ 0x5851_F42D_4C95_7F2D)
}

/// Maps a word to a uniform float in `[0, 1)` with 53 bits of precision.
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Clone, Debug)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            key: mix64(seed),
            counter: 0,
        }
    }

    /// A generator for an independent sub-stream of `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: hash2(seed, stream),
            counter: 0,
        }
    }

    /// The word at `index` of this stream, independent of the cursor.
    pub fn word_at(&self, index: u64) -> u64 {
        hash2(self.key, index)
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = self.word_at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        v
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
