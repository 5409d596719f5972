//! Deterministic random number streams for simulation.
//!
//! Everything downstream of a seed must be reproducible across platforms and
//! across runs, so we use a hand-rolled splitmix64 stream rather than a
//! platform RNG. Not cryptographically secure.

/// splitmix64 finalizer: a single avalanche round over a 64-bit word.
#[inline(always)]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Sequential deterministic RNG stream with a 64-bit counter state.
#[derive(Clone, Debug)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline(always)]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline(always)]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`. `bound` must be positive.
    #[inline(always)]
    pub fn gen_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        // Lemire-style widening multiply; bias is < 2^-32 for desk-scale bounds.
        (((self.next_u64() >> 32) * bound as u64) >> 32) as usize
    }

    #[inline(always)]
    pub fn gen_bool(&mut self, prob: f64) -> bool {
        self.next_f64() < prob
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.gen_index(i + 1);
            items.swap(i, j);
        }
    }

    /// Derive an independent child stream; `tag` distinguishes siblings.
    pub fn fork(&self, tag: u64) -> RngStream {
        RngStream::new(mix64(self.state ^ mix64(tag)))
    }
}
