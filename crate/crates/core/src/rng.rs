//! Deterministic PRNG used everywhere randomness is needed.
//!
//! The generator is splitmix64. Every consumer documents its draw order so
//! that a (seed, draw order) pair fully determines a run; nothing in the
//! engine draws from ambient entropy.

/// splitmix64 generator. `new(seed)` with the same seed always yields the
/// same sequence, including for seed 0.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, n)`. `n` must be nonzero. Uses simple modulo
    /// reduction; the documented draw cost is exactly one `next_u64`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        self.next_u64() % n
    }

    /// Uniform f64 in `[0, 1)` from the top 53 bits of one draw.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Fair coin from one draw.
    pub fn next_bool(&mut self) -> bool {
        self.next_u64() & 1 == 1
    }
}

/// Folds `values` into `seed` one splitmix step at a time. Used to derive
/// sub-seeds (for example the per-pair seeds of the test-generation distance)
/// so that derived streams are order-independent and reproducible.
pub fn derive_seed(seed: u64, values: &[u64]) -> u64 {
    let mut s = seed;
    for &v in values {
        s = SplitMix64::new(s ^ v).next_u64();
    }
    s
}

/// FNV-1a over the UTF-8 bytes of `s`; stable across platforms.
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
