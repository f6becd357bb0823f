//! Counter-based random numbers.
//!
//! A draw is a pure function of `(seed, stream path, counter)`: there is no
//! mutable generator state, so any draw can be recomputed in isolation and
//! batches can be split across workers without changing results.
//!
//! Mixing is the SplitMix64 finalizer; string keys are folded in with 64-bit
//! FNV-1a.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a over the UTF-8 bytes of `id`.
pub fn hash_str(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            key: mix64(seed ^ GOLDEN_GAMMA),
        }
    }

    /// Independent child generator for a sub-stream (image index, classifier, ...).
    pub fn derive(&self, stream: u64) -> Self {
        CounterRng {
            key: mix64(self.key ^ mix64(stream.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    pub fn derive_str(&self, stream: &str) -> Self {
        self.derive(hash_str(stream))
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn f64_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`; `n` must be non-zero.
    #[inline]
    pub fn below(&self, counter: u64, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((u128::from(self.u64_at(counter)) * u128::from(n)) >> 64) as u64
    }
}
