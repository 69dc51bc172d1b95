//! Deterministic random streams.
//!
//! `RngStream` is SplitMix64: a 64-bit counter advanced by the golden-ratio
//! increment and passed through the SplitMix64 finalizer. `derive_seed` uses
//! the same finalizer to split one master seed into independent child seeds.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `master`.
///
/// `mix64(master + (index + 1) * GOLDEN_GAMMA)`, all arithmetic mod 2^64. For a
/// fixed master this is a bijection of `index`, so distinct indices never
/// collide; collisions across different masters are possible and are checked
/// where it matters (seed plans).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Disjoint `derive_seed` index blocks. Each block is `BLOCK_SIZE` indices wide.
pub mod seed_blocks {
    pub const BLOCK_SIZE: u64 = 1 << 60;
    /// Collection attempts: `episode * (max_retries + 1) + retry`.
    pub const GENERATION: u64 = 0;
    pub const TRAIN: u64 = BLOCK_SIZE;
    pub const VALIDATION: u64 = 2 * BLOCK_SIZE;
    pub const EVAL: u64 = 3 * BLOCK_SIZE;
    /// Random-policy calibration runs stored in the registry.
    pub const BASELINE: u64 = 4 * BLOCK_SIZE;
}

/// Single-owner deterministic random stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[low, high)`.
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.next_f64()
    }

    /// Uniform integer in `[0, n)`; unbiased (rejection on the tail).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    // Reference SplitMix64 (Vigna), written out independently of `mix64`.
    fn reference_splitmix(seed: u64) -> u64 {
        let mut z = seed.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    #[test]
    fn splitmix_known_values() {
        // First outputs of SplitMix64 seeded with 0 and 1234567.
        let mut r = RngStream::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        let mut r = RngStream::new(1234567);
        assert_eq!(r.next_u64(), 6457827717110365317);
        assert_eq!(r.next_u64(), 3203168211198807973);
    }

    #[test]
    fn derive_seed_matches_reference_formula() {
        // master + (i+1)*gamma, then the finalizer == one SplitMix64 draw seeded
        // at master + i*gamma.
        for (m, i) in [(42u64, 0u64), (42, 1), (0, 0), (u64::MAX, 7)] {
            let pre = m.wrapping_add(i.wrapping_mul(0x9e3779b97f4a7c15));
            assert_eq!(derive_seed(m, i), reference_splitmix(pre));
        }
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_eq!(derive_seed(42, 0), derive_seed(42, 0));
    }

    #[test]
    fn derive_seed_distinct_over_first_million() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for i in 0..1_000_000u64 {
            assert!(seen.insert(derive_seed(0, i)), "collision at {i}");
        }
    }

    #[test]
    fn below_and_uniform_ranges() {
        let mut r = RngStream::new(9);
        for _ in 0..10_000 {
            assert!(r.below(24) < 24);
            let u = r.uniform(-1.0, 1.0);
            assert!((-1.0..1.0).contains(&u));
        }
    }

    #[test]
    fn shuffle_is_permutation() {
        let mut v: Vec<u32> = (0..100).collect();
        RngStream::new(3).shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort();
        assert_eq!(sorted, (0..100).collect::<Vec<_>>());
        assert_ne!(v, sorted);
    }
}
