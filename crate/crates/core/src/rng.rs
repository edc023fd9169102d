//! Counter-based random number streams.
//!
//! Every draw is a pure function of `(seed, key, step, slot)`, so the same
//! site sees the same noise no matter how the work is split across threads,
//! and two systems sharing a seed consume identical noise at shared sites.
//! This is what makes the common-random-number coupling experiments exact.

use crate::model::region::Site;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer: full-avalanche 64-bit mixing.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn absorb(state: u64, word: u64) -> u64 {
    mix64(state ^ mix64(word.wrapping_add(GOLDEN)))
}

/// Collapse a lattice site into a single word.
#[inline]
pub fn site_key(site: Site) -> u64 {
    let [a, b, c] = site.coords();
    absorb(absorb(absorb(0x736974_65, a as u64), b as u64), c as u64)
}

/// A deterministic stream of draws identified by a derived seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
}

impl NoiseStream {
    pub fn new(seed: u64) -> Self {
        NoiseStream { seed: mix64(seed ^ GOLDEN) }
    }

    /// Sub-stream derivation, e.g. one stream per trajectory or per chain.
    pub fn derive(&self, tag: u64, index: u64) -> Self {
        NoiseStream { seed: absorb(absorb(self.seed, tag), index) }
    }

    #[inline]
    fn word(&self, key: u64, step: u64, slot: u64) -> u64 {
        absorb(absorb(absorb(self.seed, key), step), slot)
    }

    /// Uniform draw in the open interval (0, 1).
    #[inline]
    pub fn uniform(&self, key: u64, step: u64, slot: u64) -> f64 {
        // 53 mantissa bits, offset by half a ulp so 0 and 1 are excluded
        ((self.word(key, step, slot) >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box-Muller, keyed by (site key, step).
    #[inline]
    pub fn normal(&self, key: u64, step: u64, slot: u64) -> f64 {
        let u1 = self.uniform(key, step, slot.wrapping_mul(2));
        let u2 = self.uniform(key, step, slot.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Standard Cauchy draw.
    #[inline]
    pub fn cauchy(&self, key: u64, step: u64, slot: u64) -> f64 {
        let u = self.uniform(key, step, slot);
        (std::f64::consts::PI * (u - 0.5)).tan()
    }
}
