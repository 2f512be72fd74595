//! Splittable seed streams for reproducible simulation.
//!
//! Every stochastic operation in this crate takes an explicit `u64` seed.
//! Experiments derive one child seed per trial from `(master_seed, index)`
//! with [`child`], so trials are reproducible and independent of execution
//! order; nested structure (grid point -> trial -> sub-stream) is handled by
//! chaining `child` calls.

use rand_chacha::ChaCha12Rng;
use rand_chacha::rand_core::SeedableRng;

/// SplitMix64 finalizer; full-avalanche mix of a 64-bit word.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the `index`-th child seed of `master`.
///
/// Children of distinct `(master, index)` pairs are decorrelated by the
/// SplitMix64 avalanche; deriving a child is pure, so the tree of seeds can
/// be walked in any order (or in parallel) with identical results.
pub fn child(master: u64, index: u64) -> u64 {
    mix(master ^ mix(index.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1)))
}

/// Instantiates the deterministic generator used everywhere in this crate.
pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}
