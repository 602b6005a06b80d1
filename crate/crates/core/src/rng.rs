//! Deterministic seed derivation.
//!
//! Every stochastic subsystem (world generation, sensor noise, frontier
//! sampling) draws from its own stream derived from the mission seed, so
//! adding randomness to one subsystem never perturbs another.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; good avalanche, stable across platforms.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive a child seed for a named stream.
pub fn subseed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Seeded generator for a (seed, stream) pair.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(subseed(seed, stream))
}

/// Stable per-cell hash used for world-generation priorities.
pub fn cell_hash(seed: u64, ix: i64, iy: i64, tag: u64) -> u64 {
    let mut h = splitmix64(seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15));
    h = splitmix64(h ^ (ix as u64).wrapping_mul(0xD1342543DE82EF95));
    splitmix64(h ^ (iy as u64).wrapping_mul(0xAF251AF3B0F025B5))
}

/// Map a hash to a uniform f64 in [0, 1).
pub fn unit_f64(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

// Stream tags.
pub const STREAM_COLUMNS: u64 = 1;
pub const STREAM_HEIGHTS: u64 = 2;
pub const STREAM_DYNAMIC: u64 = 3;
pub const STREAM_DEPTH_NOISE: u64 = 4;
pub const STREAM_FRONTIER: u64 = 5;
pub const STREAM_DETECTOR: u64 = 6;
