//! Counter-based random streams.
//!
//! Every random quantity in the crate is derived from a single user seed by
//! labelled splitting, so results never depend on evaluation order or thread
//! scheduling:
//!
//! ```text
//! stream(seed, label, index) = mix64(mix64(seed ^ fnv1a64(label)) + GAMMA * (index + 1))
//! ```
//!
//! `mix64` is the SplitMix64 output finalizer and `GAMMA` its Weyl increment
//! (`0x9E3779B97F4A7C15`). Bulk generation (DAG topology, intervals) seeds a
//! `ChaCha8Rng` from one stream value; per-task execution-time draws use the
//! stream value directly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream label for Monte-Carlo run seeds.
pub const LABEL_MC_RUN: &str = "mc-run";
/// Stream label for per-task execution-time draws inside one run.
pub const LABEL_EXEC_TIME: &str = "exec-time";
/// Stream label for DAG generation.
pub const LABEL_GEN: &str = "gen";

pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const fn fnv1a64(label: &str) -> u64 {
    let bytes = label.as_bytes();
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut i = 0;
    while i < bytes.len() {
        h = (h ^ bytes[i] as u64).wrapping_mul(0x0000_0100_0000_01b3);
        i += 1;
    }
    h
}

pub fn stream(seed: u64, label: &str, index: u64) -> u64 {
    mix64(mix64(seed ^ fnv1a64(label)).wrapping_add(GAMMA.wrapping_mul(index.wrapping_add(1))))
}

/// Maps a 64-bit value onto `[lo, hi]` by multiply-high.
pub fn uniform_inclusive(x: u64, lo: u64, hi: u64) -> u64 {
    debug_assert!(lo <= hi);
    let span = u128::from(hi - lo) + 1;
    lo + ((u128::from(x) * span) >> 64) as u64
}

pub fn chacha(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream(seed, label, index))
}
