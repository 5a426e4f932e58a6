//! Deterministic row and column subsampling.
//!
//! Each boosting round draws from its own ChaCha8 stream whose 32-byte seed
//! is `random_state` (little-endian u64) followed by the round index
//! (little-endian u64) and sixteen zero bytes. Rows are drawn first, then
//! columns. A draw of `k` out of `n` is a partial Fisher–Yates shuffle
//! using Lemire's multiply-and-reject bounded integers, returned in
//! ascending order. Nothing here depends on platform word size.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn round_rng(random_state: u64, round: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&random_state.to_le_bytes());
    seed[8..16].copy_from_slice(&round.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Uniform integer in `0..bound`.
pub fn uniform_below(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0);
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let product = u128::from(rng.next_u64()) * u128::from(bound);
        if (product as u64) >= threshold {
            return (product >> 64) as u64;
        }
    }
}

/// `ceil(fraction * n)` clamped to `1..=n`.
pub fn sample_size(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).ceil() as usize).clamp(1.min(n), n)
}

/// `k` distinct indices from `0..n`, ascending.
pub fn sample_without_replacement(rng: &mut impl RngCore, n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    if k == n {
        return (0..n).collect();
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + uniform_below(rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}
