//! Reproducible random-number substreams.
//!
//! Every stochastic draw in the crate comes from a generator derived purely
//! from `(seed, stream indices)`, so pulse k of scan point j is the same
//! regardless of execution order or thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive an independent generator from a base seed and a path of stream
/// indices (for example `[scan_point, repetition]`).
pub fn substream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x6a09e667f3bcc908;
    splitmix64(&mut state);
    for &p in path {
        let mut absorbed = p.wrapping_add(0x510e527fade682d1);
        state ^= splitmix64(&mut absorbed);
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
