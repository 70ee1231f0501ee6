//! Seed derivation. Every stochastic component draws from its own stream,
//! keyed by `(global seed, stage name, item id)`, so stages can be rerun in
//! isolation and still reproduce the same numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `hash(global, stage, item)`: FNV-1a over the stage name and the two
/// integers, finished with a splitmix64 mix.
pub fn derive_seed(global: u64, stage: &str, item: u64) -> u64 {
    let mut h = FNV_OFFSET;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
    };
    feed(&global.to_le_bytes());
    feed(stage.as_bytes());
    feed(&[0xff]);
    feed(&item.to_le_bytes());
    splitmix64(h)
}

/// A ChaCha8 generator on the derived stream.
pub fn stream_rng(global: u64, stage: &str, item: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(global, stage, item))
}
