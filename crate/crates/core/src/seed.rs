//! Deterministic derivation of child seeds from a root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed for the `index`-th consumer tagged `stream` under `root`.
///
/// Uses the splitmix64 finalizer so nearby roots and indices decorrelate.
pub fn derive(root: u64, stream: &str, index: u64) -> u64 {
    let mut h = root ^ 0x9e37_79b9_7f4a_7c15;
    for b in stream.bytes() {
        h = mix(h ^ u64::from(b));
    }
    mix(h ^ mix(index.wrapping_add(0x632b_e59b_d9b4_e019)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
