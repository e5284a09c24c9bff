//! Seeded random streams.
//!
//! Every command takes one seed. Independent consumers (layer initializers,
//! shuffles, dropout masks, trials) get their own ChaCha stream derived from
//! that seed and a label, so adding a consumer never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream `index` of the family named `label` under `seed`.
pub fn stream(seed: u64, label: &str, index: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(mix(fnv1a(label.as_bytes()) ^ mix(index)));
    rng
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed, for APIs that take a plain `u64`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    mix(seed ^ fnv1a(label.as_bytes()).rotate_left(17) ^ mix(index))
}
