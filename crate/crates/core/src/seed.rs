//! Named seed sub-streams.
//!
//! Every random component derives its generator from the master seed plus a
//! path of labels, so any component can be re-seeded without shifting the
//! draws of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn label_hash(label: &str) -> u64 {
    // FNV-1a; stable across platforms and compiler versions.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed for the sub-stream `label` of `parent`.
pub fn derive(parent: u64, label: &str) -> u64 {
    splitmix(parent ^ splitmix(label_hash(label)))
}

/// Seed for an indexed sub-stream, e.g. one per series.
pub fn derive_indexed(parent: u64, label: &str, index: u64) -> u64 {
    splitmix(derive(parent, label) ^ splitmix(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sub_rng(parent: u64, label: &str) -> Rng {
    rng(derive(parent, label))
}
