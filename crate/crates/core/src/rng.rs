//! Seeded randomness. Every stream is a `Pcg64` (PCG XSL RR 128/64) whose
//! seed is derived from the run's root seed and a purpose tag.

use rand::SeedableRng;
use rand_pcg::Pcg64;

pub type RunRng = Pcg64;

pub fn rng_from_seed(seed: u64) -> RunRng {
    Pcg64::seed_from_u64(seed)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Independent sub-seed for `(tag, index)` under `root`.
pub fn derive_seed(root: u64, tag: &str, index: u64) -> u64 {
    splitmix64(splitmix64(root ^ fnv1a(tag)).wrapping_add(index))
}

pub fn derive_rng(root: u64, tag: &str, index: u64) -> RunRng {
    rng_from_seed(derive_seed(root, tag, index))
}
