//! Seed fan-out.
//!
//! Every stochastic stage draws from its own ChaCha8 stream. Stream seeds are
//! derived from the master seed by hashing a stage label and a path of indices:
//!
//! ```text
//! s0 = mix(master ^ fnv1a64(label))
//! s_{k+1} = mix(s_k ^ mix(index_k + 0x9E3779B97F4A7C15))
//! ```
//!
//! where `mix` is the SplitMix64 finaliser. A stage can therefore be rerun on its
//! own and still see exactly the numbers it saw inside a full pipeline run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

pub fn derive_seed(master: u64, label: &str, path: &[u64]) -> u64 {
    path.iter().fold(mix(master ^ fnv1a64(label)), |s, &i| {
        mix(s ^ mix(i.wrapping_add(GOLDEN)))
    })
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, label: &str, path: &[u64]) -> Rng {
    rng_from_seed(derive_seed(master, label, path))
}
