//! Seed derivation.
//!
//! Every random stream in the crate is keyed by `(root seed, domain, index)`
//! through a counter-based mix, so a stream's seed does not depend on how many
//! other streams were drawn before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named random streams. The discriminant is part of the derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    SyntheticPlanting = 1,
    SyntheticEmbeddings = 2,
    SyntheticVideos = 3,
    EncoderInit = 4,
    Shuffle = 5,
    RandomBaseline = 6,
    GradCheck = 7,
    ModelInit = 8,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(root: u64, domain: Domain, index: u64) -> u64 {
    let a = splitmix64(root);
    let b = splitmix64(a ^ (domain as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
    splitmix64(b ^ index.wrapping_mul(0xA076_1D64_78BD_642F))
}

pub fn stream_rng(root: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(root, domain, index))
}
