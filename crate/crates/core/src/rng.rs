//! Seeded generators. Replica `r` of a run with seed `s` uses stream `s ^ r`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type BbsRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> BbsRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn replica_rng(seed: u64, replica: u64) -> BbsRng {
    ChaCha8Rng::seed_from_u64(seed ^ replica)
}

/// Independent sub-seed for the `tag`-th auxiliary stream of a run.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add(tag.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
