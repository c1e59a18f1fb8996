//! Deterministic derivation of sub-stream seeds.
//!
//! Every stage that needs its own RNG (per-repeat splits, per-class weight
//! init, per-variable permutations, …) derives a seed from the configured
//! base seed plus a stage tag, so adding or reordering stages never perturbs
//! the streams of unrelated stages.

/// Mixes `base` and `tag` into a new seed (splitmix64 finalizer over the
/// combined value).
pub fn derive(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Two-level derivation for (stage, index) addressing.
pub fn derive2(base: u64, tag: u64, index: u64) -> u64 {
    derive(derive(base, tag), index)
}
