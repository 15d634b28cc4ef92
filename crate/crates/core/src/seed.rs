//! Deterministic seed derivation for substreams.
//!
//! Every random draw in the crate comes from a substream seed derived from the
//! root seed and a path of integer coordinates (day, node, patient, cell index,
//! replicate, ...). Derivation is a fixed splitmix64 chain, so streams are
//! identical across runs, platforms, and thread schedules.

/// splitmix64 finalizer; good avalanche, stable across platforms.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a substream seed from a root seed and a coordinate path.
///
/// Folding left-to-right means `derive(s, &[a, b])` differs from
/// `derive(s, &[b, a])` and from `derive(s, &[a])`.
pub fn derive(root: u64, path: &[u64]) -> u64 {
    let mut acc = splitmix64(root);
    for &part in path {
        acc = splitmix64(acc ^ part.wrapping_mul(0xff51_afd7_ed55_8ccd));
    }
    acc
}

/// A uniform draw in [0, 1) taken directly from a derived seed.
///
/// Used for one-shot Bernoulli decisions where spinning up a full RNG per
/// patient would be wasteful. 53 bits of the mixed seed form the mantissa.
pub fn unit_uniform(root: u64, path: &[u64]) -> f64 {
    let bits = derive(root, path);
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
