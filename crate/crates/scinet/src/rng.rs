//! Seed derivation for independent deterministic RNG streams.

/// Derive a stream seed from a base seed and a stream tag. Per-sample
/// generators use `substream(seed, index)` so any sample can be regenerated
/// in isolation, independent of iteration order.
pub fn substream(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
