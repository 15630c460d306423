//! Counter-based hashing for seeded, order-independent random choices.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of an ordered list of words; distinct lists give independent-looking values.
#[inline]
pub fn hash_words(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |acc, w| mix64(acc ^ mix64(*w)))
}

/// Derives a child seed, e.g. one per relation or per generator chunk.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    hash_words(&[seed, stream])
}
