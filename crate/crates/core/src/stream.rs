//! Counter-based random streams.
//!
//! Every random draw in a simulation is a pure function of a master seed and
//! a tuple of coordinates (purpose, vertex label, frog index, step index).
//! There is no generator state to advance, so adding a frog, removing one, or
//! reordering moves never shifts the numbers any other frog sees.

/// Purpose tags that separate otherwise identical coordinate tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Move = 0x6d6f_7665,
    Death = 0x6465_6174,
    Count = 0x636f_756e,
    Replica = 0x7265_706c,
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-sensitive combination of two words.
#[inline]
pub fn combine(acc: u64, word: u64) -> u64 {
    splitmix64(acc ^ splitmix64(word))
}

#[inline]
pub fn draw(seed: u64, domain: Domain, label: u64, index: u64, step: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = combine(h, domain as u64);
    h = combine(h, label);
    h = combine(h, index);
    combine(h, step)
}

/// Uniform in [0, 1) with 53 bits of resolution.
#[inline]
pub fn uniform(seed: u64, domain: Domain, label: u64, index: u64, step: u64) -> f64 {
    to_unit(draw(seed, domain, label, index, step))
}

#[inline]
pub fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform index in `0..n` (n > 0).
#[inline]
pub fn index_below(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}

/// Hash a byte string into a label word (FNV-1a followed by a mix).
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(h)
}

/// Derive a child seed, e.g. one per replica.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    draw(seed, Domain::Replica, tag, 0, 0)
}
