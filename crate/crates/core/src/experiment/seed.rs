//! Per-realization seeds derived from one master seed.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

// SplitMix64 finalizer; a bijection on u64.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `q` at grid point `k`.
///
/// For a fixed master seed distinct (k, q) with q < 2³² always give distinct
/// seeds, since every step is a bijection.
pub fn derive_seed(master: u64, k: usize, q: usize) -> u64 {
    let code = ((k as u64) << 32) | (q as u64 & 0xFFFF_FFFF);
    mix(master ^ mix(code.wrapping_add(GOLDEN)))
}
