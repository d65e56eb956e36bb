//! Seeded 64-bit mixing used for ownership, colorings and per-iteration seeds.
//!
//! Every worker evaluates the same pure function of `(seed, id)`, so vertex
//! owners and colors agree across workers without being communicated.

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn hash_pair(seed: u64, x: u64) -> u64 {
    mix64(mix64(seed) ^ x.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Maps a uniform 64-bit hash onto `0..n` (multiply-shift, no modulo bias
/// beyond 2^-64 per bucket).
#[inline]
pub fn bounded(h: u64, n: u64) -> u64 {
    ((h as u128 * n as u128) >> 64) as u64
}

/// Seed of the `iteration`-th coloring derived from the run's master seed.
pub fn iteration_seed(master: u64, iteration: u64) -> u64 {
    hash_pair(master ^ 0x6A09_E667_F3BC_C908, iteration)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_stays_in_range() {
        for i in 0..1000u64 {
            assert!(bounded(mix64(i), 7) < 7);
        }
        assert_eq!(bounded(u64::MAX, 5), 4);
        assert_eq!(bounded(0, 5), 0);
    }

    #[test]
    fn iteration_seeds_differ() {
        assert_ne!(iteration_seed(1, 0), iteration_seed(1, 1));
        assert_ne!(iteration_seed(1, 0), iteration_seed(2, 0));
    }
}
