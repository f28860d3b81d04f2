//! Seeded 64-bit mixing hash shared by the sketches and the engine partitioner.
//!
//! Every hash in this crate is derived from one byte-string hash so that runs
//! are reproducible across platforms and so that sketch merge compatibility
//! can be expressed as parameter equality (including the seed).

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// splitmix64 finalizer; full-avalanche mixing of a single word.
pub fn mix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seeded FNV-1a over `data`, finalized with [`mix64`].
pub fn hash_bytes(seed: u64, data: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ mix64(seed);
    for &b in data {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h)
}

/// Seed for the i-th hash function of a multi-hash sketch, derived from the
/// sketch's own seed.
pub fn row_seed(seed: u64, row: u64) -> u64 {
    mix64(seed ^ row.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_deterministic() {
        assert_eq!(hash_bytes(7, b"abc"), hash_bytes(7, b"abc"));
    }

    #[test]
    fn seed_changes_hash() {
        assert_ne!(hash_bytes(1, b"abc"), hash_bytes(2, b"abc"));
    }

    #[test]
    fn rows_get_distinct_seeds() {
        let seeds: Vec<u64> = (0..16).map(|r| row_seed(42, r)).collect();
        for i in 0..seeds.len() {
            for j in (i + 1)..seeds.len() {
                assert_ne!(seeds[i], seeds[j]);
            }
        }
    }

    #[test]
    fn low_bits_are_well_spread() {
        // The partitioner and the sketches index with `hash % n`; a crude
        // chi-square-ish sanity check that small moduli see all residues.
        let mut buckets = [0u32; 8];
        for i in 0..4096u64 {
            let h = hash_bytes(0, &i.to_le_bytes());
            buckets[(h % 8) as usize] += 1;
        }
        for &count in &buckets {
            assert!((384..=640).contains(&count), "skewed bucket: {count}");
        }
    }
}
