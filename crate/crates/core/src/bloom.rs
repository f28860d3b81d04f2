//! Mergeable Bloom filter: union of same-shaped filters is bitwise OR, the
//! all-zero filter is the identity, and membership has no false negatives.

use crate::hashing::{hash_bytes, row_seed};
use crate::monoid::CombineError;

/// A fixed-shape bit array with `k` derived hash functions. Two filters merge
/// only when `(m_bits, k, hash_seed)` match exactly; merging differently
/// hashed filters would be meaningless.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    m_bits: u32,
    k: u32,
    hash_seed: u64,
    words: Vec<u64>,
}

impl BloomFilter {
    pub fn new(m_bits: u32, k: u32, hash_seed: u64) -> Self {
        assert!(m_bits >= 1, "bloom filter needs at least one bit");
        assert!(k >= 1, "bloom filter needs at least one hash function");
        let n_words = (m_bits as usize).div_ceil(64);
        Self {
            m_bits,
            k,
            hash_seed,
            words: vec![0; n_words],
        }
    }

    pub fn m_bits(&self) -> u32 {
        self.m_bits
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn positions<'a>(&'a self, item: &'a [u8]) -> impl Iterator<Item = usize> + 'a {
        (0..self.k).map(move |i| {
            (hash_bytes(row_seed(self.hash_seed, u64::from(i)), item) % u64::from(self.m_bits))
                as usize
        })
    }

    /// Sets the `k` derived bit positions for `item` in place.
    pub fn insert(&mut self, item: &[u8]) {
        let positions: Vec<usize> = self.positions(item).collect();
        for pos in positions {
            self.words[pos / 64] |= 1u64 << (pos % 64);
        }
    }

    /// Pure form of [`insert`](Self::insert): returns the updated filter.
    pub fn add(&self, item: &[u8]) -> Self {
        let mut next = self.clone();
        next.insert(item);
        next
    }

    /// True whenever all `k` positions for `item` are set. Never false for an
    /// item that was added to this filter or to any filter merged into it.
    pub fn contains(&self, item: &[u8]) -> bool {
        self.positions(item)
            .all(|pos| self.words[pos / 64] & (1u64 << (pos % 64)) != 0)
    }

    /// Bitwise OR of the bit arrays; requires identical shape and seed.
    pub fn union(&self, other: &Self) -> Result<Self, CombineError> {
        if (self.m_bits, self.k, self.hash_seed) != (other.m_bits, other.k, other.hash_seed) {
            return Err(CombineError::IncompatibleSketch(format!(
                "bloom(m_bits={}, k={}, seed={}) vs bloom(m_bits={}, k={}, seed={})",
                self.m_bits, self.k, self.hash_seed, other.m_bits, other.k, other.hash_seed
            )));
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        Ok(Self {
            words,
            ..self.clone()
        })
    }

    /// Bit payload packed LSB-first, `ceil(m_bits / 8)` bytes.
    pub fn bit_bytes(&self) -> Vec<u8> {
        let n_bytes = (self.m_bits as usize).div_ceil(8);
        (0..n_bytes)
            .map(|i| ((self.words[i / 8] >> (8 * (i % 8))) & 0xff) as u8)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BloomFilter {
        BloomFilter::new(128, 3, 11)
    }

    #[test]
    fn no_false_negatives() {
        let mut f = small();
        f.insert(b"x");
        assert!(f.contains(b"x"));
    }

    #[test]
    fn add_is_idempotent() {
        let once = small().add(b"x");
        assert_eq!(once.add(b"x"), once);
    }

    #[test]
    fn union_distributes_over_add() {
        // Bitwise oracle at a small size: OR-ing single-item filters equals
        // adding both items to one filter.
        let z = BloomFilter::new(64, 4, 3);
        let merged = z.add(b"x").union(&z.add(b"y")).unwrap();
        assert_eq!(merged, z.add(b"x").add(b"y"));
    }

    #[test]
    fn zero_filter_is_identity() {
        let f = small().add(b"p").add(b"q");
        assert_eq!(small().union(&f).unwrap(), f);
        assert_eq!(f.union(&small()).unwrap(), f);
    }

    #[test]
    fn union_is_a_membership_superset() {
        let a = small().add(b"only-in-a");
        let b = small().add(b"only-in-b");
        let u = a.union(&b).unwrap();
        assert!(u.contains(b"only-in-a"));
        assert!(u.contains(b"only-in-b"));
    }

    #[test]
    fn mismatched_shape_is_rejected() {
        let a = BloomFilter::new(128, 3, 11);
        let b = BloomFilter::new(256, 3, 11);
        assert!(matches!(
            a.union(&b),
            Err(CombineError::IncompatibleSketch(_))
        ));
        let c = BloomFilter::new(128, 3, 12);
        assert!(a.union(&c).is_err());
    }

    #[test]
    fn bit_bytes_round_the_bit_length_up() {
        let f = BloomFilter::new(9, 1, 0);
        assert_eq!(f.bit_bytes().len(), 2);
    }
}
