//! Count-min sketch: a depth×width counter matrix with one hash per row.
//! Point estimates never undercount, and element-wise addition of
//! same-shaped sketches is a commutative monoid with the all-zero matrix as
//! identity.

use crate::hashing::{hash_bytes, row_seed};
use crate::monoid::CombineError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMinSketch {
    depth: u32,
    width: u32,
    hash_seed: u64,
    counters: Vec<u64>, // row-major depth × width
}

impl CountMinSketch {
    pub fn new(depth: u32, width: u32, hash_seed: u64) -> Self {
        assert!(depth >= 1, "count-min sketch needs at least one row");
        assert!(width >= 1, "count-min sketch needs at least one column");
        Self {
            depth,
            width,
            hash_seed,
            counters: vec![0; depth as usize * width as usize],
        }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    fn column(&self, row: u32, item: &[u8]) -> usize {
        (hash_bytes(row_seed(self.hash_seed, u64::from(row)), item) % u64::from(self.width))
            as usize
    }

    /// Adds `delta` at one position per row.
    pub fn insert(&mut self, item: &[u8], delta: u64) {
        for row in 0..self.depth {
            let idx = row as usize * self.width as usize + self.column(row, item);
            self.counters[idx] += delta;
        }
    }

    /// Pure form of [`insert`](Self::insert).
    pub fn add(&self, item: &[u8], delta: u64) -> Self {
        let mut next = self.clone();
        next.insert(item, delta);
        next
    }

    /// Minimum over rows of the counter at the item's hashed position; at
    /// least the true inserted count (one-sided error).
    pub fn estimate(&self, item: &[u8]) -> u64 {
        (0..self.depth)
            .map(|row| self.counters[row as usize * self.width as usize + self.column(row, item)])
            .min()
            .unwrap_or(0)
    }

    /// Element-wise counter addition; requires identical shape and seed.
    pub fn merge(&self, other: &Self) -> Result<Self, CombineError> {
        if (self.depth, self.width, self.hash_seed) != (other.depth, other.width, other.hash_seed) {
            return Err(CombineError::IncompatibleSketch(format!(
                "cms(d={}, w={}, seed={}) vs cms(d={}, w={}, seed={})",
                self.depth, self.width, self.hash_seed, other.depth, other.width, other.hash_seed
            )));
        }
        let mut counters = Vec::with_capacity(self.counters.len());
        for (a, b) in self.counters.iter().zip(&other.counters) {
            counters.push(a.checked_add(*b).ok_or(CombineError::Overflow("cms"))?);
        }
        Ok(Self {
            counters,
            ..self.clone()
        })
    }
}
