//! HyperLogLog cardinality sketch with register-wise-max merge.
//!
//! Registers hold the maximum leading-zero rank seen for each bucket, one
//! plain byte per register. Merge is element-wise max, which makes the
//! all-zero sketch the identity and the merge idempotent as well as
//! commutative. The estimator is the standard harmonic mean with the alpha
//! bias constant, switching to linear counting in the small range.

use crate::hashing::hash_bytes;
use crate::monoid::CombineError;

pub const MIN_PRECISION: u8 = 4;
pub const MAX_PRECISION: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperLogLog {
    p: u8,
    hash_seed: u64,
    registers: Vec<u8>, // 2^p entries
}

impl HyperLogLog {
    pub fn new(p: u8, hash_seed: u64) -> Self {
        assert!(
            (MIN_PRECISION..=MAX_PRECISION).contains(&p),
            "precision must be in {MIN_PRECISION}..={MAX_PRECISION}, got {p}"
        );
        Self {
            p,
            hash_seed,
            registers: vec![0; 1 << p],
        }
    }

    pub fn precision(&self) -> u8 {
        self.p
    }

    pub fn hash_seed(&self) -> u64 {
        self.hash_seed
    }

    pub fn registers(&self) -> &[u8] {
        &self.registers
    }

    /// Updates the register selected by the top `p` hash bits with the
    /// leading-zero rank of the remaining bits (capped at `64 - p + 1`).
    pub fn insert(&mut self, item: &[u8]) {
        let h = hash_bytes(self.hash_seed, item);
        let idx = (h >> (64 - self.p)) as usize;
        let rest = h << self.p;
        let max_rank = 64 - u32::from(self.p) + 1;
        let rank = (rest.leading_zeros() + 1).min(max_rank) as u8;
        if rank > self.registers[idx] {
            self.registers[idx] = rank;
        }
    }

    /// Pure form of [`insert`](Self::insert).
    pub fn add(&self, item: &[u8]) -> Self {
        let mut next = self.clone();
        next.insert(item);
        next
    }

    /// Register-wise maximum; requires identical precision and seed.
    pub fn merge(&self, other: &Self) -> Result<Self, CombineError> {
        if (self.p, self.hash_seed) != (other.p, other.hash_seed) {
            return Err(CombineError::IncompatibleSketch(format!(
                "hll(p={}, seed={}) vs hll(p={}, seed={})",
                self.p, self.hash_seed, other.p, other.hash_seed
            )));
        }
        let registers = self
            .registers
            .iter()
            .zip(&other.registers)
            .map(|(a, b)| *a.max(b))
            .collect();
        Ok(Self {
            registers,
            ..self.clone()
        })
    }

    /// Harmonic-mean estimate with linear counting in the small range.
    /// Deterministic given the registers; an all-zero sketch estimates 0.
    pub fn estimate(&self) -> u64 {
        let m = self.registers.len() as f64;
        let alpha = match self.registers.len() {
            16 => 0.673,
            32 => 0.697,
            64 => 0.709,
            _ => 0.7213 / (1.0 + 1.079 / m),
        };
        let inverse_sum: f64 = self
            .registers
            .iter()
            .map(|&r| (-(f64::from(r))).exp2())
            .sum();
        let raw = alpha * m * m / inverse_sum;
        let zeros = self.registers.iter().filter(|&&r| r == 0).count();
        let corrected = if raw <= 2.5 * m && zeros > 0 {
            m * (m / zeros as f64).ln()
        } else {
            raw
        };
        corrected.round() as u64
    }
}
