//! The dynamically typed record payload and its canonical byte encoding.
//!
//! Intermediate records carry one of the catalog element types (or a raw
//! integer/string). The canonical encoding is what the engine charges to the
//! shuffle-byte counter, so it is fixed and platform independent: integers
//! are 8-byte little-endian two's complement, composite values are
//! length-prefixed, and sketches serialize as a parameter header followed by
//! the raw register/bit/counter payload.

use std::fmt;

use num_rational::Rational64;
use thiserror::Error;

use crate::bloom::BloomFilter;
use crate::cms::CountMinSketch;
use crate::hll::HyperLogLog;
use crate::stripe::Stripe;
use crate::sumcount::SumCount;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Int,
    Str,
    Rat,
    SumCount,
    Stripe,
    Bloom,
    Cms,
    Hll,
}

impl ValueType {
    pub fn name(&self) -> &'static str {
        match self {
            ValueType::Int => "integer",
            ValueType::Str => "string",
            ValueType::Rat => "rational",
            ValueType::SumCount => "pair",
            ValueType::Stripe => "stripe",
            ValueType::Bloom => "bloom",
            ValueType::Cms => "cms",
            ValueType::Hll => "hll",
        }
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raised when a value of one type is used where another was declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("expected {expected} value, found {found}")]
pub struct TypeError {
    pub expected: ValueType,
    pub found: ValueType,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("intermediate record key must be non-empty")]
    EmptyKey,
    #[error("value of type {0} has no canonical encoding")]
    Unencodable(ValueType),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Str(String),
    Rat(Rational64),
    SumCount(SumCount),
    Stripe(Stripe),
    Bloom(BloomFilter),
    Cms(CountMinSketch),
    Hll(HyperLogLog),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Int(_) => ValueType::Int,
            Value::Str(_) => ValueType::Str,
            Value::Rat(_) => ValueType::Rat,
            Value::SumCount(_) => ValueType::SumCount,
            Value::Stripe(_) => ValueType::Stripe,
            Value::Bloom(_) => ValueType::Bloom,
            Value::Cms(_) => ValueType::Cms,
            Value::Hll(_) => ValueType::Hll,
        }
    }

    fn type_error(&self, expected: ValueType) -> TypeError {
        TypeError {
            expected,
            found: self.value_type(),
        }
    }

    pub fn expect_int(&self) -> Result<i64, TypeError> {
        match self {
            Value::Int(v) => Ok(*v),
            other => Err(other.type_error(ValueType::Int)),
        }
    }

    pub fn expect_sum_count(&self) -> Result<SumCount, TypeError> {
        match self {
            Value::SumCount(v) => Ok(*v),
            other => Err(other.type_error(ValueType::SumCount)),
        }
    }

    pub fn expect_stripe(&self) -> Result<&Stripe, TypeError> {
        match self {
            Value::Stripe(v) => Ok(v),
            other => Err(other.type_error(ValueType::Stripe)),
        }
    }

    pub fn expect_hll(&self) -> Result<&HyperLogLog, TypeError> {
        match self {
            Value::Hll(v) => Ok(v),
            other => Err(other.type_error(ValueType::Hll)),
        }
    }

    /// Canonical bytes for shuffle accounting. Bit-exact across platforms.
    /// Rationals are a post-processing type and never cross the shuffle, so
    /// they have no encoding.
    pub fn canonical_bytes(&self) -> Result<Vec<u8>, EncodeError> {
        let mut buf = Vec::new();
        match self {
            Value::Int(v) => buf.extend_from_slice(&v.to_le_bytes()),
            Value::Str(s) => buf.extend_from_slice(s.as_bytes()),
            Value::Rat(_) => return Err(EncodeError::Unencodable(ValueType::Rat)),
            Value::SumCount(sc) => {
                buf.extend_from_slice(&sc.sum.to_le_bytes());
                buf.extend_from_slice(&sc.cnt.to_le_bytes());
            }
            Value::Stripe(stripe) => {
                buf.extend_from_slice(&(stripe.len() as u32).to_le_bytes());
                for (term, count) in stripe.iter() {
                    buf.extend_from_slice(&(term.len() as u32).to_le_bytes());
                    buf.extend_from_slice(term.as_bytes());
                    buf.extend_from_slice(&count.to_le_bytes());
                }
            }
            Value::Bloom(f) => {
                buf.extend_from_slice(&f.m_bits().to_le_bytes());
                buf.extend_from_slice(&f.k().to_le_bytes());
                buf.extend_from_slice(&f.hash_seed().to_le_bytes());
                buf.extend_from_slice(&f.bit_bytes());
            }
            Value::Cms(s) => {
                buf.extend_from_slice(&s.depth().to_le_bytes());
                buf.extend_from_slice(&s.width().to_le_bytes());
                buf.extend_from_slice(&s.hash_seed().to_le_bytes());
                for counter in s.counters() {
                    buf.extend_from_slice(&counter.to_le_bytes());
                }
            }
            Value::Hll(h) => {
                buf.extend_from_slice(&u32::from(h.precision()).to_le_bytes());
                buf.extend_from_slice(&h.hash_seed().to_le_bytes());
                buf.extend_from_slice(h.registers());
            }
        }
        Ok(buf)
    }

    /// Text form used in TSV output. Deterministic for equal values.
    pub fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Str(s) => s.clone(),
            Value::Rat(r) => r.to_string(),
            Value::SumCount(sc) => format!("({},{})", sc.sum, sc.cnt),
            Value::Stripe(stripe) => {
                let parts: Vec<String> = stripe
                    .iter()
                    .map(|(term, count)| format!("{term}:{count}"))
                    .collect();
                parts.join(",")
            }
            Value::Bloom(_) | Value::Cms(_) | Value::Hll(_) => {
                let bytes = self
                    .canonical_bytes()
                    .expect("sketches always have a canonical encoding");
                format!("{}:{}", self.value_type(), hex(&bytes))
            }
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
