//! Concrete monoids over [`Value`]: integer sum, sum/count pairs, stripes,
//! and the three mergeable sketches, plus seeded element generators so law
//! checking is reproducible. The deliberately broken integer-subtraction
//! fixture lives here too; it is resolvable by name but excluded from
//! [`entries`].

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::bloom::BloomFilter;
use crate::cms::CountMinSketch;
use crate::hll::HyperLogLog;
use crate::monoid::{CombineError, MonoidDescriptor};
use crate::stripe::Stripe;
use crate::sumcount::SumCount;
use crate::value::{Value, ValueType};

// Fixed shapes used by the law-check registry entries. Merging only ever
// happens between same-shaped sketches, so one shape per entry suffices.
const LAW_BLOOM_BITS: u32 = 256;
const LAW_BLOOM_K: u32 = 3;
const LAW_CMS_DEPTH: u32 = 4;
const LAW_CMS_WIDTH: u32 = 32;
const LAW_HLL_PRECISION: u8 = 6;
const LAW_SKETCH_SEED: u64 = 0x5eed;

fn mismatch(expected: ValueType, found: &Value) -> CombineError {
    CombineError::TypeMismatch {
        expected: expected.name(),
        found: found.value_type().name(),
    }
}

/// Natural-number addition (here: checked signed 64-bit addition) with 0 as
/// identity.
pub fn int_sum() -> MonoidDescriptor<Value> {
    MonoidDescriptor::new("intsum", Value::Int(0), true, |a, b| match (a, b) {
        (Value::Int(x), Value::Int(y)) => x
            .checked_add(*y)
            .map(Value::Int)
            .ok_or(CombineError::Overflow("intsum")),
        (Value::Int(_), other) | (other, _) => Err(mismatch(ValueType::Int, other)),
    })
}

/// Element-wise pair sum with identity `(0, 0)`.
pub fn sum_count() -> MonoidDescriptor<Value> {
    MonoidDescriptor::new(
        "sumcount",
        Value::SumCount(SumCount::IDENTITY),
        true,
        |a, b| match (a, b) {
            (Value::SumCount(x), Value::SumCount(y)) => x.merge(y).map(Value::SumCount),
            (Value::SumCount(_), other) | (other, _) => Err(mismatch(ValueType::SumCount, other)),
        },
    )
}

/// Element-wise sum of term counts with the empty map as identity.
pub fn stripe() -> MonoidDescriptor<Value> {
    MonoidDescriptor::new(
        "stripe",
        Value::Stripe(Stripe::new()),
        true,
        |a, b| match (a, b) {
            (Value::Stripe(x), Value::Stripe(y)) => x.merge(y).map(Value::Stripe),
            (Value::Stripe(_), other) | (other, _) => Err(mismatch(ValueType::Stripe, other)),
        },
    )
}

/// Bitwise-OR union of same-shaped Bloom filters.
pub fn bloom(m_bits: u32, k: u32, hash_seed: u64) -> MonoidDescriptor<Value> {
    MonoidDescriptor::new(
        "bloom",
        Value::Bloom(BloomFilter::new(m_bits, k, hash_seed)),
        true,
        |a, b| match (a, b) {
            (Value::Bloom(x), Value::Bloom(y)) => x.union(y).map(Value::Bloom),
            (Value::Bloom(_), other) | (other, _) => Err(mismatch(ValueType::Bloom, other)),
        },
    )
}

/// Element-wise counter addition of same-shaped count-min sketches.
pub fn cms(depth: u32, width: u32, hash_seed: u64) -> MonoidDescriptor<Value> {
    MonoidDescriptor::new(
        "cms",
        Value::Cms(CountMinSketch::new(depth, width, hash_seed)),
        true,
        |a, b| match (a, b) {
            (Value::Cms(x), Value::Cms(y)) => x.merge(y).map(Value::Cms),
            (Value::Cms(_), other) | (other, _) => Err(mismatch(ValueType::Cms, other)),
        },
    )
}

/// Register-wise maximum of same-parameter HyperLogLog sketches.
pub fn hll(precision: u8, hash_seed: u64) -> MonoidDescriptor<Value> {
    MonoidDescriptor::new(
        "hll",
        Value::Hll(HyperLogLog::new(precision, hash_seed)),
        true,
        |a, b| match (a, b) {
            (Value::Hll(x), Value::Hll(y)) => x.merge(y).map(Value::Hll),
            (Value::Hll(_), other) | (other, _) => Err(mismatch(ValueType::Hll, other)),
        },
    )
}

/// Integer subtraction pretending to be a monoid. It is not associative and
/// 0 is only a right identity; the law checker exists to catch exactly this.
pub fn int_subtraction_fixture() -> MonoidDescriptor<Value> {
    MonoidDescriptor::new("intsub", Value::Int(0), false, |a, b| match (a, b) {
        (Value::Int(x), Value::Int(y)) => x
            .checked_sub(*y)
            .map(Value::Int)
            .ok_or(CombineError::Overflow("intsub")),
        (Value::Int(_), other) | (other, _) => Err(mismatch(ValueType::Int, other)),
    })
}

pub type ElementGen = Box<dyn Fn(&mut ChaCha8Rng) -> Value + Send + Sync>;

/// A named monoid with its seeded element generator.
pub struct CatalogEntry {
    pub name: &'static str,
    pub descriptor: MonoidDescriptor<Value>,
    pub generator: ElementGen,
}

fn gen_int(rng: &mut ChaCha8Rng) -> Value {
    Value::Int(rng.gen_range(-1_000_000..=1_000_000))
}

fn gen_sum_count(rng: &mut ChaCha8Rng) -> Value {
    if rng.gen_ratio(1, 10) {
        return Value::SumCount(SumCount::IDENTITY);
    }
    Value::SumCount(SumCount::new(
        rng.gen_range(-1_000_000..=1_000_000),
        rng.gen_range(1..=1000),
    ))
}

const GEN_TERMS: [&str; 8] = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel",
];

fn gen_stripe(rng: &mut ChaCha8Rng) -> Value {
    let n = rng.gen_range(0..=6);
    let mut stripe = Stripe::new();
    for _ in 0..n {
        let term = GEN_TERMS[rng.gen_range(0..GEN_TERMS.len())];
        stripe.increment(term, rng.gen_range(1..=100));
    }
    Value::Stripe(stripe)
}

fn gen_item(rng: &mut ChaCha8Rng) -> [u8; 8] {
    rng.gen::<u64>().to_le_bytes()
}

fn gen_bloom(rng: &mut ChaCha8Rng) -> Value {
    let mut f = BloomFilter::new(LAW_BLOOM_BITS, LAW_BLOOM_K, LAW_SKETCH_SEED);
    for _ in 0..rng.gen_range(0..=8) {
        f.insert(&gen_item(rng));
    }
    Value::Bloom(f)
}

fn gen_cms(rng: &mut ChaCha8Rng) -> Value {
    let mut s = CountMinSketch::new(LAW_CMS_DEPTH, LAW_CMS_WIDTH, LAW_SKETCH_SEED);
    for _ in 0..rng.gen_range(0..=8) {
        let item = gen_item(rng);
        s.insert(&item, rng.gen_range(1..=5));
    }
    Value::Cms(s)
}

fn gen_hll(rng: &mut ChaCha8Rng) -> Value {
    let mut h = HyperLogLog::new(LAW_HLL_PRECISION, LAW_SKETCH_SEED);
    for _ in 0..rng.gen_range(0..=16) {
        h.insert(&gen_item(rng));
    }
    Value::Hll(h)
}

/// The lawful catalog, one entry per monoid the library ships.
pub fn entries() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry {
            name: "intsum",
            descriptor: int_sum(),
            generator: Box::new(gen_int),
        },
        CatalogEntry {
            name: "sumcount",
            descriptor: sum_count(),
            generator: Box::new(gen_sum_count),
        },
        CatalogEntry {
            name: "stripe",
            descriptor: stripe(),
            generator: Box::new(gen_stripe),
        },
        CatalogEntry {
            name: "bloom",
            descriptor: bloom(LAW_BLOOM_BITS, LAW_BLOOM_K, LAW_SKETCH_SEED),
            generator: Box::new(gen_bloom),
        },
        CatalogEntry {
            name: "cms",
            descriptor: cms(LAW_CMS_DEPTH, LAW_CMS_WIDTH, LAW_SKETCH_SEED),
            generator: Box::new(gen_cms),
        },
        CatalogEntry {
            name: "hll",
            descriptor: hll(LAW_HLL_PRECISION, LAW_SKETCH_SEED),
            generator: Box::new(gen_hll),
        },
    ]
}

/// Resolves a monoid by name, including the broken fixture ("intsub").
pub fn entry(name: &str) -> Option<CatalogEntry> {
    if name == "intsub" {
        return Some(CatalogEntry {
            name: "intsub",
            descriptor: int_subtraction_fixture(),
            generator: Box::new(gen_int),
        });
    }
    entries().into_iter().find(|e| e.name == name)
}

/// Every name [`entry`] resolves.
pub fn names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = entries().iter().map(|e| e.name).collect();
    names.push("intsub");
    names
}
