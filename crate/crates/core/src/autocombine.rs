//! Automatic local aggregation for jobs whose intermediate value is a
//! declared monoid: a derived combiner (fold each key group to one record)
//! and an in-mapper wrapper that folds values into a bounded table across
//! the whole split, emitting on close or on capacity eviction.
//!
//! Both require a commutative monoid: reduce groups carry no guaranteed
//! value order, so a combiner that cared about order could change answers.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{CombinerFn, Doc, JobError, MapFn, Record};
use crate::monoid::{combine_all, CombineError, MonoidDescriptor};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutoCombineError {
    #[error("monoid {0} is not commutative; automatic combining requires a commutative monoid")]
    NonCommutative(String),
    #[error("in-mapper capacity must be at least 1")]
    ZeroCapacity,
}

/// Builds a combiner that replaces each (key, values) group with the single
/// record (key, fold of values). Input and output types are equal by
/// construction, so the derived combiner always satisfies registration.
pub fn derive_combiner(m: &MonoidDescriptor<Value>) -> Result<CombinerFn, AutoCombineError> {
    if !m.is_commutative() {
        return Err(AutoCombineError::NonCommutative(m.name().to_string()));
    }
    let m = m.clone();
    Ok(Arc::new(move |key, values| {
        let folded = combine_all(&m, values.iter())?;
        Ok(vec![Record::new(key.to_vec(), folded)])
    }))
}

/// The per-split table held by an in-mapper-combining mapper. Each entry is
/// the monoid fold of every value absorbed for that key since the key was
/// last flushed; the table never holds more than `capacity` distinct keys.
#[derive(Debug)]
pub struct InMapperState {
    table: BTreeMap<Vec<u8>, Value>,
    capacity: usize,
    flush_count: u64,
}

impl InMapperState {
    pub fn new(capacity: usize) -> Self {
        Self {
            table: BTreeMap::new(),
            capacity,
            flush_count: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Capacity-triggered flushes so far.
    pub fn flush_count(&self) -> u64 {
        self.flush_count
    }

    /// Folds one emitted record into the table. When the record's key is new
    /// and the table is full, the largest-keyed entry is emitted and evicted
    /// first; partial flushes are harmless because the downstream fold
    /// re-combines them.
    pub fn absorb(
        &mut self,
        m: &MonoidDescriptor<Value>,
        record: Record,
    ) -> Result<Option<Record>, CombineError> {
        if let Some(held) = self.table.get_mut(&record.key) {
            *held = m.combine(held, &record.value)?;
            return Ok(None);
        }
        let evicted = if self.table.len() >= self.capacity {
            let largest = self
                .table
                .keys()
                .next_back()
                .expect("capacity >= 1, so a full table is non-empty")
                .clone();
            let value = self.table.remove(&largest).expect("key just observed");
            self.flush_count += 1;
            Some(Record::new(largest, value))
        } else {
            None
        };
        // Folding into the identity on first sight doubles as a type check
        // against the monoid's carrier.
        let first = m.combine(&m.identity(), &record.value)?;
        self.table.insert(record.key, first);
        Ok(evicted)
    }

    /// Emits one record per held key, in key order.
    pub fn close(self) -> Vec<Record> {
        self.table
            .into_iter()
            .map(|(key, value)| Record::new(key, value))
            .collect()
    }
}

/// A mapper wrapped with the in-mapper-combining lifecycle: a fresh table
/// per split, every inner emission folded into it, held entries emitted
/// after the entire split has been processed.
pub struct InMapperMapper {
    inner: MapFn,
    monoid: MonoidDescriptor<Value>,
    capacity: usize,
}

impl InMapperMapper {
    pub fn run_split(&self, docs: &[Doc<'_>]) -> Result<(Vec<Record>, u64), JobError> {
        let mut state = InMapperState::new(self.capacity);
        let mut out = Vec::new();
        for (docid, line) in docs {
            for record in (self.inner)(*docid, line)? {
                if let Some(evicted) = state.absorb(&self.monoid, record)? {
                    out.push(evicted);
                }
            }
        }
        let flushes = state.flush_count();
        out.extend(state.close());
        Ok((out, flushes))
    }
}

/// Wraps `map_fn` with the in-mapper-combining lifecycle over `m`.
pub fn wrap_in_mapper(
    map_fn: MapFn,
    m: &MonoidDescriptor<Value>,
    capacity: usize,
) -> Result<InMapperMapper, AutoCombineError> {
    if !m.is_commutative() {
        return Err(AutoCombineError::NonCommutative(m.name().to_string()));
    }
    if capacity == 0 {
        return Err(AutoCombineError::ZeroCapacity);
    }
    Ok(InMapperMapper {
        inner: map_fn,
        monoid: m.clone(),
        capacity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::monoid::MonoidDescriptor;
    use crate::sumcount::SumCount;
    use proptest::prelude::*;

    fn mean_mapper() -> MapFn {
        Arc::new(|docid, line| {
            let (key, value) = line.split_once('\t').ok_or_else(|| JobError::Parse {
                line: docid,
                msg: "expected key<TAB>integer".into(),
            })?;
            let value: i64 = value.parse().map_err(|e| JobError::Parse {
                line: docid,
                msg: format!("{e}"),
            })?;
            Ok(vec![Record::new(
                key,
                Value::SumCount(SumCount::single(value)),
            )])
        })
    }

    fn concat_monoid() -> MonoidDescriptor<Value> {
        // String concatenation: associative, identity "", not commutative.
        MonoidDescriptor::new("concat", Value::Str(String::new()), false, |a, b| {
            match (a, b) {
                (Value::Str(x), Value::Str(y)) => Ok(Value::Str(format!("{x}{y}"))),
                _ => Err(CombineError::TypeMismatch {
                    expected: "string",
                    found: "other",
                }),
            }
        })
    }

    #[test]
    fn derived_combiner_folds_a_group_to_one_record() {
        let combiner = derive_combiner(&catalog::sum_count()).unwrap();
        let out = combiner(
            b"a",
            &[
                Value::SumCount(SumCount::single(1)),
                Value::SumCount(SumCount::single(2)),
            ],
        )
        .unwrap();
        assert_eq!(
            out,
            vec![Record::new("a", Value::SumCount(SumCount::new(3, 2)))]
        );
    }

    #[test]
    fn derived_combiner_keeps_singletons() {
        let combiner = derive_combiner(&catalog::int_sum()).unwrap();
        let out = combiner(b"k", &[Value::Int(9)]).unwrap();
        assert_eq!(out, vec![Record::new("k", Value::Int(9))]);
    }

    #[test]
    fn non_commutative_monoids_are_refused() {
        let err = match derive_combiner(&concat_monoid()) {
            Err(e) => e,
            Ok(_) => panic!("concat monoid should be refused"),
        };
        assert_eq!(err, AutoCombineError::NonCommutative("concat".into()));
        assert!(wrap_in_mapper(mean_mapper(), &concat_monoid(), 4).is_err());
    }

    #[test]
    fn close_emits_per_key_folds() {
        let wrapped = wrap_in_mapper(mean_mapper(), &catalog::sum_count(), 100).unwrap();
        let (records, flushes) = wrapped
            .run_split(&[(0, "a\t1"), (1, "a\t2"), (2, "b\t7")])
            .unwrap();
        assert_eq!(flushes, 0);
        assert_eq!(
            records,
            vec![
                Record::new("a", Value::SumCount(SumCount::new(3, 2))),
                Record::new("b", Value::SumCount(SumCount::new(7, 1))),
            ]
        );
    }

    #[test]
    fn capacity_one_still_covers_every_value() {
        let wrapped = wrap_in_mapper(mean_mapper(), &catalog::sum_count(), 1).unwrap();
        let (records, flushes) = wrapped
            .run_split(&[(0, "a\t1"), (1, "a\t2"), (2, "b\t7")])
            .unwrap();
        assert!(flushes >= 1);
        // The multiset of per-key folds must match the unbounded run.
        let mut folded: BTreeMap<Vec<u8>, SumCount> = BTreeMap::new();
        for r in records {
            let sc = r.value.expect_sum_count().unwrap();
            let entry = folded.entry(r.key).or_insert(SumCount::IDENTITY);
            *entry = entry.merge(&sc).unwrap();
        }
        assert_eq!(folded[b"a".as_slice()], SumCount::new(3, 2));
        assert_eq!(folded[b"b".as_slice()], SumCount::new(7, 1));
    }

    #[test]
    fn eviction_picks_the_largest_key() {
        let m = catalog::int_sum();
        let mut state = InMapperState::new(2);
        assert!(state
            .absorb(&m, Record::new("b", Value::Int(1)))
            .unwrap()
            .is_none());
        assert!(state
            .absorb(&m, Record::new("z", Value::Int(2)))
            .unwrap()
            .is_none());
        let evicted = state.absorb(&m, Record::new("a", Value::Int(3))).unwrap();
        assert_eq!(evicted, Some(Record::new("z", Value::Int(2))));
        assert_eq!(state.flush_count(), 1);
        assert_eq!(state.len(), 2);
    }

    #[test]
    fn empty_split_emits_nothing() {
        let wrapped = wrap_in_mapper(mean_mapper(), &catalog::sum_count(), 8).unwrap();
        let (records, flushes) = wrapped.run_split(&[]).unwrap();
        assert!(records.is_empty());
        assert_eq!(flushes, 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Whatever the eviction schedule, emissions fold per key to the
        /// same elements as a direct per-key fold of the raw stream.
        #[test]
        fn emissions_fold_to_raw_per_key_folds(
            pairs in proptest::collection::vec((0u8..6, -50i64..50), 0..60),
            capacity in prop_oneof![Just(1usize), Just(2), Just(16), Just(usize::MAX)],
        ) {
            let m = catalog::sum_count();
            let mut state = InMapperState::new(capacity);
            let mut emitted = Vec::new();
            let mut oracle: BTreeMap<Vec<u8>, SumCount> = BTreeMap::new();
            for (k, v) in &pairs {
                let key = format!("k{k}").into_bytes();
                oracle
                    .entry(key.clone())
                    .and_modify(|sc| *sc = sc.merge(&SumCount::single(*v)).unwrap())
                    .or_insert_with(|| SumCount::single(*v));
                let record = Record::new(key, Value::SumCount(SumCount::single(*v)));
                if let Some(out) = state.absorb(&m, record).unwrap() {
                    emitted.push(out);
                }
            }
            emitted.extend(state.close());

            let mut folded: BTreeMap<Vec<u8>, SumCount> = BTreeMap::new();
            for r in &emitted {
                let sc = r.value.expect_sum_count().unwrap();
                let entry = folded.entry(r.key.clone()).or_insert(SumCount::IDENTITY);
                *entry = entry.merge(&sc).unwrap();
            }
            prop_assert_eq!(folded, oracle);
            // Coalescing never inflates the record count.
            prop_assert!(emitted.len() <= pairs.len());
        }
    }
}
