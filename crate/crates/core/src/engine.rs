//! Deterministic in-process MapReduce runtime.
//!
//! The pipeline is: split the input, run mappers per split, optionally apply
//! combiner rounds per split (zero, one, or several — frameworks make no
//! guarantee, so neither does this engine), shuffle with hash partitioning
//! and a byte-order sort, then reduce. Every stage is deterministic given
//! the job, input, and config: map tasks may run in parallel but results are
//! merged in split order, reduce groups see values ordered by
//! (split index, emission order), and outputs come back sorted by key.
//!
//! Job registration enforces that the mapper-output, combiner-input,
//! combiner-output, and reducer-input value types all agree — combiners are
//! optimizations and must not be able to change a job's answer. A config
//! backdoor (`allow_broken`) skips that check so the failure mode it
//! prevents can be demonstrated.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::autocombine;
use crate::hashing::hash_bytes;
use crate::monoid::{CombineError, MonoidDescriptor};
use crate::value::{EncodeError, TypeError, Value, ValueType};

/// Fixed seed for the shuffle partitioner's key hash.
const PARTITION_HASH_SEED: u64 = 0x7a42;

/// One key–value pair. Keys are raw bytes ordered bytewise; intermediate
/// records must have non-empty keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub key: Vec<u8>,
    pub value: Value,
}

impl Record {
    pub fn new(key: impl Into<Vec<u8>>, value: Value) -> Self {
        Self {
            key: key.into(),
            value,
        }
    }
}

/// An input document: the line number and the line text.
pub type Doc<'a> = (u64, &'a str);

/// Errors raised inside user map/combine/reduce functions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JobError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("empty group: no observations")]
    EmptyGroup,
    #[error(transparent)]
    Combine(#[from] CombineError),
    #[error("{0}")]
    Other(String),
}

pub type MapFn = Arc<dyn Fn(u64, &str) -> Result<Vec<Record>, JobError> + Send + Sync>;
pub type ReduceFn = Arc<dyn Fn(&[u8], &[Value]) -> Result<Vec<Record>, JobError> + Send + Sync>;
pub type CombinerFn = Arc<dyn Fn(&[u8], &[Value]) -> Result<Vec<Record>, JobError> + Send + Sync>;

/// A user-supplied combiner with its declared value types.
#[derive(Clone)]
pub struct Combiner {
    pub func: CombinerFn,
    pub input_type: ValueType,
    pub output_type: ValueType,
}

/// A MapReduce job definition. Jobs that declare an intermediate monoid get
/// combining for free; jobs may instead carry an explicit combiner, which
/// takes precedence when both are present.
#[derive(Clone)]
pub struct JobSpec {
    pub name: String,
    pub map_fn: MapFn,
    pub reduce_fn: ReduceFn,
    pub combiner: Option<Combiner>,
    pub monoid: Option<MonoidDescriptor<Value>>,
    pub map_output_type: ValueType,
    pub reducer_input_type: ValueType,
}

/// How many combiner rounds each split receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerPolicy {
    Never,
    Once,
    Exactly(u32),
    /// Per-split round counts drawn uniformly from {0, 1, 2, 3}.
    Random {
        seed: u64,
    },
}

impl CombinerPolicy {
    pub fn rounds_for_split(&self, split: usize) -> u32 {
        match self {
            CombinerPolicy::Never => 0,
            CombinerPolicy::Once => 1,
            CombinerPolicy::Exactly(k) => *k,
            CombinerPolicy::Random { seed } => {
                (hash_bytes(*seed, &(split as u64).to_le_bytes()) % 4) as u32
            }
        }
    }
}

/// Local-aggregation strategy for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Mapper output goes straight to the shuffle.
    None,
    /// Combiner rounds per [`CombinerPolicy`]; uses the job's combiner or
    /// one derived from the intermediate monoid.
    Combiner,
    /// The mapper is wrapped with an in-memory table that folds values per
    /// key across the whole split and emits on close (or on eviction).
    InMapper,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n_splits: usize,
    pub n_reducers: usize,
    pub strategy: Strategy,
    pub policy: CombinerPolicy,
    /// Maximum distinct keys held by an in-mapper table; `None` = unbounded.
    pub capacity: Option<usize>,
    /// Skips the registration type check. Exists to demonstrate why the
    /// check matters; never set it otherwise.
    pub allow_broken: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_splits: 1,
            n_reducers: 1,
            strategy: Strategy::None,
            policy: CombinerPolicy::Never,
            capacity: None,
            allow_broken: false,
        }
    }
}

/// Shuffle and phase counters for one run. Per-task counters merge by
/// addition, so metrics from parallel tasks combine in any order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub map_output_records: u64,
    pub combine_input_records: u64,
    pub combine_output_records: u64,
    pub shuffled_records: u64,
    pub shuffled_bytes: u64,
    pub reduce_groups: u64,
    pub combiner_rounds_applied: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobResult {
    /// Output records sorted by key byte order.
    pub outputs: Vec<Record>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("job registration failed: {0}")]
    Registration(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("map phase failed on split {split}: {source}")]
    MapPhase { split: usize, source: JobError },
    #[error("combine phase failed on split {split}: {detail}")]
    CombinePhase { split: usize, detail: String },
    #[error("reduce phase failed on key \"{key}\": {source}")]
    ReducePhase { key: String, source: JobError },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("unsupported monoid: {0}")]
    UnsupportedMonoid(String),
}

/// Checks the type-equality contract: mapper output, combiner input/output,
/// reducer input, and any declared monoid must share one value type.
pub fn check_registration(job: &JobSpec) -> Result<(), EngineError> {
    if job.map_output_type != job.reducer_input_type {
        return Err(EngineError::Registration(format!(
            "type equality violated: mapper-output type {} does not equal reducer-input type {}",
            job.map_output_type, job.reducer_input_type
        )));
    }
    if let Some(c) = &job.combiner {
        if c.input_type != job.map_output_type {
            return Err(EngineError::Registration(format!(
                "type equality violated: combiner-input type {} does not equal mapper-output type {}",
                c.input_type, job.map_output_type
            )));
        }
        if c.output_type != c.input_type {
            return Err(EngineError::Registration(format!(
                "type equality violated: combiner-output type {} does not equal combiner-input type {}",
                c.output_type, c.input_type
            )));
        }
    }
    if let Some(m) = &job.monoid {
        let element = m.identity().value_type();
        if element != job.map_output_type {
            return Err(EngineError::Registration(format!(
                "type equality violated: intermediate monoid element type {} does not equal mapper-output type {}",
                element, job.map_output_type
            )));
        }
    }
    Ok(())
}

/// Contiguous, order-preserving partition into `n_splits` near-equal splits;
/// the first `len % n_splits` splits take the extra record.
pub fn split_input<T>(items: &[T], n_splits: usize) -> Vec<&[T]> {
    assert!(n_splits >= 1, "n_splits must be at least 1");
    let base = items.len() / n_splits;
    let extra = items.len() % n_splits;
    let mut splits = Vec::with_capacity(n_splits);
    let mut start = 0;
    for i in 0..n_splits {
        let size = base + usize::from(i < extra);
        splits.push(&items[start..start + size]);
        start += size;
    }
    splits
}

/// Canonical wire form of a record: little-endian key length, key bytes,
/// little-endian value length, canonical value bytes.
pub fn encode_record(record: &Record) -> Result<Vec<u8>, EncodeError> {
    if record.key.is_empty() {
        return Err(EncodeError::EmptyKey);
    }
    let value_bytes = record.value.canonical_bytes()?;
    let mut buf = Vec::with_capacity(8 + record.key.len() + value_bytes.len());
    buf.extend_from_slice(&(record.key.len() as u32).to_le_bytes());
    buf.extend_from_slice(&record.key);
    buf.extend_from_slice(&(value_bytes.len() as u32).to_le_bytes());
    buf.extend_from_slice(&value_bytes);
    Ok(buf)
}

fn check_intermediate_keys(split: usize, records: &[Record]) -> Result<(), EngineError> {
    if records.iter().any(|r| r.key.is_empty()) {
        return Err(EngineError::MapPhase {
            split,
            source: JobError::Other("intermediate record with empty key".into()),
        });
    }
    Ok(())
}

/// Runs the mapper over each split independently; emission order within a
/// split is preserved. Under [`Strategy::InMapper`] the mapper is wrapped
/// with the per-split folding table.
pub fn run_map_phase(
    job: &JobSpec,
    splits: &[&[Doc<'_>]],
    strategy: Strategy,
    capacity: Option<usize>,
) -> Result<Vec<Vec<Record>>, EngineError> {
    let in_mapper = match strategy {
        Strategy::InMapper => {
            let monoid = job.monoid.as_ref().ok_or_else(|| {
                EngineError::InvalidConfig(
                    "strategy in_mapper requires an intermediate monoid".into(),
                )
            })?;
            let capacity = capacity.unwrap_or(usize::MAX);
            Some(
                autocombine::wrap_in_mapper(job.map_fn.clone(), monoid, capacity)
                    .map_err(|e| EngineError::UnsupportedMonoid(e.to_string()))?,
            )
        }
        _ => None,
    };

    let results: Vec<Result<Vec<Record>, EngineError>> = splits
        .par_iter()
        .enumerate()
        .map(|(split_idx, docs)| {
            let records = match &in_mapper {
                Some(wrapped) => wrapped
                    .run_split(docs)
                    .map(|(records, _flushes)| records)
                    .map_err(|source| EngineError::MapPhase {
                        split: split_idx,
                        source,
                    })?,
                None => {
                    let mut out = Vec::new();
                    for (docid, line) in docs.iter() {
                        out.extend((job.map_fn)(*docid, line).map_err(|source| {
                            EngineError::MapPhase {
                                split: split_idx,
                                source,
                            }
                        })?);
                    }
                    out
                }
            };
            check_intermediate_keys(split_idx, &records)?;
            Ok(records)
        })
        .collect();

    // Surface the error from the lowest-numbered failing split so failures
    // are deterministic regardless of task scheduling.
    results.into_iter().collect()
}

/// Applies `rounds` combiner passes to one split's records. Each round
/// groups the split's records by key and runs the combiner once per group;
/// zero rounds passes records through untouched. Returns the surviving
/// records plus (input, output) record counts across all rounds.
pub fn apply_combiner_rounds(
    split_idx: usize,
    mut records: Vec<Record>,
    combiner: &Combiner,
    rounds: u32,
) -> Result<(Vec<Record>, u64, u64), EngineError> {
    let mut input_records = 0u64;
    let mut output_records = 0u64;
    for _ in 0..rounds {
        let mut groups: BTreeMap<Vec<u8>, Vec<Value>> = BTreeMap::new();
        for record in records {
            groups.entry(record.key).or_default().push(record.value);
        }
        let mut next = Vec::new();
        for (key, values) in groups {
            input_records += values.len() as u64;
            let emitted =
                (combiner.func)(&key, &values).map_err(|e| EngineError::CombinePhase {
                    split: split_idx,
                    detail: e.to_string(),
                })?;
            for record in &emitted {
                if record.value.value_type() != combiner.output_type {
                    return Err(EngineError::CombinePhase {
                        split: split_idx,
                        detail: format!(
                            "combiner emitted a {} value but declares output type {}",
                            record.value.value_type(),
                            combiner.output_type
                        ),
                    });
                }
                if record.key.is_empty() {
                    return Err(EngineError::CombinePhase {
                        split: split_idx,
                        detail: "combiner emitted a record with an empty key".into(),
                    });
                }
            }
            output_records += emitted.len() as u64;
            next.extend(emitted);
        }
        records = next;
    }
    Ok((records, input_records, output_records))
}

/// Key groups destined for one reducer, sorted by key.
pub type ReducerGroups = Vec<(Vec<u8>, Vec<Value>)>;

/// Partitions records by the seeded key hash, groups them per reducer, and
/// sorts groups by key byte order. Values within a group keep
/// (split index, emission order), a deterministic total order. Also returns
/// the shuffled record and canonical-encoding byte counts.
pub fn shuffle_and_sort(
    per_split: Vec<Vec<Record>>,
    n_reducers: usize,
) -> Result<(Vec<ReducerGroups>, u64, u64), EngineError> {
    assert!(n_reducers >= 1, "n_reducers must be at least 1");
    let mut shuffled_records = 0u64;
    let mut shuffled_bytes = 0u64;
    let mut partitions: Vec<BTreeMap<Vec<u8>, Vec<Value>>> = vec![BTreeMap::new(); n_reducers];
    for records in per_split {
        for record in records {
            shuffled_records += 1;
            shuffled_bytes += encode_record(&record)?.len() as u64;
            let reducer =
                (hash_bytes(PARTITION_HASH_SEED, &record.key) % n_reducers as u64) as usize;
            partitions[reducer]
                .entry(record.key)
                .or_default()
                .push(record.value);
        }
    }
    let groups = partitions
        .into_iter()
        .map(|p| p.into_iter().collect())
        .collect();
    Ok((groups, shuffled_records, shuffled_bytes))
}

/// Runs the reducer once per key group and returns all outputs sorted by
/// key. Reducers over distinct groups may run in parallel; output order is
/// deterministic regardless.
pub fn run_reduce_phase(
    job: &JobSpec,
    per_reducer: Vec<ReducerGroups>,
) -> Result<Vec<Record>, EngineError> {
    let results: Vec<Result<Vec<Record>, EngineError>> = per_reducer
        .into_par_iter()
        .map(|groups| {
            let mut out = Vec::new();
            for (key, values) in groups {
                let emitted =
                    (job.reduce_fn)(&key, &values).map_err(|source| EngineError::ReducePhase {
                        key: String::from_utf8_lossy(&key).into_owned(),
                        source,
                    })?;
                out.extend(emitted);
            }
            Ok(out)
        })
        .collect();
    let mut outputs = Vec::new();
    for r in results {
        outputs.extend(r?);
    }
    outputs.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(outputs)
}

fn validate_config(job: &JobSpec, config: &RunConfig) -> Result<(), EngineError> {
    if config.n_splits < 1 {
        return Err(EngineError::InvalidConfig(
            "n_splits must be at least 1".into(),
        ));
    }
    if config.n_reducers < 1 {
        return Err(EngineError::InvalidConfig(
            "n_reducers must be at least 1".into(),
        ));
    }
    if config.capacity == Some(0) {
        return Err(EngineError::InvalidConfig(
            "in-mapper capacity must be at least 1".into(),
        ));
    }
    match config.strategy {
        Strategy::Combiner if job.combiner.is_none() && job.monoid.is_none() => {
            Err(EngineError::InvalidConfig(format!(
                "job {} has neither a combiner nor an intermediate monoid; strategy combiner is unavailable",
                job.name
            )))
        }
        Strategy::InMapper if job.monoid.is_none() => Err(EngineError::InvalidConfig(format!(
            "job {} declares no intermediate monoid; strategy in_mapper is unavailable",
            job.name
        ))),
        _ => Ok(()),
    }
}

/// The combiner a run will actually apply: the job's own, or one derived
/// from the declared monoid.
fn effective_combiner(job: &JobSpec) -> Result<Option<Combiner>, EngineError> {
    if let Some(c) = &job.combiner {
        return Ok(Some(c.clone()));
    }
    match &job.monoid {
        Some(m) => {
            let func = autocombine::derive_combiner(m)
                .map_err(|e| EngineError::UnsupportedMonoid(e.to_string()))?;
            let element = m.identity().value_type();
            Ok(Some(Combiner {
                func,
                input_type: element,
                output_type: element,
            }))
        }
        None => Ok(None),
    }
}

/// Runs the full pipeline. Deterministic: identical (job, input, config)
/// yield an identical [`JobResult`].
pub fn run_job(
    job: &JobSpec,
    input: &[String],
    config: &RunConfig,
) -> Result<JobResult, EngineError> {
    if !config.allow_broken {
        check_registration(job)?;
    }
    validate_config(job, config)?;

    let docs: Vec<Doc<'_>> = input
        .iter()
        .enumerate()
        .map(|(i, line)| (i as u64, line.as_str()))
        .collect();
    let splits = split_input(&docs, config.n_splits);

    let per_split = run_map_phase(job, &splits, config.strategy, config.capacity)?;
    let map_output_records: u64 = per_split.iter().map(|s| s.len() as u64).sum();

    let mut combine_input_records = 0u64;
    let mut combine_output_records = 0u64;
    let mut rounds_applied = vec![0u32; config.n_splits];
    let per_split = if config.strategy == Strategy::Combiner {
        let combiner = effective_combiner(job)?.expect("validated above");
        let mut combined = Vec::with_capacity(per_split.len());
        for (split_idx, records) in per_split.into_iter().enumerate() {
            let rounds = config.policy.rounds_for_split(split_idx);
            rounds_applied[split_idx] = rounds;
            let (records, input, output) =
                apply_combiner_rounds(split_idx, records, &combiner, rounds)?;
            combine_input_records += input;
            combine_output_records += output;
            combined.push(records);
        }
        combined
    } else {
        per_split
    };

    let (per_reducer, shuffled_records, shuffled_bytes) =
        shuffle_and_sort(per_split, config.n_reducers)?;
    let reduce_groups: u64 = per_reducer.iter().map(|g| g.len() as u64).sum();

    let outputs = run_reduce_phase(job, per_reducer)?;

    Ok(JobResult {
        outputs,
        metrics: Metrics {
            map_output_records,
            combine_input_records,
            combine_output_records,
            shuffled_records,
            shuffled_bytes,
            reduce_groups,
            combiner_rounds_applied: rounds_applied,
        },
    })
}

/// TSV rendering of job outputs: `key TAB value`, newline-terminated.
pub fn render_tsv(outputs: &[Record]) -> String {
    let mut out = String::new();
    for record in outputs {
        out.push_str(&String::from_utf8_lossy(&record.key));
        out.push('\t');
        out.push_str(&record.value.render());
        out.push('\n');
    }
    out
}
