//! Executable example jobs: per-key means (four variants), word count,
//! windowed term co-occurrence stripes, and a distinct-count job backed by
//! the HyperLogLog monoid.
//!
//! Input formats: mean jobs read `key<TAB>integer` lines; corpus jobs treat
//! each line as one document, whitespace-split and lowercased. Neighbor
//! windows never cross a line boundary.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::Rational64;

use crate::catalog;
use crate::engine::{Combiner, JobError, JobSpec, Record, Strategy};
use crate::monoid::combine_all;
use crate::stripe::Stripe;
use crate::sumcount::SumCount;
use crate::value::{Value, ValueType};

/// Hash seed shared by every sketch a job's mappers create, so per-split
/// sketches are always merge-compatible.
pub const SKETCH_HASH_SEED: u64 = 0xd157_c0de;

/// Key under which the distinct-count job accumulates its single sketch.
pub const DISTINCT_KEY: &str = "distinct";

pub const JOB_NAMES: [&str; 7] = [
    "mean_naive",
    "mean_broken",
    "mean_monoid",
    "mean_inmapper",
    "wordcount",
    "cooccurrence_stripes",
    "distinct_hll",
];

/// Per-job knobs surfaced by the CLI.
#[derive(Debug, Clone)]
pub struct JobParams {
    /// Co-occurrence neighbor distance in tokens.
    pub window: usize,
    /// HyperLogLog precision for the distinct-count job.
    pub precision: u8,
    /// Count only following tokens as neighbors (asymmetric relations such
    /// as bigrams). Default is the symmetric window.
    pub forward_only: bool,
    /// Merge per-occurrence stripes within a document before emitting. Off
    /// by default; the stripe monoid makes it a pure optimization.
    pub coalesce_doc_stripes: bool,
}

impl Default for JobParams {
    fn default() -> Self {
        Self {
            window: 2,
            precision: 12,
            forward_only: false,
            coalesce_doc_stripes: false,
        }
    }
}

/// A tokenized input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusDocument {
    pub docid: u64,
    pub terms: Vec<String>,
}

impl CorpusDocument {
    pub fn from_line(docid: u64, line: &str) -> Self {
        Self {
            docid,
            terms: tokenize(line),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CooccurrenceConfig {
    pub window: usize,
    pub forward_only: bool,
}

/// Whitespace-split, lowercased tokens.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(|t| t.to_lowercase()).collect()
}

/// Tokens at positions `j != i` with `|j - i| <= window` (only `j > i` in
/// forward-only mode), in position order. Repeated context tokens are
/// counted once per occurrence, not deduplicated.
pub fn neighbors<'a>(doc: &'a CorpusDocument, i: usize, cfg: &CooccurrenceConfig) -> Vec<&'a str> {
    assert!(i < doc.terms.len(), "token index out of range");
    let lo = if cfg.forward_only {
        i + 1
    } else {
        i.saturating_sub(cfg.window)
    };
    let hi = (i + cfg.window).min(doc.terms.len().saturating_sub(1));
    (lo..=hi)
        .filter(|&j| j != i)
        .map(|j| doc.terms[j].as_str())
        .collect()
}

fn parse_mean_line(docid: u64, line: &str) -> Result<Option<(String, i64)>, JobError> {
    if line.is_empty() {
        return Ok(None);
    }
    let (key, value) = line.split_once('\t').ok_or_else(|| JobError::Parse {
        line: docid,
        msg: format!("expected key<TAB>integer, got {line:?}"),
    })?;
    if key.is_empty() {
        return Err(JobError::Parse {
            line: docid,
            msg: "record key must be non-empty".into(),
        });
    }
    let value = value.trim().parse().map_err(|e| JobError::Parse {
        line: docid,
        msg: format!("bad integer {value:?}: {e}"),
    })?;
    Ok(Some((key.to_string(), value)))
}

fn checked_int_sum(values: &[Value]) -> Result<(i64, u64), JobError> {
    let mut sum = 0i64;
    for v in values {
        sum = sum
            .checked_add(v.expect_int()?)
            .ok_or_else(|| JobError::Other("sum overflow".into()))?;
    }
    Ok((sum, values.len() as u64))
}

fn rational_mean(sum: i64, cnt: u64) -> Result<Value, JobError> {
    SumCount::new(sum, cnt)
        .mean()
        .map(Value::Rat)
        .map_err(|_| JobError::EmptyGroup)
}

/// The inefficient baseline: mappers emit raw integers and the reducer
/// computes the mean directly. The reducer cannot double as a combiner (a
/// mean of means is not the mean), so the job declares neither a combiner
/// nor a monoid and only runs under strategy `none`.
fn mean_naive() -> JobSpec {
    JobSpec {
        name: "mean_naive".into(),
        map_fn: Arc::new(|docid, line| {
            Ok(parse_mean_line(docid, line)?
                .map(|(key, value)| vec![Record::new(key, Value::Int(value))])
                .unwrap_or_default())
        }),
        reduce_fn: Arc::new(|key, values| {
            let (sum, cnt) = checked_int_sum(values)?;
            Ok(vec![Record::new(key.to_vec(), rational_mean(sum, cnt)?)])
        }),
        combiner: None,
        monoid: None,
        map_output_type: ValueType::Int,
        reducer_input_type: ValueType::Int,
    }
}

/// The classic broken attempt: integer mapper output, a combiner that turns
/// integer lists into (sum, cnt) pairs, and a reducer that expects pairs.
/// Registration rejects it because the combiner's input and output types
/// differ; its answer would otherwise depend on the combiner running
/// exactly once.
fn mean_broken() -> JobSpec {
    JobSpec {
        name: "mean_broken".into(),
        map_fn: Arc::new(|docid, line| {
            Ok(parse_mean_line(docid, line)?
                .map(|(key, value)| vec![Record::new(key, Value::Int(value))])
                .unwrap_or_default())
        }),
        reduce_fn: Arc::new(|key, values| {
            let mut acc = SumCount::IDENTITY;
            for v in values {
                acc = acc.merge(&v.expect_sum_count()?)?;
            }
            let sc = acc;
            Ok(vec![Record::new(
                key.to_vec(),
                rational_mean(sc.sum, sc.cnt)?,
            )])
        }),
        combiner: Some(Combiner {
            func: Arc::new(|key, values| {
                let (sum, cnt) = checked_int_sum(values)?;
                Ok(vec![Record::new(
                    key.to_vec(),
                    Value::SumCount(SumCount::new(sum, cnt)),
                )])
            }),
            input_type: ValueType::Int,
            output_type: ValueType::SumCount,
        }),
        monoid: None,
        map_output_type: ValueType::Int,
        reducer_input_type: ValueType::SumCount,
    }
}

/// The corrected mean: mappers emit the pair (r, 1), pairs combine by
/// element-wise sum, and the reducer folds then divides once at the end.
/// Declaring the pair monoid lets the engine combine anywhere, any number
/// of times, without changing the answer.
fn mean_monoid(name: &str) -> JobSpec {
    let monoid = catalog::sum_count();
    let reduce_monoid = monoid.clone();
    JobSpec {
        name: name.into(),
        map_fn: Arc::new(|docid, line| {
            Ok(parse_mean_line(docid, line)?
                .map(|(key, value)| {
                    vec![Record::new(key, Value::SumCount(SumCount::single(value)))]
                })
                .unwrap_or_default())
        }),
        reduce_fn: Arc::new(move |key, values| {
            let folded = combine_all(&reduce_monoid, values.iter())?;
            let sc = folded.expect_sum_count()?;
            Ok(vec![Record::new(
                key.to_vec(),
                rational_mean(sc.sum, sc.cnt)?,
            )])
        }),
        combiner: None,
        monoid: Some(monoid),
        map_output_type: ValueType::SumCount,
        reducer_input_type: ValueType::SumCount,
    }
}

/// Term frequency over the corpus via the integer-sum monoid.
fn wordcount() -> JobSpec {
    let monoid = catalog::int_sum();
    let reduce_monoid = monoid.clone();
    JobSpec {
        name: "wordcount".into(),
        map_fn: Arc::new(|docid, line| {
            Ok(CorpusDocument::from_line(docid, line)
                .terms
                .into_iter()
                .map(|term| Record::new(term, Value::Int(1)))
                .collect())
        }),
        reduce_fn: Arc::new(move |key, values| {
            let folded = combine_all(&reduce_monoid, values.iter())?;
            Ok(vec![Record::new(key.to_vec(), folded)])
        }),
        combiner: None,
        monoid: Some(monoid),
        map_output_type: ValueType::Int,
        reducer_input_type: ValueType::Int,
    }
}

/// Windowed co-occurrence counts, one stripe (term -> count map) per term.
/// Stripes form a monoid under element-wise sum, so the reducer and any
/// combiner are the same fold.
fn cooccurrence_stripes(params: &JobParams) -> JobSpec {
    let cfg = CooccurrenceConfig {
        window: params.window.max(1),
        forward_only: params.forward_only,
    };
    let coalesce = params.coalesce_doc_stripes;
    let monoid = catalog::stripe();
    let reduce_monoid = monoid.clone();
    JobSpec {
        name: "cooccurrence_stripes".into(),
        map_fn: Arc::new(move |docid, line| {
            let doc = CorpusDocument::from_line(docid, line);
            let mut per_occurrence = Vec::with_capacity(doc.terms.len());
            for i in 0..doc.terms.len() {
                let mut stripe = Stripe::new();
                for u in neighbors(&doc, i, &cfg) {
                    stripe.increment(u, 1);
                }
                per_occurrence.push((doc.terms[i].clone(), stripe));
            }
            if coalesce {
                let mut by_term: BTreeMap<String, Stripe> = BTreeMap::new();
                for (term, stripe) in per_occurrence {
                    match by_term.get_mut(&term) {
                        Some(held) => *held = held.merge(&stripe)?,
                        None => {
                            by_term.insert(term, stripe);
                        }
                    }
                }
                Ok(by_term
                    .into_iter()
                    .map(|(term, stripe)| Record::new(term, Value::Stripe(stripe)))
                    .collect())
            } else {
                Ok(per_occurrence
                    .into_iter()
                    .map(|(term, stripe)| Record::new(term, Value::Stripe(stripe)))
                    .collect())
            }
        }),
        reduce_fn: Arc::new(move |key, values| {
            let folded = combine_all(&reduce_monoid, values.iter())?;
            Ok(vec![Record::new(key.to_vec(), folded)])
        }),
        combiner: None,
        monoid: Some(monoid),
        map_output_type: ValueType::Stripe,
        reducer_input_type: ValueType::Stripe,
    }
}

/// Distinct-token estimate: every token becomes a one-item sketch under a
/// constant key, sketches merge by register-wise max, and the reducer emits
/// the estimate. Local aggregation collapses each split to one sketch.
fn distinct_hll(params: &JobParams) -> JobSpec {
    let precision = params.precision;
    let monoid = catalog::hll(precision, SKETCH_HASH_SEED);
    let reduce_monoid = monoid.clone();
    JobSpec {
        name: "distinct_hll".into(),
        map_fn: Arc::new(move |docid, line| {
            let doc = CorpusDocument::from_line(docid, line);
            Ok(doc
                .terms
                .iter()
                .map(|term| {
                    let mut sketch = crate::hll::HyperLogLog::new(precision, SKETCH_HASH_SEED);
                    sketch.insert(term.as_bytes());
                    Record::new(DISTINCT_KEY, Value::Hll(sketch))
                })
                .collect())
        }),
        reduce_fn: Arc::new(move |key, values| {
            let folded = combine_all(&reduce_monoid, values.iter())?;
            let estimate = folded.expect_hll()?.estimate();
            Ok(vec![Record::new(key.to_vec(), Value::Int(estimate as i64))])
        }),
        combiner: None,
        monoid: Some(monoid),
        map_output_type: ValueType::Hll,
        reducer_input_type: ValueType::Hll,
    }
}

/// Builds a registered job by name. `None` for unknown names.
pub fn build_job(name: &str, params: &JobParams) -> Option<JobSpec> {
    match name {
        "mean_naive" => Some(mean_naive()),
        "mean_broken" => Some(mean_broken()),
        "mean_monoid" => Some(mean_monoid("mean_monoid")),
        "mean_inmapper" => Some(mean_monoid("mean_inmapper")),
        "wordcount" => Some(wordcount()),
        "cooccurrence_stripes" => Some(cooccurrence_stripes(params)),
        "distinct_hll" => Some(distinct_hll(params)),
        _ => None,
    }
}

/// The strategy a job runs under when the caller does not pick one.
pub fn default_strategy(name: &str) -> Strategy {
    match name {
        "mean_naive" => Strategy::None,
        "mean_inmapper" | "distinct_hll" => Strategy::InMapper,
        _ => Strategy::Combiner,
    }
}

/// The mean-of-means inequality: averaging per-subset averages is not the
/// average. Exposed for tests and docs.
pub fn mean_of_means(groups: &[&[i64]]) -> Rational64 {
    let per_group: Vec<Rational64> = groups
        .iter()
        .map(|g| Rational64::new(g.iter().sum::<i64>(), g.len() as i64))
        .collect();
    per_group.iter().sum::<Rational64>() / Rational64::from(per_group.len() as i64)
}
