//! A monoid toolkit plus a deterministic in-process MapReduce engine.
//!
//! The premise: once a job's intermediate value forms a commutative monoid,
//! local aggregation stops being something the job author hand-rolls and
//! becomes an engine optimization — combiners can be derived from the
//! monoid's fold, in-mapper combining is the same fold held in a bounded
//! table, and the job's output is provably independent of how often (and
//! where) either runs.
//!
//! * [`monoid`] — descriptors and the randomized law checker.
//! * [`catalog`] — concrete monoids: integer sum, sum/count pairs, stripes,
//!   Bloom filters, count-min sketches, HyperLogLog.
//! * [`engine`] — split/map/combine/shuffle/reduce pipeline with shuffle
//!   cost metrics and a configurable combiner-application policy.
//! * [`autocombine`] — combiner derivation and the in-mapper wrapper.
//! * [`jobs`] — runnable example jobs with oracle-tested semantics.

pub mod autocombine;
pub mod bloom;
pub mod catalog;
pub mod cms;
pub mod engine;
pub mod hashing;
pub mod hll;
pub mod jobs;
pub mod monoid;
pub mod stripe;
pub mod sumcount;
pub mod value;

pub use engine::{run_job, JobResult, JobSpec, Record, RunConfig};
pub use monoid::MonoidDescriptor;
pub use value::Value;
