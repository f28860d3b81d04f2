//! Monoid descriptors and a randomized law-checking harness.
//!
//! A [`MonoidDescriptor`] packages an identity element with an associative
//! binary operation over one carrier type, plus a commutativity flag. The
//! engine only ever folds intermediate values through a descriptor, so any
//! value equipped with one can be combined early, late, in pieces, or not at
//! all without changing the result.
//!
//! Laws checked by [`check_laws`]:
//! * left identity:  `combine(identity, x) == x`
//! * right identity: `combine(x, identity) == x`
//! * associativity:  `combine(combine(a, b), c) == combine(a, combine(b, c))`
//! * commutativity (only when flagged): `combine(a, b) == combine(b, a)`
//!
//! Equality is structural and exact; no floating-point carriers are admitted.

use std::fmt;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Usage errors raised by combine operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombineError {
    #[error("element type mismatch: expected {expected}, found {found}")]
    TypeMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("incompatible sketch parameters: {0}")]
    IncompatibleSketch(String),
    #[error("integer overflow in {0} combine")]
    Overflow(&'static str),
}

type CombineOp<T> = Arc<dyn Fn(&T, &T) -> Result<T, CombineError> + Send + Sync>;

/// An identity element plus a pure associative binary operation over one
/// carrier type. Descriptors are immutable and cheap to clone.
#[derive(Clone)]
pub struct MonoidDescriptor<T> {
    name: String,
    identity: T,
    combine: CombineOp<T>,
    commutative: bool,
}

impl<T: Clone> MonoidDescriptor<T> {
    pub fn new<F>(name: impl Into<String>, identity: T, commutative: bool, combine: F) -> Self
    where
        F: Fn(&T, &T) -> Result<T, CombineError> + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            identity,
            combine: Arc::new(combine),
            commutative,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn identity(&self) -> T {
        self.identity.clone()
    }

    pub fn is_commutative(&self) -> bool {
        self.commutative
    }

    pub fn combine(&self, a: &T, b: &T) -> Result<T, CombineError> {
        (self.combine)(a, b)
    }
}

impl<T> fmt::Debug for MonoidDescriptor<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonoidDescriptor")
            .field("name", &self.name)
            .field("commutative", &self.commutative)
            .finish()
    }
}

/// Applies the descriptor's operation to `(a, b)`. Pure; inputs untouched.
pub fn combine<T: Clone>(m: &MonoidDescriptor<T>, a: &T, b: &T) -> Result<T, CombineError> {
    m.combine(a, b)
}

/// Left fold of `combine` over `xs`, starting from the identity. For an
/// associative operation any parenthesization yields an equal element, so
/// this is the canonical aggregation derived from a monoid.
pub fn combine_all<'a, T, I>(m: &MonoidDescriptor<T>, xs: I) -> Result<T, CombineError>
where
    T: Clone + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut acc = m.identity();
    for x in xs {
        acc = m.combine(&acc, x)?;
    }
    Ok(acc)
}

/// The laws exercised by [`check_laws`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    LeftIdentity,
    RightIdentity,
    Associativity,
    Commutativity,
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Law::LeftIdentity => "left-identity",
            Law::RightIdentity => "right-identity",
            Law::Associativity => "associativity",
            Law::Commutativity => "commutativity",
        };
        f.write_str(name)
    }
}

/// One sampled violation: the law that failed and the elements involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawFailure<T> {
    pub law: Law,
    pub elements: Vec<T>,
}

/// Outcome of a seeded law-checking run. `failures` is empty iff every
/// sampled instance of every applicable law held.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LawReport<T> {
    pub trials: u32,
    pub seed: u64,
    pub failures: Vec<LawFailure<T>>,
}

impl<T> LawReport<T> {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

impl<T: fmt::Debug> fmt::Display for LawReport<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "trials={} seed={} failures={}",
            self.trials,
            self.seed,
            self.failures.len()
        )?;
        const SHOWN: usize = 10;
        for failure in self.failures.iter().take(SHOWN) {
            writeln!(f, "  {}: {:?}", failure.law, failure.elements)?;
        }
        if self.failures.len() > SHOWN {
            writeln!(f, "  ... and {} more", self.failures.len() - SHOWN)?;
        }
        Ok(())
    }
}

/// Samples `trials` triples from `gen` and records every law violation.
/// Deterministic for a given seed; a combine error counts as a violation of
/// the law under test.
pub fn check_laws<T, G>(m: &MonoidDescriptor<T>, gen: G, trials: u32, seed: u64) -> LawReport<T>
where
    T: Clone + PartialEq,
    G: Fn(&mut ChaCha8Rng) -> T,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let identity = m.identity();
    for _ in 0..trials {
        let a = gen(&mut rng);
        let b = gen(&mut rng);
        let c = gen(&mut rng);

        match m.combine(&identity, &a) {
            Ok(v) if v == a => {}
            _ => failures.push(LawFailure {
                law: Law::LeftIdentity,
                elements: vec![a.clone()],
            }),
        }
        match m.combine(&a, &identity) {
            Ok(v) if v == a => {}
            _ => failures.push(LawFailure {
                law: Law::RightIdentity,
                elements: vec![a.clone()],
            }),
        }

        let left = m.combine(&a, &b).and_then(|ab| m.combine(&ab, &c));
        let right = m.combine(&b, &c).and_then(|bc| m.combine(&a, &bc));
        let assoc_holds = matches!((&left, &right), (Ok(l), Ok(r)) if l == r);
        if !assoc_holds {
            failures.push(LawFailure {
                law: Law::Associativity,
                elements: vec![a.clone(), b.clone(), c.clone()],
            });
        }

        if m.is_commutative() {
            let ab = m.combine(&a, &b);
            let ba = m.combine(&b, &a);
            let comm_holds = matches!((&ab, &ba), (Ok(l), Ok(r)) if l == r);
            if !comm_holds {
                failures.push(LawFailure {
                    law: Law::Commutativity,
                    elements: vec![a, b],
                });
            }
        }
    }
    LawReport {
        trials,
        seed,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn pair_sum() -> MonoidDescriptor<(i64, i64)> {
        MonoidDescriptor::new("pairsum", (0, 0), true, |a: &(i64, i64), b: &(i64, i64)| {
            Ok((a.0 + b.0, a.1 + b.1))
        })
    }

    fn int_sum() -> MonoidDescriptor<i64> {
        MonoidDescriptor::new("intsum", 0, true, |a: &i64, b: &i64| Ok(a + b))
    }

    fn broken_subtraction() -> MonoidDescriptor<i64> {
        MonoidDescriptor::new("intsub", 0, false, |a: &i64, b: &i64| Ok(a - b))
    }

    fn small_int(rng: &mut ChaCha8Rng) -> i64 {
        rng.gen_range(-1000..=1000)
    }

    #[test]
    fn combine_pairs_elementwise() {
        let m = pair_sum();
        assert_eq!(m.combine(&(1, 2), &(3, 4)).unwrap(), (4, 6));
        assert_eq!(m.combine(&(0, 0), &(7, 3)).unwrap(), (7, 3));
    }

    #[test]
    fn combine_ints() {
        assert_eq!(int_sum().combine(&2, &3).unwrap(), 5);
    }

    #[test]
    fn combine_all_examples() {
        let pairs = pair_sum();
        assert_eq!(combine_all(&pairs, []).unwrap(), (0, 0));
        assert_eq!(
            combine_all(&pairs, &[(1, 1), (2, 1), (3, 1)]).unwrap(),
            (6, 3)
        );
        assert_eq!(combine_all(&int_sum(), &[5]).unwrap(), 5);
    }

    #[test]
    fn laws_hold_for_pair_sum() {
        let m = pair_sum();
        let report = check_laws(&m, |rng| (small_int(rng), small_int(rng)), 1000, 42);
        assert_eq!(report.trials, 1000);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn broken_subtraction_fails_associativity() {
        // Independent check of the counterexample first: (0-0)-1 vs 0-(0-1).
        let (a, b, c) = (0i64, 0i64, 1i64);
        assert_ne!((a - b) - c, a - (b - c));
        let report = check_laws(&broken_subtraction(), small_int, 1000, 42);
        assert!(!report.passed());
        assert!(report.failures.iter().any(|f| f.law == Law::Associativity));
    }

    #[test]
    fn single_trial_report() {
        let report = check_laws(&int_sum(), small_int, 1, 7);
        assert_eq!(report.trials, 1);
        assert!(report.passed());
    }

    #[test]
    fn reports_are_deterministic_per_seed() {
        let a = check_laws(&broken_subtraction(), small_int, 100, 9);
        let b = check_laws(&broken_subtraction(), small_int, 100, 9);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn fold_splits_at_any_point(xs in proptest::collection::vec((-1000i64..1000, -1000i64..1000), 0..30), split in 0usize..31) {
            let m = pair_sum();
            let s = split.min(xs.len());
            let whole = combine_all(&m, &xs).unwrap();
            let left = combine_all(&m, &xs[..s]).unwrap();
            let right = combine_all(&m, &xs[s..]).unwrap();
            prop_assert_eq!(m.combine(&left, &right).unwrap(), whole);
        }

        #[test]
        fn fold_ignores_permutation_for_commutative(xs in proptest::collection::vec(-1000i64..1000, 0..20), swaps in proptest::collection::vec((0usize..20, 0usize..20), 0..10)) {
            let m = int_sum();
            let mut shuffled = xs.clone();
            for (i, j) in swaps {
                if !shuffled.is_empty() {
                    let (i, j) = (i % shuffled.len(), j % shuffled.len());
                    shuffled.swap(i, j);
                }
            }
            prop_assert_eq!(combine_all(&m, &shuffled).unwrap(), combine_all(&m, &xs).unwrap());
        }
    }
}
