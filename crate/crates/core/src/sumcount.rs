//! The running-mean intermediate value: a partial sum paired with a count.

use num_rational::Rational64;
use thiserror::Error;

use crate::monoid::CombineError;

/// Raised when a mean is requested for a key with no observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("empty group: no observations")]
pub struct EmptyGroup;

/// A partial sum and the number of observations it covers.
///
/// Elements with `cnt == 0` carry `sum == 0` by convention; `(0, 0)` is the
/// identity of the element-wise-sum monoid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SumCount {
    pub sum: i64,
    pub cnt: u64,
}

impl SumCount {
    pub const IDENTITY: SumCount = SumCount { sum: 0, cnt: 0 };

    pub fn new(sum: i64, cnt: u64) -> Self {
        Self { sum, cnt }
    }

    /// A partial count over one observation: `(r, 1)`.
    pub fn single(r: i64) -> Self {
        Self { sum: r, cnt: 1 }
    }

    /// Element-wise sum; overflow is an error, never a silent wrap.
    pub fn merge(&self, other: &Self) -> Result<Self, CombineError> {
        let sum = self
            .sum
            .checked_add(other.sum)
            .ok_or(CombineError::Overflow("sumcount"))?;
        let cnt = self
            .cnt
            .checked_add(other.cnt)
            .ok_or(CombineError::Overflow("sumcount"))?;
        Ok(Self { sum, cnt })
    }

    /// One-time termination: the exact rational mean `sum / cnt`.
    pub fn mean(&self) -> Result<Rational64, EmptyGroup> {
        if self.cnt == 0 {
            return Err(EmptyGroup);
        }
        let cnt = i64::try_from(self.cnt).expect("observation count exceeds i64 range");
        Ok(Rational64::new(self.sum, cnt))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_is_a_partial_count_over_one_instance() {
        assert_eq!(SumCount::single(5), SumCount::new(5, 1));
        assert_eq!(SumCount::single(0), SumCount::new(0, 1));
        assert_eq!(SumCount::single(-3), SumCount::new(-3, 1));
    }

    #[test]
    fn mean_is_exact_rational() {
        assert_eq!(SumCount::new(6, 3).mean().unwrap(), Rational64::from(2));
        // Avg(1, 2, 3, 4, 5) = 15/5 = 3.
        assert_eq!(SumCount::new(15, 5).mean().unwrap(), Rational64::from(3));
        assert_eq!(SumCount::new(7, 2).mean().unwrap(), Rational64::new(7, 2));
    }

    #[test]
    fn mean_of_identity_is_an_error() {
        assert_eq!(SumCount::IDENTITY.mean(), Err(EmptyGroup));
    }

    #[test]
    fn merge_adds_elementwise() {
        let a = SumCount::new(3, 2);
        let b = SumCount::new(12, 3);
        assert_eq!(a.merge(&b).unwrap(), SumCount::new(15, 5));
        assert_eq!(a.merge(&SumCount::IDENTITY).unwrap(), a);
    }

    #[test]
    fn merge_overflow_is_an_error() {
        let big = SumCount::new(i64::MAX, 1);
        assert_eq!(
            big.merge(&SumCount::single(1)),
            Err(CombineError::Overflow("sumcount"))
        );
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Folding per-observation pairs then finalizing equals the
            /// rational mean computed directly.
            #[test]
            fn fold_then_finalize_is_the_direct_mean(values in proptest::collection::vec(-10_000i64..10_000, 1..200)) {
                let mut acc = SumCount::IDENTITY;
                for &v in &values {
                    acc = acc.merge(&SumCount::single(v)).unwrap();
                }
                let direct = Rational64::new(values.iter().sum::<i64>(), values.len() as i64);
                prop_assert_eq!(acc.mean().unwrap(), direct);
            }
        }
    }
}
