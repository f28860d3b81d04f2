//! Associative array from term to count; the row type of a co-occurrence
//! matrix and an element of the element-wise-sum monoid.

use std::collections::BTreeMap;

use crate::monoid::CombineError;

/// A map from term to a positive count, kept in canonical form: entries with
/// count zero are never stored, so structural equality is semantic equality.
/// The empty stripe is the monoid identity.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stripe {
    entries: BTreeMap<String, u64>,
}

impl Stripe {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut stripe = Self::new();
        for (term, count) in pairs {
            stripe.increment(&term.into(), count);
        }
        stripe
    }

    pub fn increment(&mut self, term: &str, by: u64) {
        if by == 0 {
            return;
        }
        *self.entries.entry(term.to_string()).or_insert(0) += by;
    }

    pub fn count(&self, term: &str) -> u64 {
        self.entries.get(term).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in term byte order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(t, &c)| (t.as_str(), c))
    }

    /// Element-wise sum of counts; keys absent from one side count as zero.
    pub fn merge(&self, other: &Stripe) -> Result<Stripe, CombineError> {
        let mut entries = self.entries.clone();
        for (term, &count) in &other.entries {
            match entries.get_mut(term) {
                Some(existing) => {
                    *existing = existing
                        .checked_add(count)
                        .ok_or(CombineError::Overflow("stripe"))?;
                }
                None => {
                    entries.insert(term.clone(), count);
                }
            }
        }
        Ok(Stripe { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_identity() {
        let b = Stripe::from_pairs([("b", 1)]);
        assert_eq!(Stripe::new().merge(&b).unwrap(), b);
        assert_eq!(b.merge(&Stripe::new()).unwrap(), b);
    }

    #[test]
    fn merge_adds_per_key() {
        let left = Stripe::from_pairs([("a", 2), ("b", 1)]);
        let right = Stripe::from_pairs([("b", 3), ("c", 1)]);
        let merged = left.merge(&right).unwrap();
        assert_eq!(merged, Stripe::from_pairs([("a", 2), ("b", 4), ("c", 1)]));
    }

    #[test]
    fn merge_same_key_doubles() {
        let one = Stripe::from_pairs([("a", 1)]);
        assert_eq!(one.merge(&one).unwrap(), Stripe::from_pairs([("a", 2)]));
    }

    #[test]
    fn zero_increments_are_not_stored() {
        let mut stripe = Stripe::new();
        stripe.increment("a", 0);
        assert!(stripe.is_empty());
        assert_eq!(stripe, Stripe::new());
    }

    #[test]
    fn merge_agrees_with_per_key_oracle() {
        // Brute-force oracle: collect both sides into a plain map and add.
        let left = Stripe::from_pairs([("x", 5), ("y", 7), ("z", 1)]);
        let right = Stripe::from_pairs([("y", 3), ("w", 2)]);
        let merged = left.merge(&right).unwrap();
        let mut oracle: BTreeMap<&str, u64> = BTreeMap::new();
        for (t, c) in left.iter().chain(right.iter()) {
            *oracle.entry(t).or_insert(0) += c;
        }
        for (t, c) in &oracle {
            assert_eq!(merged.count(t), *c);
        }
        assert_eq!(merged.len(), oracle.len());
    }

    #[test]
    fn merge_overflow_is_an_error() {
        let a = Stripe::from_pairs([("t", u64::MAX)]);
        let b = Stripe::from_pairs([("t", 1)]);
        assert_eq!(a.merge(&b), Err(CombineError::Overflow("stripe")));
    }
}
