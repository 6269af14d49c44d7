//! Filter predicates and per-node metadata.

use crate::error::{Error, Result};

/// A query-side filter predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    /// Node label must equal the class.
    Equality(u8),
    /// Node norm-bin must equal the bin index.
    RangeBin(u8),
    /// Query tags must be a subset of the node's tag set. Tags are strictly
    /// sorted and non-empty.
    Subset(Vec<u32>),
}

impl Predicate {
    /// Build a subset predicate, enforcing the sorted/non-empty invariant.
    pub fn subset(mut tags: Vec<u32>) -> Result<Self> {
        if tags.is_empty() {
            return Err(Error::param("subset predicate needs at least one tag"));
        }
        tags.sort_unstable();
        tags.dedup();
        Ok(Predicate::Subset(tags))
    }
}

/// Node-side filter metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeMeta {
    SingleLabel(u8),
    BinLabel(u8),
    /// Strictly sorted tag ids.
    TagSet(Vec<u32>),
}

/// Evaluate a predicate against node metadata. Pure: identical arguments
/// always give identical results. Errors if the kinds are incompatible.
pub fn evaluate(pred: &Predicate, meta: &NodeMeta) -> Result<bool> {
    match (pred, meta) {
        (Predicate::Equality(c), NodeMeta::SingleLabel(l)) => Ok(c == l),
        (Predicate::RangeBin(b), NodeMeta::BinLabel(l)) => Ok(b == l),
        (Predicate::Subset(q), NodeMeta::TagSet(t)) => Ok(is_subset(q, t)),
        _ => Err(Error::KindMismatch),
    }
}

/// True iff every element of sorted `q` occurs in sorted `t` (merge scan).
pub fn is_subset(q: &[u32], t: &[u32]) -> bool {
    let mut ti = 0;
    'outer: for &want in q {
        while ti < t.len() {
            match t[ti].cmp(&want) {
                std::cmp::Ordering::Less => ti += 1,
                std::cmp::Ordering::Equal => {
                    ti += 1;
                    continue 'outer;
                }
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    #[test]
    fn equality_cases() {
        assert!(evaluate(&Predicate::Equality(3), &NodeMeta::SingleLabel(3)).unwrap());
        assert!(!evaluate(&Predicate::Equality(3), &NodeMeta::SingleLabel(4)).unwrap());
        assert!(evaluate(&Predicate::RangeBin(7), &NodeMeta::BinLabel(7)).unwrap());
    }

    #[test]
    fn subset_cases() {
        let meta = NodeMeta::TagSet(vec![2, 7, 9]);
        assert!(evaluate(&Predicate::Subset(vec![7]), &meta).unwrap());
        assert!(!evaluate(&Predicate::Subset(vec![2, 8]), &meta).unwrap());
        assert!(evaluate(&Predicate::Subset(vec![2, 7, 9]), &meta).unwrap());
        assert!(!evaluate(&Predicate::Subset(vec![1]), &meta).unwrap());
    }

    #[test]
    fn kind_mismatch() {
        let r = evaluate(&Predicate::Equality(1), &NodeMeta::TagSet(vec![1]));
        assert!(matches!(r, Err(Error::KindMismatch)));
        let r = evaluate(&Predicate::Subset(vec![1]), &NodeMeta::SingleLabel(1));
        assert!(matches!(r, Err(Error::KindMismatch)));
        let r = evaluate(&Predicate::Equality(1), &NodeMeta::BinLabel(1));
        assert!(matches!(r, Err(Error::KindMismatch)));
    }

    #[test]
    fn subset_constructor_invariants() {
        assert!(Predicate::subset(vec![]).is_err());
        let p = Predicate::subset(vec![9, 2, 2, 7]).unwrap();
        assert_eq!(p, Predicate::Subset(vec![2, 7, 9]));
    }

    #[test]
    fn evaluate_is_pure() {
        let p = Predicate::Subset(vec![3, 5]);
        let m = NodeMeta::TagSet(vec![1, 3, 5, 8]);
        let first = evaluate(&p, &m).unwrap();
        for _ in 0..10 {
            assert_eq!(evaluate(&p, &m).unwrap(), first);
        }
    }

    // Merge-scan subset agrees with a naive set-inclusion oracle on random
    // tag sets (10^4 pairs).
    #[test]
    fn subset_matches_naive_oracle() {
        let mut rng = Rng64::new(77);
        for _ in 0..10_000 {
            let qn = 1 + rng.below(4) as usize;
            let tn = rng.below(8) as usize;
            let mut q: Vec<u32> = (0..qn).map(|_| rng.below(12) as u32).collect();
            let mut t: Vec<u32> = (0..tn).map(|_| rng.below(12) as u32).collect();
            q.sort_unstable();
            q.dedup();
            t.sort_unstable();
            t.dedup();
            let naive = q.iter().all(|x| t.contains(x));
            assert_eq!(is_subset(&q, &t), naive, "q={q:?} t={t:?}");
        }
    }
}
