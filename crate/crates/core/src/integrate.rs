//! Integration operators applied when an inbox fills up.
//!
//! All operators are pure functions of their inputs; the mixed operator takes
//! its generator explicitly.

use alloc::vec::Vec;

use rand::Rng;

use crate::model::{KnowledgeValue, Strategy};
use crate::{coin, Error, Result};

/// The multiset an agent integrates over, plus the agent's current value.
///
/// When the integrating agent votes for itself, its value is one of the
/// entries of `values`. `own` only steers tie breaking; the forecast
/// supervisor has no value of its own and passes `None`.
#[derive(Clone, Copy, Debug)]
pub struct VoteSet<'a> {
    /// Gathered votes, in any order.
    pub values: &'a [KnowledgeValue],
    /// The integrating agent's current value, if it has one.
    pub own: Option<KnowledgeValue>,
}

impl<'a> VoteSet<'a> {
    /// Vote set of an agent holding `own`.
    pub fn new(values: &'a [KnowledgeValue], own: KnowledgeValue) -> Self {
        VoteSet { values, own: Some(own) }
    }

    /// Vote set without an integrating agent's own value.
    pub fn anonymous(values: &'a [KnowledgeValue]) -> Self {
        VoteSet { values, own: None }
    }

    fn sorted(&self) -> Result<Vec<KnowledgeValue>> {
        if self.values.is_empty() {
            return Err(Error::EmptyVotes);
        }
        let mut sorted = self.values.to_vec();
        sorted.sort_unstable();
        Ok(sorted)
    }
}

/// Most frequent value of the vote set.
///
/// Ties keep the agent's own value when it is among the tied modes and fall
/// back to the smallest tied mode otherwise.
pub fn dominant_value(votes: &VoteSet<'_>) -> Result<KnowledgeValue> {
    let sorted = votes.sorted()?;
    let mut best = sorted[0];
    let mut best_count = 0;
    let mut own_count = 0;
    for run in sorted.chunk_by(|a, b| a == b) {
        if run.len() > best_count {
            best = run[0];
            best_count = run.len();
        }
        if Some(run[0]) == votes.own {
            own_count = run.len();
        }
    }
    match votes.own {
        Some(own) if own_count == best_count => Ok(own),
        _ => Ok(best),
    }
}

/// Lower median of the vote set: the smallest `c` in `0..=k` minimizing the
/// sum of absolute distances to the votes.
pub fn consensus_value(votes: &VoteSet<'_>, k: u32) -> Result<KnowledgeValue> {
    let sorted = votes.sorted()?;
    if let Some(&max) = sorted.last() {
        if max.get() > k {
            return Err(Error::OutOfDomain { value: max.get(), k });
        }
    }
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Consensus with probability `mixed_consensus_prob`, dominant value
/// otherwise. Draws exactly one value from `rng`.
pub fn mixed_integrate<R: Rng + ?Sized>(
    votes: &VoteSet<'_>,
    k: u32,
    mixed_consensus_prob: f64,
    rng: &mut R,
) -> Result<KnowledgeValue> {
    if coin(rng, mixed_consensus_prob) {
        consensus_value(votes, k)
    } else {
        dominant_value(votes)
    }
}

/// Dispatches to the operator selected by `strategy`. Only the mixed
/// strategy touches `rng`.
pub fn integrate<R: Rng + ?Sized>(
    strategy: Strategy,
    votes: &VoteSet<'_>,
    k: u32,
    mixed_consensus_prob: f64,
    rng: &mut R,
) -> Result<KnowledgeValue> {
    match strategy {
        Strategy::Dominant => dominant_value(votes),
        Strategy::Consensus => consensus_value(votes, k),
        Strategy::Mixed => mixed_integrate(votes, k, mixed_consensus_prob, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn kv(values: &[u32]) -> Vec<KnowledgeValue> {
        values.iter().map(|&v| KnowledgeValue(v)).collect()
    }

    // Oracles: plain counting and exhaustive argmin.
    fn mode_oracle(values: &[u32], own: Option<u32>) -> u32 {
        let max_value = *values.iter().max().unwrap();
        let count = |x: u32| values.iter().filter(|&&v| v == x).count();
        let top = (0..=max_value).map(count).max().unwrap();
        if let Some(own) = own {
            if count(own) == top {
                return own;
            }
        }
        (0..=max_value).find(|&x| count(x) == top).unwrap()
    }

    fn median_oracle(values: &[u32], k: u32) -> u32 {
        let cost = |c: u32| values.iter().map(|&x| (x as i64 - c as i64).abs()).sum::<i64>();
        let best = (0..=k).map(cost).min().unwrap();
        (0..=k).find(|&c| cost(c) == best).unwrap()
    }

    #[test]
    fn dominant_examples() {
        let v = kv(&[1, 1, 0]);
        assert_eq!(dominant_value(&VoteSet::new(&v, KnowledgeValue(0))).unwrap(), KnowledgeValue(1));
        let v = kv(&[0, 1]);
        assert_eq!(dominant_value(&VoteSet::new(&v, KnowledgeValue(1))).unwrap(), KnowledgeValue(1));
        let v = kv(&[2, 2, 3, 3, 5]);
        assert_eq!(mode_oracle(&[2, 2, 3, 3, 5], Some(5)), 2);
        assert_eq!(dominant_value(&VoteSet::new(&v, KnowledgeValue(5))).unwrap(), KnowledgeValue(2));
    }

    #[test]
    fn dominant_without_own_takes_smallest_tied_mode() {
        let v = kv(&[7, 3, 9]);
        assert_eq!(dominant_value(&VoteSet::anonymous(&v)).unwrap(), KnowledgeValue(3));
        let v = kv(&[3, 3, 5]);
        assert_eq!(dominant_value(&VoteSet::anonymous(&v)).unwrap(), KnowledgeValue(3));
    }

    #[test]
    fn consensus_examples() {
        let v = kv(&[0, 1, 1]);
        assert_eq!(consensus_value(&VoteSet::anonymous(&v), 1).unwrap(), KnowledgeValue(1));
        let v = kv(&[0, 1]);
        assert_eq!(consensus_value(&VoteSet::anonymous(&v), 1).unwrap(), KnowledgeValue(0));
        assert_eq!(median_oracle(&[1, 3, 7, 9], 10), 3);
        let v = kv(&[1, 3, 7, 9]);
        assert_eq!(consensus_value(&VoteSet::anonymous(&v), 10).unwrap(), KnowledgeValue(3));
    }

    #[test]
    fn empty_and_out_of_domain_are_rejected() {
        let empty: Vec<KnowledgeValue> = Vec::new();
        assert_eq!(dominant_value(&VoteSet::anonymous(&empty)), Err(Error::EmptyVotes));
        assert_eq!(consensus_value(&VoteSet::anonymous(&empty), 3), Err(Error::EmptyVotes));
        let v = kv(&[1, 4]);
        assert_eq!(consensus_value(&VoteSet::anonymous(&v), 3), Err(Error::OutOfDomain { value: 4, k: 3 }));
    }

    #[test]
    fn mixed_examples() {
        let v = kv(&[1, 3, 7, 9]);
        let votes = VoteSet::new(&v, KnowledgeValue(9));
        let mut r = SimRng::seed_from_u64(0);
        for _ in 0..50 {
            assert_eq!(mixed_integrate(&votes, 10, 1.0, &mut r).unwrap(), KnowledgeValue(3));
            assert_eq!(mixed_integrate(&votes, 10, 0.0, &mut r).unwrap(), dominant_value(&votes).unwrap());
        }
        let v = kv(&[0, 0, 1, 1, 1]);
        let votes = VoteSet::new(&v, KnowledgeValue(0));
        assert_eq!(dominant_value(&votes).unwrap(), KnowledgeValue(1));
        assert_eq!(consensus_value(&votes, 1).unwrap(), KnowledgeValue(1));
        for _ in 0..50 {
            assert_eq!(mixed_integrate(&votes, 1, 0.5, &mut r).unwrap(), KnowledgeValue(1));
        }
    }

    #[test]
    fn mixed_consumes_one_draw() {
        use rand::RngCore;
        let v = kv(&[1, 2, 2]);
        let votes = VoteSet::new(&v, KnowledgeValue(1));
        for p in [0.0, 0.5, 1.0] {
            let mut a = SimRng::seed_from_u64(3);
            let mut b = SimRng::seed_from_u64(3);
            mixed_integrate(&votes, 2, p, &mut a).unwrap();
            let _ = rand::Rng::gen::<f64>(&mut b);
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn exhaustive_median_small_multisets() {
        fn visit(prefix: &mut Vec<u32>, start: u32, remaining: usize, checked: &mut usize) {
            if !prefix.is_empty() {
                let v = kv(prefix);
                let got = consensus_value(&VoteSet::anonymous(&v), 4).unwrap().get();
                assert_eq!(got, median_oracle(prefix, 4), "multiset {prefix:?}");
                *checked += 1;
            }
            if remaining == 0 {
                return;
            }
            for x in start..=4 {
                prefix.push(x);
                visit(prefix, x, remaining - 1, checked);
                prefix.pop();
            }
        }
        let mut checked = 0;
        visit(&mut Vec::new(), 0, 5, &mut checked);
        // C(5+4,4) + ... multisets of size 1..=5 over 5 symbols.
        assert_eq!(checked, 5 + 15 + 35 + 70 + 126);
    }

    proptest! {
        #[test]
        fn dominant_matches_counting_oracle(
            values in prop::collection::vec(0u32..10, 1..=25),
            own_pick in prop::option::of(0u32..10),
        ) {
            let v = kv(&values);
            let votes = VoteSet { values: &v, own: own_pick.map(KnowledgeValue) };
            let got = dominant_value(&votes).unwrap().get();
            prop_assert_eq!(got, mode_oracle(&values, own_pick));
            prop_assert!(values.contains(&got));
        }

        #[test]
        fn operators_are_permutation_invariant(
            values in prop::collection::vec(0u32..10, 1..=25),
            own in 0u32..10,
            seed in any::<u64>(),
        ) {
            let v = kv(&values);
            let mut shuffled = v.clone();
            rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut SimRng::seed_from_u64(seed));
            let a = VoteSet::new(&v, KnowledgeValue(own));
            let b = VoteSet::new(&shuffled, KnowledgeValue(own));
            prop_assert_eq!(dominant_value(&a), dominant_value(&b));
            prop_assert_eq!(consensus_value(&a, 9), consensus_value(&b, 9));
        }

        #[test]
        fn consensus_is_optimal_and_closed(
            values in prop::collection::vec(0u32..=20, 1..=15),
        ) {
            let v = kv(&values);
            let got = consensus_value(&VoteSet::anonymous(&v), 20).unwrap().get();
            prop_assert!(got <= 20);
            prop_assert_eq!(got, median_oracle(&values, 20));
        }

        #[test]
        fn mixture_degenerates(
            values in prop::collection::vec(0u32..6, 1..=12),
            own in 0u32..6,
            seed in any::<u64>(),
        ) {
            let v = kv(&values);
            let votes = VoteSet::new(&v, KnowledgeValue(own));
            let mut r = SimRng::seed_from_u64(seed);
            prop_assert_eq!(mixed_integrate(&votes, 5, 0.0, &mut r), dominant_value(&votes));
            prop_assert_eq!(mixed_integrate(&votes, 5, 1.0, &mut r), consensus_value(&votes, 5));
        }
    }
}
