//! k-tournament information: ordered tuple frequencies and the favourite /
//! least-favourite shares they determine.

use std::collections::BTreeMap;

use super::{CandidateId, CandidateSet, Profile};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Everything a k-tournament rule may look at.
///
/// `top_share(S, c)` and `bottom_share(S, c)` are derived from the tuple
/// frequencies alone (never from the profile), for every set of size at most
/// `k`.
#[derive(Clone, Debug)]
pub struct KTournamentSummary<S> {
    m: usize,
    k: usize,
    tuples: BTreeMap<CandidateSet, Vec<(Vec<CandidateId>, S)>>,
    top: BTreeMap<(CandidateSet, CandidateId), S>,
    bottom: BTreeMap<(CandidateSet, CandidateId), S>,
}

pub(crate) fn subsets_of_size(m: usize, k: usize) -> impl Iterator<Item = CandidateSet> {
    // Gosper's hack over the first m bits.
    let limit: u128 = 1u128 << m;
    let mut cur: u128 = if k == 0 { 0 } else { (1u128 << k) - 1 };
    let mut done = k > m;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let out = CandidateSet::from_bits(cur as u64);
        if cur == 0 {
            done = true;
            return Some(out);
        }
        let c = cur & cur.wrapping_neg();
        let r = cur + c;
        cur = (((r ^ cur) >> 2) / c) | r;
        if cur >= limit {
            done = true;
        }
        Some(out)
    })
}

impl<S: Scalar> KTournamentSummary<S> {
    pub fn from_profile(p: &Profile<S>, k: usize) -> Result<Self> {
        let m = p.m();
        if k < 2 || k > m {
            return Err(Error::pre(format!(
                "summary order must satisfy 2 ≤ k ≤ m = {m}, got {k}"
            )));
        }
        let mut acc: BTreeMap<Vec<CandidateId>, S> = BTreeMap::new();
        for b in p.blocks() {
            for set in subsets_of_size(m, k) {
                let tuple: Vec<CandidateId> = b
                    .ranking
                    .order()
                    .iter()
                    .copied()
                    .filter(|&c| set.contains(c))
                    .collect();
                *acc.entry(tuple).or_insert_with(S::zero) += b.weight.clone();
            }
        }
        Self::from_tuples(m, k, acc)
    }

    /// Builds a summary from raw tuple frequencies; checks that the orderings
    /// of every k-set carry total weight one.
    pub fn from_tuples(m: usize, k: usize, freq: BTreeMap<Vec<CandidateId>, S>) -> Result<Self> {
        if k < 2 || k > m {
            return Err(Error::pre(format!(
                "summary order must satisfy 2 ≤ k ≤ m = {m}, got {k}"
            )));
        }
        let mut tuples: BTreeMap<CandidateSet, Vec<(Vec<CandidateId>, S)>> = BTreeMap::new();
        for (t, w) in freq {
            let set: CandidateSet = t.iter().copied().collect();
            if t.len() != k || set.len() != k || t.iter().any(|c| c.0 >= m) {
                return Err(Error::pre(format!("tuple {t:?} is not a {k}-tuple of distinct candidates")));
            }
            tuples.entry(set).or_default().push((t, w));
        }
        for set in subsets_of_size(m, k) {
            let total = tuples
                .get(&set)
                .map(|v| v.iter().fold(S::zero(), |a, (_, w)| a + w.clone()))
                .unwrap_or_else(S::zero);
            if !total.approx_eq(&S::one()) {
                return Err(Error::pre(format!(
                    "orderings of {set:?} sum to {total}, expected 1"
                )));
            }
        }
        let mut summary = KTournamentSummary {
            m,
            k,
            tuples,
            top: BTreeMap::new(),
            bottom: BTreeMap::new(),
        };
        summary.derive_shares();
        Ok(summary)
    }

    /// Smallest-index k-superset of `set`.
    fn host(&self, set: CandidateSet) -> CandidateSet {
        let mut t = set;
        for c in (0..self.m).map(CandidateId) {
            if t.len() >= self.k {
                break;
            }
            t.insert(c);
        }
        t
    }

    fn derive_shares(&mut self) {
        for size in 1..=self.k {
            for set in subsets_of_size(self.m, size) {
                let host = self.host(set);
                let mut top: BTreeMap<CandidateId, S> = set.iter().map(|c| (c, S::zero())).collect();
                let mut bottom = top.clone();
                for (t, w) in self.tuples.get(&host).into_iter().flatten() {
                    let mut inside = t.iter().filter(|c| set.contains(**c));
                    let first = inside.next().copied();
                    let last = t.iter().rev().find(|c| set.contains(**c)).copied();
                    if let (Some(f), Some(l)) = (first, last) {
                        *top.get_mut(&f).expect("member") += w.clone();
                        *bottom.get_mut(&l).expect("member") += w.clone();
                    }
                }
                for (c, w) in top {
                    self.top.insert((set, c), w);
                }
                for (c, w) in bottom {
                    self.bottom.insert((set, c), w);
                }
            }
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Frequency of an ordered k-tuple (zero if never observed).
    pub fn tuple_freq(&self, tuple: &[CandidateId]) -> Option<S> {
        if tuple.len() != self.k {
            return None;
        }
        let set: CandidateSet = tuple.iter().copied().collect();
        let entries = self.tuples.get(&set)?;
        Some(
            entries
                .iter()
                .find(|(t, _)| t.as_slice() == tuple)
                .map(|(_, w)| w.clone())
                .unwrap_or_else(S::zero),
        )
    }

    pub fn tuples(&self) -> impl Iterator<Item = (&[CandidateId], &S)> {
        self.tuples
            .values()
            .flatten()
            .map(|(t, w)| (t.as_slice(), w))
    }

    /// Share of voters whose favourite in `set` is `c`; `None` if `|set| > k`
    /// or `c ∉ set`.
    pub fn top_share(&self, set: CandidateSet, c: CandidateId) -> Option<&S> {
        self.top.get(&(set, c))
    }

    pub fn bottom_share(&self, set: CandidateSet, c: CandidateId) -> Option<&S> {
        self.bottom.get(&(set, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::fixtures::*;

    #[test]
    fn subset_enumeration_counts() {
        assert_eq!(subsets_of_size(5, 2).count(), 10);
        assert_eq!(subsets_of_size(5, 5).count(), 1);
        assert_eq!(subsets_of_size(4, 0).count(), 1);
        assert_eq!(subsets_of_size(3, 4).count(), 0);
        assert!(subsets_of_size(6, 3).all(|s| s.len() == 3));
    }

    #[test]
    fn pairwise_top_share_is_the_margin() {
        let p = three_cycle();
        let s = p.summarize(2).unwrap();
        let ab = CandidateSet::from_bits(0b011);
        assert_eq!(s.top_share(ab, CandidateId(0)).unwrap(), &q(2, 3));
        assert_eq!(s.bottom_share(ab, CandidateId(0)).unwrap(), &q(1, 3));
        assert_eq!(
            s.top_share(CandidateSet::from_bits(0b100), CandidateId(2)).unwrap(),
            &q(1, 1)
        );
        assert!(s.top_share(CandidateSet::from_bits(0b111), CandidateId(0)).is_none());
    }

    #[test]
    fn order_out_of_range() {
        assert!(three_cycle().summarize(1).is_err());
        assert!(three_cycle().summarize(4).is_err());
    }

    #[test]
    fn tuple_sets_must_sum_to_one() {
        let mut freq = BTreeMap::new();
        freq.insert(vec![CandidateId(0), CandidateId(1)], q(1, 2));
        assert!(KTournamentSummary::from_tuples(2, 2, freq.clone()).is_err());
        freq.insert(vec![CandidateId(1), CandidateId(0)], q(1, 2));
        assert!(KTournamentSummary::from_tuples(2, 2, freq).is_ok());
    }
}
