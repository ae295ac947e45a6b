//! Weighted preference profiles and the ordinal statistics computed from them.
//!
//! A profile is a list of voter blocks, each a strict ranking carrying a
//! nonnegative weight; weights are fractions of the electorate and sum to one.
//! Every statistic here is a "fraction of voters satisfying a condition",
//! written `s_P` in the literature: pairwise margins, group dominance, ordered
//! tuple frequencies and plurality shares.

mod parse;
pub(crate) mod summary;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

pub use parse::{parse_profile, parse_profile_as};
pub use summary::KTournamentSummary;

/// Largest candidate count supported by [`CandidateSet`].
pub const MAX_CANDIDATES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CandidateId(pub usize);

impl CandidateId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for CandidateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of candidates as a bitmask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CandidateSet(u64);

impl CandidateSet {
    pub const fn empty() -> Self {
        CandidateSet(0)
    }

    pub fn full(m: usize) -> Self {
        debug_assert!(m <= MAX_CANDIDATES);
        if m == 64 {
            CandidateSet(u64::MAX)
        } else {
            CandidateSet((1u64 << m) - 1)
        }
    }

    pub const fn from_bits(bits: u64) -> Self {
        CandidateSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(c: CandidateId) -> Self {
        CandidateSet(1 << c.0)
    }

    pub fn contains(self, c: CandidateId) -> bool {
        c.0 < 64 && self.0 >> c.0 & 1 == 1
    }

    pub fn insert(&mut self, c: CandidateId) {
        self.0 |= 1 << c.0;
    }

    pub fn remove(&mut self, c: CandidateId) {
        self.0 &= !(1 << c.0);
    }

    pub fn with(mut self, c: CandidateId) -> Self {
        self.insert(c);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        CandidateSet(self.0 | other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        CandidateSet(self.0 & !other.0)
    }

    /// Complement within the first `m` candidates.
    pub fn complement(self, m: usize) -> Self {
        CandidateSet::full(m).difference(self)
    }

    pub fn iter(self) -> impl Iterator<Item = CandidateId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(CandidateId(i))
        })
    }

    pub fn first(self) -> Option<CandidateId> {
        self.iter().next()
    }
}

impl FromIterator<CandidateId> for CandidateSet {
    fn from_iter<I: IntoIterator<Item = CandidateId>>(iter: I) -> Self {
        let mut s = CandidateSet::empty();
        for c in iter {
            s.insert(c);
        }
        s
    }
}

impl fmt::Debug for CandidateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|c| c.0)).finish()
    }
}

impl Serialize for CandidateSet {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        s.collect_seq(self.iter())
    }
}

/// A strict ranking, best first.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ranking {
    order: Vec<CandidateId>,
    pos: Vec<usize>,
}

impl Ranking {
    pub fn new(order: Vec<CandidateId>) -> Result<Self> {
        let m = order.len();
        let mut pos = vec![usize::MAX; m];
        for (i, c) in order.iter().enumerate() {
            if c.0 >= m {
                return Err(Error::Ranking(format!(
                    "candidate {c} out of range for a ranking of length {m}"
                )));
            }
            if pos[c.0] != usize::MAX {
                return Err(Error::Ranking(format!("candidate {c} appears twice")));
            }
            pos[c.0] = i;
        }
        Ok(Ranking { order, pos })
    }

    pub fn from_indices(order: &[usize]) -> Result<Self> {
        Ranking::new(order.iter().map(|&i| CandidateId(i)).collect())
    }

    pub fn order(&self) -> &[CandidateId] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Position of `c`, 0 for the favourite.
    pub fn position(&self, c: CandidateId) -> usize {
        self.pos[c.0]
    }

    pub fn prefers(&self, a: CandidateId, b: CandidateId) -> bool {
        self.pos[a.0] < self.pos[b.0]
    }

    pub fn top(&self) -> CandidateId {
        self.order[0]
    }

    pub fn reversed(&self) -> Ranking {
        let order: Vec<_> = self.order.iter().rev().copied().collect();
        let m = order.len();
        let pos = self.pos.iter().map(|p| m - 1 - p).collect();
        Ranking { order, pos }
    }

    /// Favourite member of a nonempty set.
    pub fn best_in(&self, set: CandidateSet) -> Option<CandidateId> {
        set.iter().min_by_key(|c| self.pos[c.0])
    }

    /// Least favourite member of a nonempty set.
    pub fn worst_in(&self, set: CandidateSet) -> Option<CandidateId> {
        set.iter().max_by_key(|c| self.pos[c.0])
    }

    /// Candidates weakly below `c` (including `c`).
    pub fn at_or_below(&self, c: CandidateId) -> &[CandidateId] {
        &self.order[self.pos[c.0]..]
    }
}

impl fmt::Debug for Ranking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.order.iter().map(|c| c.0.to_string()).collect();
        write!(f, "{}", parts.join(">"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VoterBlock<S> {
    pub weight: S,
    pub ranking: Ranking,
}

/// A validated profile: strict rankings over `m` candidates with weights
/// summing to one.
#[derive(Clone, Debug)]
pub struct Profile<S> {
    labels: Vec<String>,
    blocks: Vec<VoterBlock<S>>,
    weight_correction: S,
}

// The rescaling factor is provenance, not part of the value.
impl<S: PartialEq> PartialEq for Profile<S> {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.blocks == other.blocks
    }
}

pub fn default_labels(m: usize) -> Vec<String> {
    (0..m).map(|i| i.to_string()).collect()
}

impl<S: Scalar> Profile<S> {
    /// Validates and canonicalises a profile.
    ///
    /// Blocks with equal rankings are merged and zero-weight blocks dropped.
    /// A weight sum within `1e-4` of one is rescaled proportionally; the
    /// applied factor is kept in [`Profile::weight_correction`].
    pub fn new(labels: Vec<String>, blocks: Vec<(S, Ranking)>) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return Err(Error::pre("a profile needs at least one candidate"));
        }
        if m > MAX_CANDIDATES {
            return Err(Error::pre(format!(
                "at most {MAX_CANDIDATES} candidates are supported, got {m}"
            )));
        }
        let mut merged: BTreeMap<Ranking, S> = BTreeMap::new();
        let mut total = S::zero();
        for (w, r) in blocks {
            if r.len() != m {
                return Err(Error::Ranking(format!(
                    "ranking {r:?} has {} entries, expected {m}",
                    r.len()
                )));
            }
            if w.is_negative() {
                return Err(Error::NegativeWeight(w.to_string()));
            }
            total += w.clone();
            if w.is_zero() {
                continue;
            }
            *merged.entry(r).or_insert_with(S::zero) += w;
        }
        let slack = S::ratio(1, 10_000);
        if (total.clone() - S::one()).abs() > slack {
            return Err(Error::WeightSum(total.to_string()));
        }
        let correction = S::one() / total;
        let blocks = merged
            .into_iter()
            .map(|(ranking, w)| VoterBlock {
                weight: if correction.is_one() {
                    w
                } else {
                    w * correction.clone()
                },
                ranking,
            })
            .collect();
        Ok(Profile {
            labels,
            blocks,
            weight_correction: correction,
        })
    }

    /// Profile over candidates `0..m` labelled by index.
    pub fn from_weighted(m: usize, blocks: &[(S, &[usize])]) -> Result<Self> {
        let blocks = blocks
            .iter()
            .map(|(w, order)| Ok((w.clone(), Ranking::from_indices(order)?)))
            .collect::<Result<Vec<_>>>()?;
        Profile::new(default_labels(m), blocks)
    }

    /// Profile whose weights are `count / total`.
    pub fn from_counts(m: usize, blocks: &[(u64, Vec<usize>)]) -> Result<Self> {
        let total: u64 = blocks.iter().map(|b| b.0).sum();
        if total == 0 {
            return Err(Error::WeightSum("0".into()));
        }
        let blocks = blocks
            .iter()
            .map(|(n, order)| {
                let w = S::from_rational(&Rational::new((*n).into(), total.into()));
                Ok((w, Ranking::from_indices(order)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Profile::new(default_labels(m), blocks)
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn candidates(&self) -> impl Iterator<Item = CandidateId> {
        (0..self.m()).map(CandidateId)
    }

    pub fn all(&self) -> CandidateSet {
        CandidateSet::full(self.m())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, c: CandidateId) -> &str {
        &self.labels[c.0]
    }

    /// Looks a candidate up by label, falling back to a numeric index.
    pub fn candidate(&self, name: &str) -> Result<CandidateId> {
        if let Some(i) = self.labels.iter().position(|l| l == name) {
            return Ok(CandidateId(i));
        }
        match name.parse::<usize>() {
            Ok(i) if i < self.m() => Ok(CandidateId(i)),
            _ => Err(Error::UnknownCandidate(name.to_string())),
        }
    }

    pub fn blocks(&self) -> &[VoterBlock<S>] {
        &self.blocks
    }

    /// Factor applied to the input weights to make them sum to one.
    pub fn weight_correction(&self) -> &S {
        &self.weight_correction
    }

    fn check(&self, c: CandidateId) -> Result<()> {
        if c.0 < self.m() {
            Ok(())
        } else {
            Err(Error::UnknownCandidate(c.to_string()))
        }
    }

    fn check_set(&self, set: CandidateSet) -> Result<()> {
        if set.difference(self.all()).is_empty() {
            Ok(())
        } else {
            Err(Error::UnknownCandidate(format!("{set:?}")))
        }
    }

    /// Total weight of the blocks whose ranking satisfies `pred`.
    pub fn frac_where(&self, mut pred: impl FnMut(&Ranking) -> bool) -> S {
        let mut total = S::zero();
        for b in &self.blocks {
            if pred(&b.ranking) {
                total += b.weight.clone();
            }
        }
        total
    }

    /// `s_{a≻b}`: weight of voters ranking `a` above `b`.
    pub fn frac_pairwise(&self, a: CandidateId, b: CandidateId) -> Result<S> {
        self.check(a)?;
        self.check(b)?;
        if a == b {
            return Err(Error::pre("pairwise fraction requires a ≠ b"));
        }
        Ok(self.frac_where(|r| r.prefers(a, b)))
    }

    /// `s_{I≻J}`: weight of voters ranking every member of `I` above every member of `J`.
    pub fn frac_group(&self, i: CandidateSet, j: CandidateSet) -> Result<S> {
        self.check_set(i)?;
        self.check_set(j)?;
        if i.is_empty() || j.is_empty() {
            return Err(Error::pre("group fraction requires nonempty sets"));
        }
        if !i.is_disjoint(j) {
            return Err(Error::pre("group fraction requires disjoint sets"));
        }
        Ok(self.frac_group_unchecked(i, j))
    }

    pub(crate) fn frac_group_unchecked(&self, i: CandidateSet, j: CandidateSet) -> S {
        self.frac_where(|r| {
            let worst_i = i.iter().map(|c| r.position(c)).max().unwrap_or(0);
            let best_j = j.iter().map(|c| r.position(c)).min().unwrap_or(usize::MAX);
            worst_i < best_j
        })
    }

    /// `s_{c1≻c2≻…≻ck}`: weight of voters whose ranking restricted to the
    /// tuple follows the tuple order.
    pub fn frac_tuple(&self, tuple: &[CandidateId]) -> Result<S> {
        let mut seen = CandidateSet::empty();
        for &c in tuple {
            self.check(c)?;
            if seen.contains(c) {
                return Err(Error::pre(format!("tuple repeats candidate {c}")));
            }
            seen.insert(c);
        }
        Ok(self.frac_where(|r| tuple.windows(2).all(|w| r.prefers(w[0], w[1]))))
    }

    /// Weight of voters ranking `c` first.
    pub fn plurality_share(&self, c: CandidateId) -> S {
        self.frac_where(|r| r.top() == c)
    }

    pub fn summarize(&self, k: usize) -> Result<KTournamentSummary<S>> {
        KTournamentSummary::from_profile(self, k)
    }

    /// Every ranking reversed.
    pub fn reverse(&self) -> Profile<S> {
        let mut blocks: Vec<_> = self
            .blocks
            .iter()
            .map(|b| VoterBlock {
                weight: b.weight.clone(),
                ranking: b.ranking.reversed(),
            })
            .collect();
        blocks.sort_by(|a, b| a.ranking.cmp(&b.ranking));
        Profile {
            labels: self.labels.clone(),
            blocks,
            weight_correction: self.weight_correction.clone(),
        }
    }

    pub fn tournament_matrix(&self) -> TournamentMatrix<S> {
        let m = self.m();
        let mut s = vec![vec![S::zero(); m]; m];
        for b in &self.blocks {
            let order = b.ranking.order();
            for (x, &hi) in order.iter().enumerate() {
                for &lo in &order[x + 1..] {
                    s[hi.0][lo.0] += b.weight.clone();
                }
            }
        }
        TournamentMatrix { s }
    }

    /// The profile restricted to `subset` (in the given order), candidates
    /// relabelled `0..subset.len()`.
    pub fn restrict(&self, subset: &[CandidateId]) -> Result<Profile<S>> {
        let mut set = CandidateSet::empty();
        for &c in subset {
            self.check(c)?;
            set.insert(c);
        }
        if set.len() != subset.len() || subset.is_empty() {
            return Err(Error::pre("restriction needs distinct, nonempty candidates"));
        }
        let mut new_index = vec![usize::MAX; self.m()];
        for (i, c) in subset.iter().enumerate() {
            new_index[c.0] = i;
        }
        let labels = subset.iter().map(|&c| self.labels[c.0].clone()).collect();
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                let order = b
                    .ranking
                    .order()
                    .iter()
                    .filter(|c| set.contains(**c))
                    .map(|c| CandidateId(new_index[c.0]))
                    .collect();
                Ok((b.weight.clone(), Ranking::new(order)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut p = Profile::new(labels, blocks)?;
        p.weight_correction = self.weight_correction.clone();
        Ok(p)
    }

    /// Same profile over another scalar type.
    pub fn map_weights<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Profile<T> {
        Profile {
            labels: self.labels.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|b| VoterBlock {
                    weight: f(&b.weight),
                    ranking: b.ranking.clone(),
                })
                .collect(),
            weight_correction: f(&self.weight_correction),
        }
    }

    pub fn to_f64(&self) -> Profile<f64> {
        self.map_weights(|w| w.to_f64_lossy())
    }
}

/// Pairwise margins `s[a][b] = s_{a≻b}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TournamentMatrix<S> {
    s: Vec<Vec<S>>,
}

impl<S: Scalar> TournamentMatrix<S> {
    /// Checks the zero diagonal and `s[a][b] + s[b][a] = 1` (to tolerance).
    pub fn new(s: Vec<Vec<S>>) -> Result<Self> {
        let m = s.len();
        for (a, row) in s.iter().enumerate() {
            if row.len() != m {
                return Err(Error::pre("tournament matrix must be square"));
            }
            if !row[a].is_zero() {
                return Err(Error::pre(format!("diagonal entry {a} is not zero")));
            }
            for b in 0..m {
                if b != a {
                    if s[a][b].is_neg() || (s[a][b].clone() - S::one()).is_pos() {
                        return Err(Error::pre(format!("entry ({a},{b}) outside [0,1]")));
                    }
                    if !(s[a][b].clone() + s[b][a].clone()).approx_eq(&S::one()) {
                        return Err(Error::pre(format!(
                            "entries ({a},{b}) and ({b},{a}) do not sum to 1"
                        )));
                    }
                }
            }
        }
        Ok(TournamentMatrix { s })
    }

    pub fn m(&self) -> usize {
        self.s.len()
    }

    pub fn get(&self, a: CandidateId, b: CandidateId) -> &S {
        &self.s[a.0][b.0]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.s
    }

    /// Triples `(i, j, k)` with `s_{i≻j} + s_{j≻k} + s_{k≻i} > 2`; a matrix
    /// coming from rankings has none.
    pub fn triple_violations(&self) -> Vec<(CandidateId, CandidateId, CandidateId, S)> {
        let m = self.m();
        let two = S::one() + S::one();
        let mut out = Vec::new();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if i == j || j == k || i == k {
                        continue;
                    }
                    let sum = self.s[i][j].clone() + self.s[j][k].clone() + self.s[k][i].clone();
                    if !sum.approx_le(&two) {
                        out.push((CandidateId(i), CandidateId(j), CandidateId(k), sum));
                    }
                }
            }
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TournamentMatrix<T> {
        TournamentMatrix {
            s: self.s.iter().map(|r| r.iter().map(&f).collect()).collect(),
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn c(i: usize) -> CandidateId {
        CandidateId(i)
    }

    fn set(ids: &[usize]) -> CandidateSet {
        ids.iter().map(|&i| CandidateId(i)).collect()
    }

    #[test]
    fn cyclic_pairwise_is_two_thirds() {
        assert_eq!(three_cycle().frac_pairwise(c(0), c(1)).unwrap(), q(2, 3));
        assert!(three_cycle().frac_pairwise(c(1), c(1)).is_err());
    }

    #[test]
    fn group_fraction() {
        let p = three_cycle();
        assert_eq!(p.frac_group(set(&[0]), set(&[1, 2])).unwrap(), q(1, 3));
        assert!(p.frac_group(set(&[0]), set(&[0])).is_err());
        assert!(p.frac_group(set(&[]), set(&[0])).is_err());
    }

    #[test]
    fn tuple_fraction() {
        let p = three_cycle();
        assert_eq!(p.frac_tuple(&[c(0), c(1), c(2)]).unwrap(), q(1, 3));
        assert_eq!(p.frac_tuple(&[c(2)]).unwrap(), q(1, 1));
        assert!(p.frac_tuple(&[c(0), c(0)]).is_err());
    }

    #[test]
    fn plurality_of_single_block() {
        let p = unanimous(&[2, 0, 1]);
        assert_eq!(p.plurality_share(c(2)), q(1, 1));
        assert_eq!(p.plurality_share(c(0)), q(0, 1));
    }

    #[test]
    fn reverse_flips_and_is_an_involution() {
        let p = unanimous(&[0, 1, 2]);
        let r = p.reverse();
        assert_eq!(r.blocks()[0].ranking.order(), &[c(2), c(1), c(0)]);
        let cyc = three_cycle();
        assert_eq!(cyc.reverse().reverse(), cyc);
        assert_eq!(
            cyc.reverse().frac_pairwise(c(0), c(1)).unwrap(),
            cyc.frac_pairwise(c(1), c(0)).unwrap()
        );
    }

    #[test]
    fn equal_rankings_merge_and_weights_validate() {
        let p = Profile::from_weighted(
            2,
            &[(q(1, 4), &[0, 1][..]), (q(1, 4), &[0, 1]), (q(1, 2), &[1, 0])],
        )
        .unwrap();
        assert_eq!(p.blocks().len(), 2);
        assert!(matches!(
            Profile::from_weighted(2, &[(q(9, 10), &[0, 1][..])]),
            Err(Error::WeightSum(_))
        ));
        assert!(matches!(
            Profile::from_weighted(2, &[(q(-1, 10), &[0, 1][..]), (q(11, 10), &[1, 0])]),
            Err(Error::NegativeWeight(_))
        ));
        assert!(Profile::from_weighted(3, &[(q(1, 1), &[0, 1][..])]).is_err());
    }

    #[test]
    fn restriction_relabels() {
        let p = three_cycle();
        let r = p.restrict(&[c(2), c(0)]).unwrap();
        assert_eq!(r.labels(), &["c".to_string(), "a".to_string()]);
        // c>a in two of three blocks
        assert_eq!(r.frac_pairwise(c(0), c(1)).unwrap(), q(2, 3));
        assert_eq!(r.frac_pairwise(c(1), c(0)).unwrap(), q(1, 3));
    }

    #[test]
    fn tournament_matrix_agrees_with_pairwise() {
        let p = three_cycle();
        let t = p.tournament_matrix();
        for a in p.candidates() {
            for b in p.candidates() {
                if a != b {
                    assert_eq!(t.get(a, b), &p.frac_pairwise(a, b).unwrap());
                }
            }
        }
        assert!(t.triple_violations().is_empty());
        assert!(TournamentMatrix::new(t.rows().to_vec()).is_ok());
    }

    #[test]
    fn candidate_set_ops() {
        let s = set(&[0, 3, 5]);
        assert_eq!(s.len(), 3);
        assert_eq!(s.iter().map(|c| c.0).collect::<Vec<_>>(), vec![0, 3, 5]);
        assert_eq!(s.complement(6), set(&[1, 2, 4]));
        assert!(s.contains(c(3)) && !s.contains(c(4)));
    }
}
