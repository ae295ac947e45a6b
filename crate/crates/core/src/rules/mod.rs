//! Voting rules over the weighted tournament (and, for the lottery rules,
//! over k-tournament information).
//!
//! Wherever a rule may pick "any" qualifying candidate it picks the
//! lowest-indexed one.

mod kernel;
mod veto;

pub use kernel::{is_quasi_kernel, quasi_kernel, quasi_kernel_prune, PruningGraph};
pub use veto::{pruned_double_lotteries, simultaneous_lottery_veto, DoubleLottery, VetoEvent, VetoTrace};

use crate::error::{Error, Result};
use crate::profile::{CandidateId, CandidateSet, Profile, TournamentMatrix};
use crate::scalar::Scalar;

/// `s_{a≻b}`, with `s_{a≻a} = 0`.
fn s<S: Scalar>(t: &TournamentMatrix<S>, a: usize, b: usize) -> &S {
    t.get(CandidateId(a), CandidateId(b))
}

fn check_beta<S: Scalar>(beta: &S) -> Result<()> {
    if *beta < S::half() || *beta > S::one() {
        return Err(Error::pre(format!("requires 1/2 ≤ β ≤ 1, got β = {beta}")));
    }
    Ok(())
}

pub(crate) fn check_theta<S: Scalar>(theta: &S) -> Result<()> {
    if *theta <= S::half() || *theta > S::one() {
        return Err(Error::pre(format!("requires 1/2 < θ ≤ 1, got θ = {theta}")));
    }
    Ok(())
}

/// `argmin_j |{k : s_{k≻j} > β}|`.
pub fn copeland_weighted_on<S: Scalar>(t: &TournamentMatrix<S>, beta: &S) -> Result<CandidateId> {
    check_beta(beta)?;
    let m = t.m();
    let count = |j: usize| (0..m).filter(|&k| s(t, k, j) > beta).count();
    let best = (0..m).min_by_key(|&j| (count(j), j)).ok_or_else(|| Error::pre("no candidates"))?;
    Ok(CandidateId(best))
}

pub fn copeland_weighted<S: Scalar>(p: &Profile<S>, beta: &S) -> Result<CandidateId> {
    copeland_weighted_on(&p.tournament_matrix(), beta)
}

/// `j` is β-uncovered if every `i ≠ j` has some `k` (with `k = i` or
/// `s_{k≻i} ≥ β`) such that `s_{k≻j} ≤ β`.
pub fn uncovered_set_on<S: Scalar>(t: &TournamentMatrix<S>, beta: &S) -> Result<CandidateSet> {
    check_beta(beta)?;
    let m = t.m();
    Ok((0..m)
        .filter(|&j| {
            (0..m).filter(|&i| i != j).all(|i| {
                (0..m).any(|k| (k == i || s(t, k, i) >= beta) && s(t, k, j) <= beta)
            })
        })
        .map(CandidateId)
        .collect())
}

pub fn uncovered_set<S: Scalar>(p: &Profile<S>, beta: &S) -> Result<CandidateSet> {
    uncovered_set_on(&p.tournament_matrix(), beta)
}

/// Ranked Pairs: lock ordered pairs by decreasing `s_{i≻j}` (ties by
/// `(i, j)`), skipping any that would close a cycle; the winner is the source
/// of the locked graph.
pub fn ranked_pairs_on<S: Scalar>(t: &TournamentMatrix<S>) -> Result<CandidateId> {
    let m = t.m();
    if m == 0 {
        return Err(Error::pre("no candidates"));
    }
    let mut pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|a, b| {
        s(t, b.0, b.1)
            .partial_cmp(s(t, a.0, a.1))
            .expect("comparable")
            .then(a.cmp(b))
    });
    let mut locked = vec![vec![false; m]; m];
    let reaches = |locked: &Vec<Vec<bool>>, from: usize, to: usize| {
        let mut seen = vec![false; m];
        let mut stack = vec![from];
        while let Some(v) = stack.pop() {
            if v == to {
                return true;
            }
            if !std::mem::replace(&mut seen[v], true) {
                stack.extend((0..m).filter(|&w| locked[v][w]));
            }
        }
        false
    };
    for (i, j) in pairs {
        if !reaches(&locked, j, i) {
            locked[i][j] = true;
        }
    }
    (0..m)
        .find(|&v| (0..m).all(|u| !locked[u][v]))
        .map(CandidateId)
        .ok_or_else(|| Error::Internal("ranked pairs left no source".into()))
}

pub fn ranked_pairs<S: Scalar>(p: &Profile<S>) -> Result<CandidateId> {
    ranked_pairs_on(&p.tournament_matrix())
}

/// `j` is (α, β)-unblanketed if every `i ≠ j` has some `k` (with `k = i` or
/// `s_{k≻i} ≥ α`) satisfying
/// (I) `s_{k≻j} ≤ β`, or
/// (II) `s_{k≻j} ≤ α` and some `ℓ ∉ {k, j}` has `s_{k≻ℓ} ≤ β ≤ s_{j≻ℓ}`.
pub fn is_unblanketed<S: Scalar>(t: &TournamentMatrix<S>, alpha: &S, beta: &S, j: usize) -> bool {
    let m = t.m();
    (0..m).filter(|&i| i != j).all(|i| {
        (0..m).any(|k| {
            if !(k == i || s(t, k, i) >= alpha) {
                return false;
            }
            let skj = s(t, k, j);
            skj <= beta
                || (skj <= alpha
                    && (0..m).any(|l| l != k && l != j && s(t, k, l) <= beta && beta <= s(t, j, l)))
        })
    })
}

/// The Unblanketed Set rule: the whole (α, β)-unblanketed set and its
/// lowest-indexed member.
pub fn unblanketed_set_on<S: Scalar>(
    t: &TournamentMatrix<S>,
    alpha: &S,
    beta: &S,
) -> Result<(CandidateId, CandidateSet)> {
    if !(alpha >= beta && *beta > S::half()) || *alpha > S::one() {
        return Err(Error::pre(format!(
            "unblanketed set requires α ≥ β > 1/2 (and α ≤ 1), got α = {alpha}, β = {beta}"
        )));
    }
    let set: CandidateSet = (0..t.m())
        .filter(|&j| is_unblanketed(t, alpha, beta, j))
        .map(CandidateId)
        .collect();
    let winner = set
        .first()
        .ok_or_else(|| Error::Internal("unblanketed set is empty".into()))?;
    Ok((winner, set))
}

pub fn unblanketed_set<S: Scalar>(p: &Profile<S>, alpha: &S, beta: &S) -> Result<(CandidateId, CandidateSet)> {
    unblanketed_set_on(&p.tournament_matrix(), alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::fixtures::*;

    fn c(i: usize) -> CandidateId {
        CandidateId(i)
    }

    fn defaults() -> (crate::scalar::Rational, crate::scalar::Rational) {
        (q(68233, 100000), q(53443, 100000))
    }

    #[test]
    fn copeland_and_uncovered() {
        let cyc = three_cycle();
        assert_eq!(copeland_weighted(&cyc, &q(7, 10)).unwrap(), c(0));
        assert_eq!(uncovered_set(&cyc, &q(7, 10)).unwrap(), CandidateSet::full(3));
        let sf = sixty_forty();
        assert_eq!(copeland_weighted(&sf, &q(55, 100)).unwrap(), c(0));
        assert_eq!(uncovered_set(&sf, &q(55, 100)).unwrap(), CandidateSet::singleton(c(0)));
        let one = unanimous(&[0]);
        assert_eq!(copeland_weighted(&one, &q(1, 2)).unwrap(), c(0));
        assert!(copeland_weighted(&sf, &q(2, 5)).is_err());
    }

    #[test]
    fn ranked_pairs_examples() {
        assert_eq!(ranked_pairs(&unanimous(&[0, 1, 2])).unwrap(), c(0));
        assert_eq!(ranked_pairs(&unanimous(&[2, 0, 1])).unwrap(), c(2));
        assert_eq!(ranked_pairs(&three_cycle()).unwrap(), c(0));
        assert_eq!(ranked_pairs(&sixty_forty()).unwrap(), c(0));
    }

    #[test]
    fn unblanketed_examples() {
        let (a, b) = defaults();
        let (w, set) = unblanketed_set(&sixty_forty(), &a, &b).unwrap();
        assert_eq!(w, c(0));
        assert_eq!(set, CandidateSet::singleton(c(0)));
        let (w, set) = unblanketed_set(&three_cycle(), &a, &b).unwrap();
        assert_eq!(w, c(0));
        assert_eq!(set, CandidateSet::full(3));
        let err = unblanketed_set(&sixty_forty(), &b, &a).unwrap_err();
        assert!(err.to_string().contains("requires α ≥ β > 1/2"));
        assert!(unblanketed_set(&sixty_forty(), &q(1, 2), &q(1, 2)).is_err());
    }

    #[test]
    fn copeland_winner_is_uncovered() {
        use crate::random::random_profile;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let p = random_profile(&mut rng, 5, 6).unwrap();
            for beta in [q(1, 2), q(3, 5), q(4, 5)] {
                let w = copeland_weighted(&p, &beta).unwrap();
                assert!(uncovered_set(&p, &beta).unwrap().contains(w));
            }
        }
    }
}
