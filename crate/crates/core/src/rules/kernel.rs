//! Quasi-kernel pruning: keep an independent set of the `θ`-majority graph
//! that reaches every other candidate within two hops.

use serde_json::{json, Value};

use super::check_theta;
use crate::error::{Error, Result};
use crate::profile::{CandidateId, CandidateSet, Profile};
use crate::scalar::Scalar;

/// Directed graph with an edge `a → b` iff `s_{a≻b} ≥ θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PruningGraph<S> {
    theta: S,
    m: usize,
    out: Vec<CandidateSet>,
}

impl<S: Scalar> PruningGraph<S> {
    pub fn from_profile(p: &Profile<S>, theta: &S) -> Result<Self> {
        check_theta(theta)?;
        let t = p.tournament_matrix();
        let m = p.m();
        let out = (0..m)
            .map(|a| {
                (0..m)
                    .filter(|&b| b != a && t.get(CandidateId(a), CandidateId(b)) >= theta)
                    .map(CandidateId)
                    .collect()
            })
            .collect();
        Ok(PruningGraph {
            theta: theta.clone(),
            m,
            out,
        })
    }

    /// A graph from explicit edges (no self-loops).
    pub fn from_edges(m: usize, edges: &[(usize, usize)], theta: S) -> Result<Self> {
        let mut out = vec![CandidateSet::empty(); m];
        for &(a, b) in edges {
            if a == b || a >= m || b >= m {
                return Err(Error::pre(format!("invalid edge ({a},{b})")));
            }
            out[a].insert(CandidateId(b));
        }
        Ok(PruningGraph { theta, m, out })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn theta(&self) -> &S {
        &self.theta
    }

    pub fn out_neighbors(&self, a: CandidateId) -> CandidateSet {
        self.out[a.0]
    }

    pub fn has_edge(&self, a: CandidateId, b: CandidateId) -> bool {
        self.out[a.0].contains(b)
    }

    pub fn edges(&self) -> Vec<(CandidateId, CandidateId)> {
        (0..self.m)
            .flat_map(|a| self.out[a].iter().map(move |b| (CandidateId(a), b)))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "theta": self.theta.render(),
            "edges": self.edges().iter().map(|(a, b)| [a.0, b.0]).collect::<Vec<_>>(),
        })
    }
}

/// Independent, and every vertex outside is reached from inside in at most
/// two hops.
pub fn is_quasi_kernel<S: Scalar>(g: &PruningGraph<S>, k: CandidateSet) -> bool {
    let all = CandidateSet::full(g.m);
    if !k.difference(all).is_empty() {
        return false;
    }
    if k.iter().any(|a| !g.out[a.0].is_disjoint(k)) {
        return false;
    }
    let one_hop = k.iter().fold(CandidateSet::empty(), |acc, a| acc.union(g.out[a.0]));
    let two_hop = one_hop.iter().fold(one_hop, |acc, a| acc.union(g.out[a.0]));
    k.union(two_hop) == all
}

/// Chvátal–Lovász recursion: take the lowest vertex `v`, delete it with its
/// out-neighbours, solve the rest, and add `v` unless some chosen vertex
/// already points at it. The result is checked before returning.
pub fn quasi_kernel<S: Scalar>(g: &PruningGraph<S>) -> Result<CandidateSet> {
    fn solve<S: Scalar>(g: &PruningGraph<S>, alive: CandidateSet) -> CandidateSet {
        let Some(v) = alive.first() else {
            return CandidateSet::empty();
        };
        let rest = alive.difference(g.out[v.0].with(v));
        let mut q = solve(g, rest);
        if !q.iter().any(|u| g.out[u.0].contains(v)) {
            q.insert(v);
        }
        q
    }
    let k = solve(g, CandidateSet::full(g.m));
    if !is_quasi_kernel(g, k) {
        return Err(Error::Internal(format!("quasi-kernel check failed for {k:?}")));
    }
    Ok(k)
}

/// Candidates surviving quasi-kernel pruning with parameter `θ`.
pub fn quasi_kernel_prune<S: Scalar>(p: &Profile<S>, theta: &S) -> Result<CandidateSet> {
    quasi_kernel(&PruningGraph::from_profile(p, theta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::fixtures::*;
    use crate::scalar::Rational;

    fn set(v: &[usize]) -> CandidateSet {
        v.iter().map(|&i| CandidateId(i)).collect()
    }

    fn graph(m: usize, edges: &[(usize, usize)]) -> PruningGraph<Rational> {
        PruningGraph::from_edges(m, edges, q(7, 10)).unwrap()
    }

    #[test]
    fn edgeless_graph_keeps_everyone() {
        let g = PruningGraph::from_profile(&three_cycle(), &q(7, 10)).unwrap();
        assert!(g.edges().is_empty());
        assert_eq!(quasi_kernel(&g).unwrap(), CandidateSet::full(3));
    }

    #[test]
    fn path_graph() {
        let g = graph(5, &[(2, 3), (3, 4)]);
        let k = quasi_kernel(&g).unwrap();
        assert_eq!(k, set(&[0, 1, 2, 4]));
        assert!(is_quasi_kernel(&g, set(&[0, 1, 2])));
        assert!(!is_quasi_kernel(&g, set(&[0, 1, 2, 3])));
        assert!(!is_quasi_kernel(&g, set(&[0, 1, 3])));
    }

    #[test]
    fn single_edge() {
        let g = graph(2, &[(0, 1)]);
        assert_eq!(quasi_kernel(&g).unwrap(), set(&[0]));
        assert_eq!(quasi_kernel_prune(&sixty_forty(), &q(51, 100)).unwrap(), set(&[0]));
    }

    #[test]
    fn theta_range() {
        assert!(quasi_kernel_prune(&sixty_forty(), &q(1, 2)).is_err());
        assert!(quasi_kernel_prune(&sixty_forty(), &q(11, 10)).is_err());
        assert!(quasi_kernel_prune(&sixty_forty(), &q(1, 1)).is_ok());
    }

    #[test]
    fn cycles_and_exhaustive_agreement() {
        // every digraph on 4 vertices has some quasi-kernel; ours is one of them
        let pairs: Vec<(usize, usize)> = (0..4)
            .flat_map(|a| (0..4).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, e)| *e)
                .collect();
            let g = graph(4, &edges);
            let ours = quasi_kernel(&g).unwrap();
            let all: Vec<CandidateSet> = (0u64..16)
                .map(CandidateSet::from_bits)
                .filter(|&k| is_quasi_kernel(&g, k))
                .collect();
            assert!(all.contains(&ours));
        }
    }
}
