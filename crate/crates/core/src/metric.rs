//! Metrics consistent with a profile, and worst-case distortion.
//!
//! A [`MetricTable`] holds one distance per (voter block, candidate); every
//! voter in a block sits at the same point. Such a table extends to a
//! pseudo-metric on voters and candidates exactly when it is nonnegative and
//! satisfies the quadrilateral inequality
//! `d(v,a) ≤ d(v,b) + d(u,b) + d(u,a)`.
//!
//! [`distortion_exact`] maximises the (expected) social cost of a target over
//! all such tables consistent with the rankings, one linear program per
//! reference candidate. [`biased_metric`] builds the structured worst-case
//! family parametrised by a vector `x` with `x[i*] = 0`, and
//! [`integral_pair`] evaluates the two stacked-block integrals that compare
//! `E[SC(j)] - SC(i*)` against `2·SC(i*)` for that family directly from
//! profile statistics.

use std::fmt;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::profile::{CandidateId, CandidateSet, Profile};
use crate::scalar::Scalar;
use crate::simplex::{LinearProgram, LpOutcome};

/// The vector `x` of a biased metric, with its zero coordinate `istar`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasedVector<S> {
    x: Vec<S>,
    istar: CandidateId,
}

impl<S: Scalar> BiasedVector<S> {
    pub fn new(x: Vec<S>, istar: CandidateId) -> Result<Self> {
        if istar.0 >= x.len() {
            return Err(Error::UnknownCandidate(istar.to_string()));
        }
        if !x[istar.0].is_zero() {
            return Err(Error::pre("biased vector requires x[i*] = 0"));
        }
        if x.iter().any(|v| v.is_negative()) {
            return Err(Error::pre("biased vector requires x ≥ 0"));
        }
        Ok(BiasedVector { x, istar })
    }

    /// `x[istar] = 0`, every other coordinate one.
    pub fn indicator(m: usize, istar: CandidateId) -> Result<Self> {
        let x = (0..m)
            .map(|i| if i == istar.0 { S::zero() } else { S::one() })
            .collect();
        BiasedVector::new(x, istar)
    }

    pub fn x(&self) -> &[S] {
        &self.x
    }

    pub fn istar(&self) -> CandidateId {
        self.istar
    }

    fn check_for(&self, p: &Profile<S>) -> Result<()> {
        if self.x.len() != p.m() {
            return Err(Error::pre(format!(
                "biased vector has {} entries for {} candidates",
                self.x.len(),
                p.m()
            )));
        }
        Ok(())
    }
}

/// Distances from each voter block (rows, in profile order) to each candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable<S> {
    d: Vec<Vec<S>>,
}

impl<S: Scalar> MetricTable<S> {
    pub fn new(d: Vec<Vec<S>>) -> Self {
        MetricTable { d }
    }

    pub fn zeros(blocks: usize, m: usize) -> Self {
        MetricTable {
            d: vec![vec![S::zero(); m]; blocks],
        }
    }

    pub fn get(&self, block: usize, c: CandidateId) -> &S {
        &self.d[block][c.0]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.d
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.d
                .iter()
                .map(|r| Value::Array(r.iter().map(|x| Value::String(x.render())).collect()))
                .collect(),
        )
    }
}

/// What a rule selected: a candidate or a distribution over candidates.
#[derive(Clone, Debug, PartialEq)]
pub enum Target<S> {
    Candidate(CandidateId),
    Lottery(Vec<S>),
}

impl<S: Scalar> Target<S> {
    fn probabilities(&self, m: usize) -> Result<Vec<S>> {
        match self {
            Target::Candidate(c) => {
                if c.0 >= m {
                    return Err(Error::UnknownCandidate(c.to_string()));
                }
                let mut p = vec![S::zero(); m];
                p[c.0] = S::one();
                Ok(p)
            }
            Target::Lottery(p) => {
                if p.len() != m {
                    return Err(Error::pre(format!(
                        "lottery has {} entries for {m} candidates",
                        p.len()
                    )));
                }
                if p.iter().any(|x| x.is_neg()) {
                    return Err(Error::pre("lottery has a negative probability"));
                }
                let total = p.iter().fold(S::zero(), |a, x| a + x.clone());
                if !(total.clone() - S::one()).abs().approx_le(&S::ratio(1, 1_000_000_000)) {
                    return Err(Error::pre(format!("lottery sums to {total}, not 1")));
                }
                Ok(p.clone())
            }
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Target::Candidate(c) => json!({"candidate": c.0}),
            Target::Lottery(p) => json!({"lottery": p.iter().map(|x| x.render()).collect::<Vec<_>>()}),
        }
    }
}

/// A value in `[0, ∞]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Extended<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> Extended<S> {
    pub fn finite(&self) -> Option<&S> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(v) => v.to_f64_lossy(),
            Extended::Infinite => f64::INFINITY,
        }
    }

    /// `self ≤ bound` (to tolerance); infinity is never bounded.
    pub fn le(&self, bound: &S) -> bool {
        self.finite().is_some_and(|v| v.approx_le(bound))
    }

    fn gt(&self, other: &Self) -> bool {
        match (self, other) {
            (Extended::Infinite, Extended::Finite(_)) => true,
            (Extended::Finite(a), Extended::Finite(b)) => a > b,
            _ => false,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Extended::Finite(v) => v.render(),
            Extended::Infinite => "inf".into(),
        }
    }
}

impl<S: Scalar> fmt::Display for Extended<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Clone, Debug)]
pub struct DistortionReport<S> {
    pub target: Target<S>,
    pub value: Extended<S>,
    pub witness_istar: CandidateId,
    /// Optimal table for `witness_istar`; absent when the value is infinite.
    pub witness_metric: Option<MetricTable<S>>,
    /// LP value against every reference candidate that was examined.
    pub per_istar: Vec<(CandidateId, Extended<S>)>,
}

impl<S: Scalar> DistortionReport<S> {
    pub fn to_json(&self) -> Value {
        json!({
            "target": self.target.to_json(),
            "value": self.value.render(),
            "value_f64": self.value.to_f64(),
            "witness_istar": self.witness_istar.0,
            "metric": self.witness_metric.as_ref().map(|m| m.to_json()),
            "per_istar": self.per_istar.iter().map(|(c, v)| json!({"istar": c.0, "value": v.render()})).collect::<Vec<_>>(),
        })
    }
}

/// The biased metric for `bv`:
/// `d(i*, v) = ½ max_{j ⪰_v i} (x_j − x_i)` and
/// `d(j, v) = d(i*, v) + min_{k ⪯_v j} x_k`.
pub fn biased_metric<S: Scalar>(p: &Profile<S>, bv: &BiasedVector<S>) -> Result<MetricTable<S>> {
    bv.check_for(p)?;
    let half = S::half();
    let x = bv.x();
    let rows = p
        .blocks()
        .iter()
        .map(|b| {
            let order = b.ranking.order();
            // largest drop x_j − x_i with j weakly above i
            let mut prefix_max = x[order[0].0].clone();
            let mut spread = S::zero();
            for c in order {
                prefix_max = S::max_of(prefix_max, x[c.0].clone());
                spread = S::max_of(spread, prefix_max.clone() - x[c.0].clone());
            }
            let base = half.clone() * spread;
            let mut row = vec![S::zero(); order.len()];
            let mut suffix_min: Option<S> = None;
            for c in order.iter().rev() {
                let v = x[c.0].clone();
                let m = match suffix_min.take() {
                    None => v,
                    Some(s) => S::min_of(s, v),
                };
                row[c.0] = base.clone() + m.clone();
                suffix_min = Some(m);
            }
            row
        })
        .collect();
    Ok(MetricTable { d: rows })
}

/// `SC(c) = Σ_blocks weight · d(block, c)`.
pub fn social_cost<S: Scalar>(p: &Profile<S>, mt: &MetricTable<S>, c: CandidateId) -> S {
    p.blocks()
        .iter()
        .zip(&mt.d)
        .fold(S::zero(), |acc, (b, row)| acc + b.weight.clone() * row[c.0].clone())
}

/// Expected social cost of a distribution.
pub fn expected_social_cost<S: Scalar>(p: &Profile<S>, mt: &MetricTable<S>, probs: &[S]) -> S {
    probs
        .iter()
        .enumerate()
        .filter(|(_, q)| !q.is_zero())
        .fold(S::zero(), |acc, (j, q)| {
            acc + q.clone() * social_cost(p, mt, CandidateId(j))
        })
}

fn sorted_distinct<S: Scalar>(mut v: Vec<S>) -> Vec<S> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    v.dedup_by(|a, b| a == b);
    v
}

/// The two stacked-block integrals of the biased metric for `bv`:
///
/// * `lhs = ∫₀^∞ Σ_{j∉I_t} p_j · s_{I_t≻j} dt` with `I_t = {k : x_k ≤ t}`,
/// * `rhs = ∫₀^∞ (1 − s_{∀ j≻i: x_j − x_i ≤ t}) dt`.
///
/// Both integrands are step functions of `t`, evaluated exactly from profile
/// statistics between consecutive breakpoints. Under [`biased_metric`],
/// `lhs = Σ_j p_j (SC(j) − SC(i*))` and `rhs = 2·SC(i*)`.
pub fn integral_pair<S: Scalar>(
    p: &Profile<S>,
    bv: &BiasedVector<S>,
    lottery: &Target<S>,
) -> Result<(S, S)> {
    bv.check_for(p)?;
    let m = p.m();
    let probs = lottery.probabilities(m)?;
    let x = bv.x();

    let mut lhs = S::zero();
    let cuts = sorted_distinct(x.to_vec());
    for w in cuts.windows(2) {
        let (t, next) = (&w[0], &w[1]);
        let below: CandidateSet = (0..m).filter(|&k| x[k] <= *t).map(CandidateId).collect();
        let mut height = S::zero();
        for j in below.complement(m).iter() {
            if probs[j.0].is_zero() {
                continue;
            }
            height += probs[j.0].clone() * p.frac_group_unchecked(below, CandidateSet::singleton(j));
        }
        lhs += height * (next.clone() - t.clone());
    }

    let mut diffs = vec![S::zero()];
    for a in x {
        for b in x {
            if a > b {
                diffs.push(a.clone() - b.clone());
            }
        }
    }
    let cuts = sorted_distinct(diffs);
    let mut rhs = S::zero();
    for w in cuts.windows(2) {
        let (t, next) = (&w[0], &w[1]);
        let calm = p.frac_where(|r| {
            let order = r.order();
            let mut prefix_max = x[order[0].0].clone();
            order.iter().all(|c| {
                prefix_max = S::max_of(prefix_max.clone(), x[c.0].clone());
                (prefix_max.clone() - x[c.0].clone()) <= *t
            })
        });
        rhs += (S::one() - calm) * (next.clone() - t.clone());
    }
    Ok((lhs, rhs))
}

/// Layout of the distortion LP: `d(v,c)` for each block and candidate, then
/// one candidate–candidate distance `e(a,b)` per unordered pair.
struct MetricLp {
    blocks: usize,
    m: usize,
}

impl MetricLp {
    fn d(&self, block: usize, c: usize) -> usize {
        block * self.m + c
    }

    fn e(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        // pairs (a,b), a<b, in row-major order
        self.blocks * self.m + a * (2 * self.m - a - 1) / 2 + (b - a - 1)
    }

    fn num_vars(&self) -> usize {
        self.blocks * self.m + self.m * (self.m - 1) / 2
    }
}

/// Builds the LP maximising `Σ_j p_j SC(j)` subject to `SC(istar) ≤ 1`,
/// ordinal consistency and the triangle inequalities through `e`:
/// `d(v,a) ≤ d(v,b) + e(a,b)` and `e(a,b) ≤ d(v,a) + d(v,b)`.
fn build_lp<S: Scalar>(
    p: &Profile<S>,
    probs: &[S],
    istar: CandidateId,
) -> Result<(LinearProgram<S>, MetricLp)> {
    let m = p.m();
    let layout = MetricLp {
        blocks: p.blocks().len(),
        m,
    };
    let mut lp = LinearProgram::new(layout.num_vars());
    let one = S::one();
    let neg = -S::one();
    for (bi, b) in p.blocks().iter().enumerate() {
        for (j, pj) in probs.iter().enumerate() {
            if !pj.is_zero() {
                lp.add_objective(layout.d(bi, j), b.weight.clone() * pj.clone());
            }
        }
        let order = b.ranking.order();
        for w in order.windows(2) {
            lp.add_le(
                vec![(layout.d(bi, w[0].0), one.clone()), (layout.d(bi, w[1].0), neg.clone())],
                S::zero(),
            )?;
        }
        for (hi_pos, hi) in order.iter().enumerate() {
            for lo in &order[hi_pos + 1..] {
                lp.add_le(
                    vec![
                        (layout.d(bi, lo.0), one.clone()),
                        (layout.d(bi, hi.0), neg.clone()),
                        (layout.e(hi.0, lo.0), neg.clone()),
                    ],
                    S::zero(),
                )?;
            }
        }
        for a in 0..m {
            for c in a + 1..m {
                lp.add_le(
                    vec![
                        (layout.e(a, c), one.clone()),
                        (layout.d(bi, a), neg.clone()),
                        (layout.d(bi, c), neg.clone()),
                    ],
                    S::zero(),
                )?;
            }
        }
    }
    let norm = p
        .blocks()
        .iter()
        .enumerate()
        .map(|(bi, b)| (layout.d(bi, istar.0), b.weight.clone()))
        .collect();
    lp.add_le(norm, S::one())?;
    Ok((lp, layout))
}

/// Worst-case ratio `E[SC(target)] / SC(istar)` over metrics consistent with
/// the profile, with an optimal table when finite.
pub fn distortion_against<S: Scalar>(
    p: &Profile<S>,
    target: &Target<S>,
    istar: CandidateId,
) -> Result<(Extended<S>, Option<MetricTable<S>>)> {
    let m = p.m();
    if istar.0 >= m {
        return Err(Error::UnknownCandidate(istar.to_string()));
    }
    let probs = target.probabilities(m)?;
    let (lp, layout) = build_lp(p, &probs, istar)?;
    match lp.solve()? {
        LpOutcome::Unbounded => Ok((Extended::Infinite, None)),
        LpOutcome::Optimal(sol) => {
            let d = (0..layout.blocks)
                .map(|bi| (0..m).map(|c| sol.primal[layout.d(bi, c)].clone()).collect())
                .collect();
            Ok((Extended::Finite(sol.value), Some(MetricTable { d })))
        }
    }
}

/// Exact metric distortion of a candidate or lottery: the largest
/// [`distortion_against`] over reference candidates (all others for a
/// candidate target, all candidates for a lottery). Always at least one.
pub fn distortion_exact<S: Scalar>(p: &Profile<S>, target: &Target<S>) -> Result<DistortionReport<S>> {
    let m = p.m();
    target.probabilities(m)?;
    let refs: Vec<CandidateId> = match target {
        Target::Candidate(c) => p.candidates().filter(|i| i != c).collect(),
        Target::Lottery(_) => p.candidates().collect(),
    };
    let mut report = DistortionReport {
        target: target.clone(),
        value: Extended::Finite(S::one()),
        witness_istar: match target {
            Target::Candidate(c) => *c,
            Target::Lottery(_) => CandidateId(0),
        },
        witness_metric: Some(MetricTable::zeros(p.blocks().len(), m)),
        per_istar: Vec::with_capacity(refs.len()),
    };
    for istar in refs {
        let (value, table) = distortion_against(p, target, istar)?;
        report.per_istar.push((istar, value.clone()));
        if value.gt(&report.value) {
            report.value = value;
            report.witness_istar = istar;
            report.witness_metric = table;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Negative { block: usize, candidate: usize },
    Ordinal { block: usize, better: usize, worse: usize },
    Quadrilateral { v: usize, u: usize, a: usize, b: usize },
    Shape { detail: String },
}

/// Checks nonnegativity, ordinal consistency and every quadrilateral
/// inequality; returns all violations (empty when the table is consistent).
pub fn consistency_check<S: Scalar>(p: &Profile<S>, mt: &MetricTable<S>) -> Vec<Violation> {
    let m = p.m();
    let blocks = p.blocks();
    if mt.d.len() != blocks.len() || mt.d.iter().any(|r| r.len() != m) {
        return vec![Violation::Shape {
            detail: format!("expected {} rows of {m} distances", blocks.len()),
        }];
    }
    let mut out = Vec::new();
    for (bi, b) in blocks.iter().enumerate() {
        for c in 0..m {
            if mt.d[bi][c].is_neg() {
                out.push(Violation::Negative { block: bi, candidate: c });
            }
        }
        for w in b.ranking.order().windows(2) {
            if !mt.d[bi][w[0].0].approx_le(&mt.d[bi][w[1].0]) {
                out.push(Violation::Ordinal {
                    block: bi,
                    better: w[0].0,
                    worse: w[1].0,
                });
            }
        }
    }
    for v in 0..blocks.len() {
        for u in 0..blocks.len() {
            for a in 0..m {
                for b in 0..m {
                    if a == b {
                        continue;
                    }
                    let via = mt.d[v][b].clone() + mt.d[u][b].clone() + mt.d[u][a].clone();
                    if !mt.d[v][a].approx_le(&via) {
                        out.push(Violation::Quadrilateral { v, u, a, b });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::fixtures::*;
    use crate::scalar::Rational;

    fn c(i: usize) -> CandidateId {
        CandidateId(i)
    }

    #[test]
    fn biased_metric_on_sixty_forty() {
        let p = sixty_forty();
        let bv = BiasedVector::new(vec![q(0, 1), q(1, 1)], c(0)).unwrap();
        let mt = biased_metric(&p, &bv).unwrap();
        // block 0 is a>b, block 1 is b>a
        assert_eq!(mt.rows()[0], vec![q(0, 1), q(1, 1)]);
        assert_eq!(mt.rows()[1], vec![q(1, 2), q(1, 2)]);
        assert_eq!(social_cost(&p, &mt, c(0)), q(1, 5));
        assert_eq!(social_cost(&p, &mt, c(1)), q(4, 5));
        assert!(consistency_check(&p, &mt).is_empty());
    }

    #[test]
    fn zero_vector_gives_zero_metric() {
        let p = three_cycle();
        let bv = BiasedVector::new(vec![q(0, 1); 3], c(1)).unwrap();
        let mt = biased_metric(&p, &bv).unwrap();
        assert!(mt.rows().iter().flatten().all(|d| d == &q(0, 1)));
        assert_eq!(social_cost(&p, &mt, c(2)), q(0, 1));
        let pair = integral_pair(&p, &bv, &Target::Candidate(c(0))).unwrap();
        assert_eq!(pair, (q(0, 1), q(0, 1)));
    }

    #[test]
    fn integral_pair_on_sixty_forty() {
        let p = sixty_forty();
        let bv = BiasedVector::new(vec![q(0, 1), q(1, 1)], c(0)).unwrap();
        let (lhs, rhs) = integral_pair(&p, &bv, &Target::Candidate(c(1))).unwrap();
        assert_eq!(lhs, q(3, 5));
        assert_eq!(rhs, q(2, 5));
    }

    #[test]
    fn biased_vector_validation() {
        assert!(BiasedVector::new(vec![q(1, 1), q(0, 1)], c(0)).is_err());
        assert!(BiasedVector::new(vec![q(0, 1), q(-1, 1)], c(0)).is_err());
        let bv = BiasedVector::new(vec![q(0, 1), q(1, 1), q(1, 1)], c(0)).unwrap();
        assert!(biased_metric(&sixty_forty(), &bv).is_err());
    }

    #[test]
    fn distortion_of_sixty_forty() {
        let p = sixty_forty();
        let b = distortion_exact(&p, &Target::Candidate(c(1))).unwrap();
        assert_eq!(b.value, Extended::Finite(q(4, 1)));
        assert_eq!(b.witness_istar, c(0));
        let a = distortion_exact(&p, &Target::Candidate(c(0))).unwrap();
        assert_eq!(a.value, Extended::Finite(q(7, 3)));
        for r in [&a, &b] {
            let mt = r.witness_metric.as_ref().unwrap();
            assert!(consistency_check(&p, mt).is_empty());
            let tgt = match r.target {
                Target::Candidate(t) => t,
                _ => unreachable!(),
            };
            let ratio = social_cost(&p, mt, tgt) / social_cost(&p, mt, r.witness_istar);
            assert_eq!(Extended::Finite(ratio), r.value);
        }
    }

    #[test]
    fn single_candidate_has_distortion_one() {
        let p = Profile::<Rational>::from_weighted(1, &[(q(1, 1), &[0][..])]).unwrap();
        let r = distortion_exact(&p, &Target::Candidate(c(0))).unwrap();
        assert_eq!(r.value, Extended::Finite(q(1, 1)));
    }

    #[test]
    fn pareto_dominated_candidate_is_unbounded() {
        let p = unanimous(&[0, 1, 2]);
        let r = distortion_exact(&p, &Target::Candidate(c(2))).unwrap();
        assert_eq!(r.value, Extended::Infinite);
        let top = distortion_exact(&p, &Target::Candidate(c(0))).unwrap();
        assert_eq!(top.value, Extended::Finite(q(1, 1)));
    }

    #[test]
    fn lottery_target() {
        let p = sixty_forty();
        let half = Target::Lottery(vec![q(1, 2), q(1, 2)]);
        let r = distortion_exact(&p, &half).unwrap();
        // against a: (1 + 4) / 2; against b: (7/3 + 1) / 2
        assert_eq!(r.value, Extended::Finite(q(5, 2)));
        assert!(distortion_exact(&p, &Target::Lottery(vec![q(1, 2), q(1, 3)])).is_err());
    }

    #[test]
    fn float_instantiation_agrees() {
        let p = sixty_forty().to_f64();
        let r = distortion_exact(&p, &Target::Candidate(c(1))).unwrap();
        assert!((r.value.to_f64() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn consistency_check_reports_violations() {
        let p = sixty_forty();
        let bad = MetricTable::new(vec![vec![q(2, 1), q(1, 1)], vec![q(0, 1), q(0, 1)]]);
        let v = consistency_check(&p, &bad);
        assert!(v.contains(&Violation::Ordinal {
            block: 0,
            better: 0,
            worse: 1
        }));
        let quad = MetricTable::new(vec![vec![q(0, 1), q(5, 1)], vec![q(1, 1), q(1, 1)]]);
        assert!(consistency_check(&p, &quad)
            .iter()
            .any(|v| matches!(v, Violation::Quadrilateral { .. })));
        assert!(!consistency_check(&p, &MetricTable::new(vec![vec![q(0, 1)]])).is_empty());
    }
}
