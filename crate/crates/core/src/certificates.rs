//! Distortion certificates that read only tournament (or k-tournament)
//! statistics.
//!
//! Every certificate proves `SC(j*) ≤ (1 + 2λ)·SC(i*)` for one pair
//! `(j*, i*)`; [`certify_against_all`] takes the worst reference candidate.
//! The partition conditions quantify over all splits `I ⊔ J` of the
//! candidates with `i* ∈ I`, `j* ∈ J` and are enumerated directly, up to
//! [`PARTITION_CAP`] candidates. A ratio `0/0` imposes nothing and counts as
//! zero; `x/0` with `x > 0` is infinite.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lottery::Lottery;
use crate::metric::Extended;
use crate::profile::{CandidateId, CandidateSet, Profile, TournamentMatrix};
use crate::scalar::Scalar;

pub const PARTITION_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Exact group statistics over all partitions.
    Partition,
    /// Edge-only relaxation of [`Method::Partition`].
    PartitionEdges,
    /// Partition condition after shifting blocks through a proxy `k`.
    PostShift,
    /// Edge-only relaxation of [`Method::PostShift`].
    PostShiftEdges,
    /// Local conditions on `(k, ℓ)`.
    Local,
    /// Two-hop path `j* → k → i*` with every edge at least `θ`.
    TwoStep,
    /// Partition condition for a lottery.
    LotteryPartition,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Partition => "partition",
            Method::PartitionEdges => "partition-edges",
            Method::PostShift => "post-shift",
            Method::PostShiftEdges => "post-shift-edges",
            Method::Local => "local",
            Method::TwoStep => "two-step",
            Method::LotteryPartition => "lottery-partition",
        }
    }
}

/// Objects realising the binding constraint.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Witness {
    /// The `I` side of the binding partition.
    pub partition: Option<CandidateSet>,
    pub k: Option<CandidateId>,
    pub l: Option<CandidateId>,
    /// `"I"` or `"II"` for local certificates.
    pub option: Option<&'static str>,
    pub path: Option<Vec<CandidateId>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateReport<S> {
    pub method: Method,
    /// Absent for lottery certificates.
    pub jstar: Option<CandidateId>,
    pub istar: CandidateId,
    pub lambda: Extended<S>,
    /// `1 + 2λ` (equal to `4/θ − 3` for two-step certificates).
    pub bound: Extended<S>,
    /// Edge-threshold `θ` of a two-step certificate.
    pub theta: Option<S>,
    pub witness: Witness,
}

impl<S: Scalar> CertificateReport<S> {
    fn new(method: Method, jstar: Option<CandidateId>, istar: CandidateId, lambda: Extended<S>, witness: Witness) -> Self {
        let bound = match &lambda {
            Extended::Finite(l) => Extended::Finite(S::one() + l.clone() + l.clone()),
            Extended::Infinite => Extended::Infinite,
        };
        CertificateReport {
            method,
            jstar,
            istar,
            lambda,
            bound,
            theta: None,
            witness,
        }
    }

    pub fn to_json(&self) -> Value {
        let set = |s: &Option<CandidateSet>| s.map(|s| s.iter().map(|c| c.0).collect::<Vec<_>>());
        json!({
            "method": self.method.name(),
            "jstar": self.jstar.map(|c| c.0),
            "istar": self.istar.0,
            "lambda": self.lambda.render(),
            "bound": self.bound.render(),
            "bound_f64": self.bound.to_f64(),
            "theta": self.theta.as_ref().map(|t| t.render()),
            "witness": {
                "I": set(&self.witness.partition),
                "k": self.witness.k.map(|c| c.0),
                "l": self.witness.l.map(|c| c.0),
                "option": self.witness.option,
                "path": self.witness.path.as_ref().map(|p| p.iter().map(|c| c.0).collect::<Vec<_>>()),
            },
        })
    }
}

/// `num / den` under the conventions above.
fn ratio<S: Scalar>(num: S, den: S) -> Extended<S> {
    if den.is_pos() {
        Extended::Finite(num / den)
    } else if num.is_pos() {
        Extended::Infinite
    } else {
        Extended::Finite(S::zero())
    }
}

fn ext_gt<S: Scalar>(a: &Extended<S>, b: &Extended<S>) -> bool {
    match (a, b) {
        (Extended::Infinite, Extended::Finite(_)) => true,
        (Extended::Finite(x), Extended::Finite(y)) => x > y,
        _ => false,
    }
}

fn ext_max<S: Scalar>(a: Extended<S>, b: Extended<S>) -> Extended<S> {
    if ext_gt(&b, &a) {
        b
    } else {
        a
    }
}

fn check_pair(m: usize, jstar: CandidateId, istar: CandidateId) -> Result<()> {
    for c in [jstar, istar] {
        if c.0 >= m {
            return Err(Error::UnknownCandidate(c.to_string()));
        }
    }
    if jstar == istar {
        return Err(Error::pre("certificates need j* ≠ i*"));
    }
    Ok(())
}

/// Every `I` with `fixed ⊆ I` and `I ∩ excluded = ∅`; `J` is the complement.
fn partitions(m: usize, fixed: CandidateSet, excluded: CandidateSet) -> Result<Vec<CandidateSet>> {
    if m > PARTITION_CAP {
        return Err(Error::PartitionCap { cap: PARTITION_CAP, m });
    }
    let free: Vec<CandidateId> = CandidateSet::full(m).difference(fixed.union(excluded)).iter().collect();
    Ok((0u64..1 << free.len())
        .map(|mask| {
            free.iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .fold(fixed, |acc, (_, &c)| acc.with(c))
        })
        .collect())
}

/// The largest ratio over the partitions, with its witness.
fn worst_partition<S: Scalar>(
    parts: Vec<CandidateSet>,
    mut f: impl FnMut(CandidateSet) -> Extended<S>,
) -> (Extended<S>, Option<CandidateSet>) {
    let mut best = (Extended::Finite(S::zero()), None);
    for i in parts {
        let r = f(i);
        if best.1.is_none() || ext_gt(&r, &best.0) {
            best = (r, Some(i));
        }
    }
    best
}

/// Smallest `λ` with `s_{I≻j*} ≤ λ(1 − s_{i*≻J})` for every partition.
pub fn cert_partition<S: Scalar>(p: &Profile<S>, jstar: CandidateId, istar: CandidateId) -> Result<CertificateReport<S>> {
    let m = p.m();
    check_pair(m, jstar, istar)?;
    let parts = partitions(m, CandidateSet::singleton(istar), CandidateSet::singleton(jstar))?;
    let (lambda, part) = worst_partition(parts, |i| {
        let j = i.complement(m);
        ratio(
            p.frac_group_unchecked(i, CandidateSet::singleton(jstar)),
            S::one() - p.frac_group_unchecked(CandidateSet::singleton(istar), j),
        )
    });
    Ok(CertificateReport::new(
        Method::Partition,
        Some(jstar),
        istar,
        lambda,
        Witness {
            partition: part,
            ..Witness::default()
        },
    ))
}

/// Edge-only relaxation: `min_{i∈I} s_{i≻j*} ≤ λ·max_{j∈J} s_{j≻i*}`.
pub fn cert_partition_edges<S: Scalar>(
    t: &TournamentMatrix<S>,
    jstar: CandidateId,
    istar: CandidateId,
) -> Result<CertificateReport<S>> {
    post_shift_edges(t, jstar, istar, istar, Method::PartitionEdges)
}

/// The post-shift condition for a given proxy `kcand`: `λ` must satisfy
/// `s_{i*≻j*} ≤ λ·s_{k≻i*}` (unless `k = i*`) and
/// `s_{I≻j*} ≤ λ(1 − s_{{i*,k}≻J})` for every partition with `i*, k ∈ I`.
pub fn cert_post_shift<S: Scalar>(
    p: &Profile<S>,
    jstar: CandidateId,
    istar: CandidateId,
    kcand: CandidateId,
) -> Result<CertificateReport<S>> {
    let m = p.m();
    check_pair(m, jstar, istar)?;
    check_proxy(m, jstar, kcand)?;
    if kcand == istar {
        let mut r = cert_partition(p, jstar, istar)?;
        r.method = Method::PostShift;
        r.witness.k = Some(kcand);
        return Ok(r);
    }
    let t = p.tournament_matrix();
    let first = ratio(t.get(istar, jstar).clone(), t.get(kcand, istar).clone());
    let pair = CandidateSet::singleton(istar).with(kcand);
    let parts = partitions(m, pair, CandidateSet::singleton(jstar))?;
    let (second, part) = worst_partition(parts, |i| {
        ratio(
            p.frac_group_unchecked(i, CandidateSet::singleton(jstar)),
            S::one() - p.frac_group_unchecked(pair, i.complement(m)),
        )
    });
    Ok(CertificateReport::new(
        Method::PostShift,
        Some(jstar),
        istar,
        ext_max(first, second),
        Witness {
            partition: part,
            k: Some(kcand),
            ..Witness::default()
        },
    ))
}

fn check_proxy(m: usize, jstar: CandidateId, kcand: CandidateId) -> Result<()> {
    if kcand.0 >= m {
        return Err(Error::UnknownCandidate(kcand.to_string()));
    }
    if kcand == jstar {
        return Err(Error::pre("the proxy candidate k must differ from j*"));
    }
    Ok(())
}

/// Edge-only post-shift condition:
/// `min_{i∈I} s_{i≻j*} ≤ λ·max_{j∈J} max(s_{j≻i*}, s_{j≻k})`.
pub fn cert_post_shift_edges<S: Scalar>(
    t: &TournamentMatrix<S>,
    jstar: CandidateId,
    istar: CandidateId,
    kcand: CandidateId,
) -> Result<CertificateReport<S>> {
    post_shift_edges(t, jstar, istar, kcand, Method::PostShiftEdges)
}

fn post_shift_edges<S: Scalar>(
    t: &TournamentMatrix<S>,
    jstar: CandidateId,
    istar: CandidateId,
    kcand: CandidateId,
    method: Method,
) -> Result<CertificateReport<S>> {
    let m = t.m();
    check_pair(m, jstar, istar)?;
    check_proxy(m, jstar, kcand)?;
    let first = if kcand == istar {
        Extended::Finite(S::zero())
    } else {
        ratio(t.get(istar, jstar).clone(), t.get(kcand, istar).clone())
    };
    let pair = CandidateSet::singleton(istar).with(kcand);
    let parts = partitions(m, pair, CandidateSet::singleton(jstar))?;
    let (second, part) = worst_partition(parts, |i| {
        let num = i.iter().map(|x| t.get(x, jstar).clone()).reduce(S::min_of).expect("I nonempty");
        let den = i
            .complement(m)
            .iter()
            .map(|j| S::max_of(t.get(j, istar).clone(), t.get(j, kcand).clone()))
            .reduce(S::max_of)
            .expect("J nonempty");
        ratio(num, den)
    });
    Ok(CertificateReport::new(
        method,
        Some(jstar),
        istar,
        ext_max(first, second),
        Witness {
            partition: part,
            k: (method == Method::PostShiftEdges).then_some(kcand),
            ..Witness::default()
        },
    ))
}

/// The smallest `λ` for which some `k ≠ j*` (with `k = i*` or
/// `s_{k≻i*} ≥ 1/λ`) satisfies
/// (I) `s_{k≻j*} ≤ λ/(1+λ)`, or
/// (II) some `ℓ ∉ {k, j*}` has `s_{k≻j*} ≤ λ·s_{ℓ≻k}` and `s_{ℓ≻j*} ≤ λ·s_{j*≻k}`.
pub fn cert_local<S: Scalar>(
    t: &TournamentMatrix<S>,
    jstar: CandidateId,
    istar: CandidateId,
) -> Result<CertificateReport<S>> {
    let m = t.m();
    check_pair(m, jstar, istar)?;
    let mut best: Option<(Extended<S>, Witness)> = None;
    let mut consider = |lambda: Extended<S>, w: Witness| {
        if best.as_ref().map_or(true, |(b, _)| ext_gt(b, &lambda)) {
            best = Some((lambda, w));
        }
    };
    for k in (0..m).map(CandidateId).filter(|&k| k != jstar) {
        let reach = if k == istar {
            Extended::Finite(S::zero())
        } else {
            ratio(S::one(), t.get(k, istar).clone())
        };
        let skj = t.get(k, jstar).clone();
        let one = ratio(skj.clone(), S::one() - skj.clone());
        consider(
            ext_max(reach.clone(), one),
            Witness {
                k: Some(k),
                option: Some("I"),
                ..Witness::default()
            },
        );
        for l in (0..m).map(CandidateId).filter(|&l| l != k && l != jstar) {
            let two = ext_max(
                ratio(skj.clone(), t.get(l, k).clone()),
                ratio(t.get(l, jstar).clone(), t.get(jstar, k).clone()),
            );
            consider(
                ext_max(reach.clone(), two),
                Witness {
                    k: Some(k),
                    l: Some(l),
                    option: Some("II"),
                    ..Witness::default()
                },
            );
        }
    }
    let (lambda, witness) = best.ok_or_else(|| Error::Internal("no proxy candidate".into()))?;
    Ok(CertificateReport::new(Method::Local, Some(jstar), istar, lambda, witness))
}

/// The best path `j* → i*` or `j* → k → i*` by its weakest edge `θ`;
/// certifies `4/θ − 3` (`λ = 2/θ − 2`). Infinite if every path has a zero edge.
pub fn cert_two_step<S: Scalar>(
    t: &TournamentMatrix<S>,
    jstar: CandidateId,
    istar: CandidateId,
) -> Result<CertificateReport<S>> {
    let m = t.m();
    check_pair(m, jstar, istar)?;
    let mut best = (t.get(jstar, istar).clone(), vec![jstar, istar]);
    for k in (0..m).map(CandidateId).filter(|&k| k != jstar && k != istar) {
        let theta = S::min_of(t.get(jstar, k).clone(), t.get(k, istar).clone());
        if theta > best.0 {
            best = (theta, vec![jstar, k, istar]);
        }
    }
    let (theta, path) = best;
    let two = S::one() + S::one();
    let lambda = if theta.is_pos() {
        Extended::Finite(two / theta.clone() - S::one() - S::one())
    } else {
        Extended::Infinite
    };
    let k = (path.len() == 3).then(|| path[1]);
    let mut r = CertificateReport::new(
        Method::TwoStep,
        Some(jstar),
        istar,
        lambda,
        Witness {
            k,
            path: Some(path),
            ..Witness::default()
        },
    );
    r.theta = Some(theta);
    Ok(r)
}

/// Smallest `λ` with `Σ_{j∈J} p_j·s_{I≻j} ≤ λ(1 − s_{i*≻J})` for every
/// partition with `i* ∈ I`.
pub fn cert_lottery_partition<S: Scalar>(
    p: &Profile<S>,
    lottery: &Lottery<S>,
    istar: CandidateId,
) -> Result<CertificateReport<S>> {
    let m = p.m();
    if istar.0 >= m {
        return Err(Error::UnknownCandidate(istar.to_string()));
    }
    if lottery.m() != m {
        return Err(Error::pre("lottery length does not match the profile"));
    }
    let parts = partitions(m, CandidateSet::singleton(istar), CandidateSet::empty())?
        .into_iter()
        .filter(|i| i.len() < m)
        .collect();
    let (lambda, part) = worst_partition(parts, |i| {
        let j = i.complement(m);
        let num = j.iter().fold(S::zero(), |acc, x| {
            let px = lottery.prob(x);
            if px.is_zero() {
                acc
            } else {
                acc + px.clone() * p.frac_group_unchecked(i, CandidateSet::singleton(x))
            }
        });
        ratio(num, S::one() - p.frac_group_unchecked(CandidateSet::singleton(istar), j))
    });
    Ok(CertificateReport::new(
        Method::LotteryPartition,
        None,
        istar,
        lambda,
        Witness {
            partition: part,
            ..Witness::default()
        },
    ))
}

/// `θ/(1−θ)·(1/(θ(k+1)))^{1/k}`: the `λ` that stable k-lotteries achieve on
/// profiles whose pairwise margins are all at most `θ`.
pub fn regular_lambda(k: usize, theta: f64) -> Result<f64> {
    if k < 1 {
        return Err(Error::pre("k must be at least 1"));
    }
    if !(theta > 0.5 && theta < 1.0) {
        return Err(Error::pre(format!("requires 1/2 < θ < 1, got θ = {theta}")));
    }
    Ok(theta / (1.0 - theta) * (1.0 / (theta * (k + 1) as f64)).powf(1.0 / k as f64))
}

/// Runs a pairwise certificate against every `i* ≠ j*` and keeps the worst,
/// which bounds the distortion of `j*`.
pub fn certify_against_all<S: Scalar>(
    m: usize,
    jstar: CandidateId,
    mut cert: impl FnMut(CandidateId) -> Result<CertificateReport<S>>,
) -> Result<Option<CertificateReport<S>>> {
    let mut worst: Option<CertificateReport<S>> = None;
    for istar in (0..m).map(CandidateId).filter(|&i| i != jstar) {
        let r = cert(istar)?;
        if worst.as_ref().map_or(true, |w| ext_gt(&r.bound, &w.bound)) {
            worst = Some(r);
        }
    }
    Ok(worst)
}
