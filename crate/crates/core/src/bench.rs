//! Concrete numeric artifacts: the parameters of the Unblanketed Set bound,
//! the 5-candidate lower-bound instance with its five realizing profiles, and
//! the rotation-symmetric suite.

use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::metric::{distortion_exact, integral_pair, BiasedVector, Target};
use crate::profile::{parse_profile, CandidateId, CandidateSet, Profile, TournamentMatrix};
use crate::random::rotation_closed_profile;
use crate::rules::unblanketed_set;
use crate::scalar::{Rational, Scalar};

/// Bisection accuracy of [`solve_poly_root`].
pub const ROOT_ACCURACY: f64 = 1e-12;
/// Rounding slack of the 5-decimal tables.
pub const TABLE_TOLERANCE: f64 = 2e-4;
/// Slack on the per-case ratio against `λ`.
pub const RATIO_SLACK: f64 = 1e-3;
/// Claimed lower bound on every candidate's distortion.
pub const LOWER_BOUND: f64 = 3.112;
/// Claimed upper bound for the Unblanketed Set winner.
pub const UNBLANKETED_BOUND: f64 = 3.93115;

const CASE_DATA: [&str; 5] = [
    include_str!("../data/lb5_case0.txt"),
    include_str!("../data/lb5_case1.txt"),
    include_str!("../data/lb5_case2.txt"),
    include_str!("../data/lb5_case3.txt"),
    include_str!("../data/lb5_case4.txt"),
];

fn horner<S: Scalar>(coeffs: &[S], x: &S) -> S {
    coeffs.iter().fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
}

/// A root of the polynomial with `coeffs` (highest degree first) inside
/// `bracket`, by bisection to [`ROOT_ACCURACY`].
pub fn solve_poly_root<S: Scalar>(coeffs: &[S], bracket: (S, S)) -> Result<S> {
    let (mut lo, mut hi) = bracket;
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    let no_change = || Error::NoSignChange {
        lo: lo.render(),
        hi: hi.render(),
    };
    let flo = horner(coeffs, &lo);
    let fhi = horner(coeffs, &hi);
    if flo.is_zero() {
        return Ok(lo);
    }
    if fhi.is_zero() {
        return Ok(hi);
    }
    if flo.is_positive() == fhi.is_positive() {
        return Err(no_change());
    }
    let low_negative = flo.is_negative();
    let accuracy = S::from_f64(ROOT_ACCURACY).ok_or_else(|| Error::Internal("accuracy".into()))?;
    while hi.clone() - lo.clone() > accuracy {
        let mid = (lo.clone() + hi.clone()) * S::half();
        let f = horner(coeffs, &mid);
        if f.is_zero() {
            return Ok(mid);
        }
        if f.is_negative() == low_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * S::half())
}

fn int(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Parameters of the Unblanketed Set bound: `λ` solves `λ³ = λ² + 1`,
/// `α = 1/λ`, `β = 2 − λ`, and the distortion bound is `1 + 2λ`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnblanketedParams {
    pub lambda: Rational,
    pub alpha: Rational,
    pub beta: Rational,
    pub bound: Rational,
}

impl UnblanketedParams {
    pub fn to_json(&self) -> Value {
        let f = |r: &Rational| r.to_f64_lossy();
        json!({
            "lambda": f(&self.lambda),
            "alpha": f(&self.alpha),
            "beta": f(&self.beta),
            "bound": f(&self.bound),
        })
    }
}

pub fn unblanketed_params() -> Result<UnblanketedParams> {
    let lambda = solve_poly_root(&[int(1), int(-1), int(0), int(-1)], (int(1), int(2)))?;
    Ok(UnblanketedParams {
        alpha: int(1) / lambda.clone(),
        beta: int(2) - lambda.clone(),
        bound: int(1) + int(2) * lambda.clone(),
        lambda,
    })
}

/// The lower-bound instance: the symbolic comparison matrix at the root `λ`
/// of `2λ⁵ + λ⁴ + λ³ − λ − 4`, with `β = 2/(1 + λ² + λ³)`, and one realizing
/// profile per target candidate (`profiles[j]` is the case against `j`).
#[derive(Clone, Debug)]
pub struct LBInstance {
    pub lambda: Rational,
    pub beta: Rational,
    pub matrix: TournamentMatrix<Rational>,
    pub profiles: Vec<Profile<Rational>>,
}

/// The comparison matrix for given `β`, `λ`.
pub fn lb5_matrix(beta: &Rational, lambda: &Rational) -> Result<TournamentMatrix<Rational>> {
    let b = beta.clone();
    let l = lambda.clone();
    let one = int(1);
    let bl = |e: usize| b.clone() * num_traits::pow(l.clone(), e);
    let z = int(0);
    let nb = one.clone() - b.clone();
    let cross = bl(3) * (one.clone() + l.clone());
    TournamentMatrix::new(vec![
        vec![z.clone(), bl(1), nb.clone(), nb.clone(), nb.clone()],
        vec![one.clone() - bl(1), z.clone(), bl(2), nb.clone(), nb.clone()],
        vec![b.clone(), one.clone() - bl(2), z.clone(), bl(3), cross.clone() - one.clone()],
        vec![b.clone(), b.clone(), one.clone() - bl(3), z.clone(), bl(4)],
        vec![b.clone(), b.clone(), int(2) - cross, one.clone() - bl(4), z],
    ])
}

pub fn build_lb5() -> Result<LBInstance> {
    let lambda = solve_poly_root(
        &[int(2), int(1), int(1), int(0), int(-1), int(-4)],
        (int(1), Rational::new(11.into(), 10.into())),
    )?;
    let l2 = lambda.clone() * lambda.clone();
    let beta = int(2) / (int(1) + l2.clone() + l2 * lambda.clone());
    let matrix = lb5_matrix(&beta, &lambda)?;
    let profiles = CASE_DATA
        .iter()
        .enumerate()
        .map(|(j, text)| {
            let p = parse_profile(text).map_err(|e| Error::Internal(format!("bundled case {j}: {e}")))?;
            if p.m() != 5 {
                return Err(Error::Internal(format!("bundled case {j} has {} candidates", p.m())));
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LBInstance {
        lambda,
        beta,
        matrix,
        profiles,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    AtLeast,
    AtMost,
    Equal,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
            Relation::Equal => "==",
        }
    }
}

/// One named comparison of a measured value against a reference.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub case: Option<usize>,
    pub measured: f64,
    pub relation: Relation,
    pub reference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, case: Option<usize>, measured: f64, relation: Relation, reference: f64, tolerance: f64) -> Self {
        let passed = match relation {
            Relation::AtLeast => measured >= reference - tolerance,
            Relation::AtMost => measured <= reference + tolerance,
            Relation::Equal => (measured - reference).abs() <= tolerance,
        };
        Check {
            name: name.into(),
            case,
            measured,
            relation,
            reference,
            tolerance,
            passed,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "case": self.case,
            "measured": self.measured,
            "relation": self.relation.symbol(),
            "reference": self.reference,
            "tolerance": self.tolerance,
            "passed": self.passed,
        })
    }
}

/// A matrix entry where a case profile differs from the symbolic matrix by
/// more than the table tolerance, on a statistic that case does not use.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryMismatch {
    pub case: usize,
    pub a: usize,
    pub b: usize,
    pub profile: f64,
    pub matrix: f64,
}

#[derive(Clone, Debug)]
pub struct Lb5Report {
    pub lambda: f64,
    pub beta: f64,
    pub checks: Vec<Check>,
    pub mismatches: Vec<EntryMismatch>,
    pub elapsed_secs: f64,
}

impl Lb5Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lambda": self.lambda,
            "beta": self.beta,
            "passed": self.passed(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "unused_entry_mismatches": self.mismatches.iter().map(|m| json!({
                "case": m.case, "a": m.a, "b": m.b, "profile": m.profile, "matrix": m.matrix,
            })).collect::<Vec<_>>(),
            "elapsed_secs": self.elapsed_secs,
        })
    }
}

fn c(i: usize) -> CandidateId {
    CandidateId(i)
}

fn set(v: &[usize]) -> CandidateSet {
    v.iter().map(|&i| c(i)).collect()
}

/// The pairwise statistics (ordered pairs) each case's argument relies on.
fn exercised(jstar: usize) -> Vec<(usize, usize)> {
    if jstar == 0 {
        vec![(2, 0), (3, 0), (4, 0), (3, 4), (0, 4), (1, 4)]
    } else {
        let i = jstar - 1;
        let h = (jstar + 3) % 5;
        vec![(i, jstar), (h, i)]
    }
}

fn verify_case(inst: &LBInstance, params: &UnblanketedParams, jstar: usize) -> Result<(Vec<Check>, Vec<EntryMismatch>)> {
    let p = &inst.profiles[jstar];
    let lambda = inst.lambda.to_f64_lossy();
    let f = |r: Rational| r.to_f64_lossy();
    let mut checks = Vec::new();
    let case = Some(jstar);
    let istar = (jstar + 4) % 5;
    let x: Vec<Rational> = if jstar == 0 {
        let h = Rational::new(1.into(), 2.into());
        vec![int(1), int(1), h.clone(), h, int(0)]
    } else {
        (0..5).map(|k| if k == istar { int(0) } else { int(1) }).collect()
    };
    let bv = BiasedVector::new(x, c(istar))?;
    let (lhs, rhs) = integral_pair(p, &bv, &Target::Candidate(c(jstar)))?;
    let ratio = if rhs.is_zero() { f64::INFINITY } else { f(lhs / rhs) };
    checks.push(Check::new("integral ratio", case, ratio, Relation::AtLeast, lambda, RATIO_SLACK));

    if jstar == 0 {
        let beta_hat = f(p.frac_group(set(&[2, 3, 4]), set(&[0]))?);
        for a in [2, 3, 4] {
            checks.push(Check::new(
                format!("s({a}>0) = s(2,3,4>0)"),
                case,
                f(p.frac_pairwise(c(a), c(0))?),
                Relation::Equal,
                beta_hat,
                TABLE_TOLERANCE,
            ));
        }
        checks.push(Check::new(
            "s(4>0,1) = s(4>0)",
            case,
            f(p.frac_group(set(&[4]), set(&[0, 1]))?),
            Relation::Equal,
            f(p.frac_pairwise(c(4), c(0))?),
            TABLE_TOLERANCE,
        ));
    } else {
        let h = (jstar + 3) % 5;
        checks.push(Check::new(
            format!("1 - plu({istar}) = s({h}>{istar})"),
            case,
            f(int(1) - p.plurality_share(c(istar))),
            Relation::Equal,
            f(p.frac_pairwise(c(h), c(istar))?),
            TABLE_TOLERANCE,
        ));
    }

    let t = p.tournament_matrix();
    let used = exercised(jstar);
    let mut mismatches = Vec::new();
    for a in 0..5 {
        for b in (0..5).filter(|&b| b != a) {
            let got = f(t.get(c(a), c(b)).clone());
            let want = f(inst.matrix.get(c(a), c(b)).clone());
            if used.contains(&(a, b)) {
                checks.push(Check::new(format!("entry s({a}>{b})"), case, got, Relation::Equal, want, TABLE_TOLERANCE));
            } else if (got - want).abs() > TABLE_TOLERANCE {
                mismatches.push(EntryMismatch {
                    case: jstar,
                    a,
                    b,
                    profile: got,
                    matrix: want,
                });
            }
        }
    }

    let d = distortion_exact(p, &Target::Candidate(c(jstar)))?;
    checks.push(Check::new("distortion", case, d.value.to_f64(), Relation::AtLeast, LOWER_BOUND, 0.0));

    let (winner, _) = unblanketed_set(p, &params.alpha, &params.beta)?;
    let dw = distortion_exact(p, &Target::Candidate(winner))?;
    checks.push(Check::new(
        format!("unblanketed winner {winner} distortion"),
        case,
        dw.value.to_f64(),
        Relation::AtMost,
        UNBLANKETED_BOUND,
        0.0,
    ));
    Ok((checks, mismatches))
}

/// Checks every statistic the lower-bound argument uses on the bundled
/// tables, plus the exact distortion of each case's target.
pub fn verify_lb5() -> Result<Lb5Report> {
    let start = Instant::now();
    let inst = build_lb5()?;
    let params = unblanketed_params()?;
    let lambda = inst.lambda.to_f64_lossy();
    let beta = inst.beta.to_f64_lossy();

    let mut checks = vec![Check::new(
        "root 2x^5+x^4+x^3-x-4",
        None,
        lambda,
        Relation::Equal,
        1.056439,
        1e-6,
    )];
    let m = &inst.matrix;
    let triple = m.get(c(3), c(1)).clone() + m.get(c(1), c(2)).clone() + m.get(c(2), c(3)).clone();
    checks.push(Check::new("triple (3,1,2) tight", None, triple.to_f64_lossy(), Relation::Equal, 2.0, 1e-6));
    let worst_triple = m
        .triple_violations()
        .iter()
        .map(|(_, _, _, excess)| excess.to_f64_lossy())
        .fold(0.0, f64::max);
    checks.push(Check::new("triple realizability excess", None, worst_triple, Relation::AtMost, 0.0, 1e-6));

    let results: Vec<Result<(Vec<Check>, Vec<EntryMismatch>)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..5)
            .map(|j| {
                let inst = &inst;
                let params = &params;
                scope.spawn(move || verify_case(inst, params, j))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Internal("case verification panicked".into()))))
            .collect()
    });
    let mut mismatches = Vec::new();
    for r in results {
        let (ch, mm) = r?;
        checks.extend(ch);
        mismatches.extend(mm);
    }
    Ok(Lb5Report {
        lambda,
        beta,
        checks,
        mismatches,
        elapsed_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug)]
pub struct CyclicReport {
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// Largest distortion of any candidate in each trial.
    pub per_trial: Vec<f64>,
    pub worst: f64,
    pub passed: bool,
}

impl CyclicReport {
    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m,
            "trials": self.trials,
            "seed": self.seed,
            "worst": self.worst,
            "per_trial": self.per_trial,
            "passed": self.passed,
        })
    }
}

/// Every candidate of a rotation-closed profile has distortion at most 3.
pub fn cyclic_suite(m: usize, trials: usize, seed: u64) -> Result<CyclicReport> {
    if m < 3 {
        return Err(Error::pre("the cyclic suite needs m ≥ 3"));
    }
    if m > 8 {
        return Err(Error::pre("the cyclic suite supports m ≤ 8"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let three = int(3);
    let mut per_trial = Vec::with_capacity(trials);
    let mut passed = true;
    for _ in 0..trials {
        let base = rng.gen_range(1..=3);
        let p = rotation_closed_profile(&mut rng, m, base)?;
        let mut worst = 0.0f64;
        for j in 0..m {
            let d = distortion_exact(&p, &Target::Candidate(c(j)))?;
            passed &= d.value.le(&three);
            worst = worst.max(d.value.to_f64());
        }
        per_trial.push(worst);
    }
    let worst = per_trial.iter().copied().fold(0.0, f64::max);
    Ok(CyclicReport {
        m,
        trials,
        seed,
        per_trial,
        worst,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::fixtures::{q, three_cycle};

    #[test]
    fn roots() {
        let gold: f64 = solve_poly_root(&[1.0, -1.0, 0.0, -1.0], (1.0, 2.0)).unwrap();
        assert!((gold - 1.465571).abs() < 1e-6);
        let lb: f64 = solve_poly_root(&[2.0, 1.0, 1.0, 0.0, -1.0, -4.0], (1.0, 1.1)).unwrap();
        assert!((lb - 1.056439).abs() < 1e-6);
        let one = solve_poly_root(&[q(1, 1), q(-1, 1)], (q(0, 1), q(2, 1))).unwrap();
        assert_eq!(one, q(1, 1));
        assert!(matches!(
            solve_poly_root(&[1.0, 0.0, 1.0], (-1.0, 1.0)),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn unblanketed_parameters() {
        let p = unblanketed_params().unwrap();
        assert!((p.alpha.to_f64_lossy() - 0.68233).abs() < 1e-5);
        assert!((p.beta.to_f64_lossy() - 0.53443).abs() < 1e-5);
        assert!((p.bound.to_f64_lossy() - 3.93114).abs() < 1e-5);
    }

    #[test]
    fn lb_matrix_entries() {
        let inst = build_lb5().unwrap();
        let m = inst.matrix.map(|r| r.to_f64_lossy());
        assert!((inst.beta.to_f64_lossy() - 0.606960).abs() < 1e-6);
        assert!((m.get(c(1), c(2)) - 0.677).abs() < 1e-3);
        assert!((m.get(c(2), c(4)) - 0.472).abs() < 1e-3);
        assert!((m.get(c(0), c(1)) - 0.641).abs() < 1e-3);
        let p0 = &inst.profiles[0];
        assert!((p0.plurality_share(c(4)).to_f64_lossy() - 0.24397).abs() < 1e-4);
        let s34 = p0.frac_pairwise(c(3), c(4)).unwrap().to_f64_lossy();
        assert!((s34 - m.get(c(3), c(4))).abs() < 2e-4);
    }

    #[test]
    fn cycle_has_distortion_three() {
        let p = three_cycle();
        for j in 0..3 {
            let d = distortion_exact(&p, &Target::Candidate(c(j))).unwrap();
            assert_eq!(d.value, crate::metric::Extended::Finite(q(3, 1)));
        }
        assert!(cyclic_suite(2, 1, 0).is_err());
    }
}
