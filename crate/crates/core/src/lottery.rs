//! Stable k-lotteries under copy-counting tie-breaking.
//!
//! A voter compares a multiset `S` of drawn candidates with a multiset `T`
//! by her favourite candidate `c` in `S ∪ T`; if `c` has `n(S)` copies in `S`
//! and `n(T)` in `T`, she prefers `S` with probability `n(S)/(n(S)+n(T))`.
//!
//! Against a single opponent `c`, write `q = D(c)` and `r` for the mass `D`
//! puts below `c` in a voter's ranking. The `k` draws lose exactly when none
//! lands above `c` and the single copy of `c` wins the tie-break, so
//!
//! ```text
//! Pr[lose] = Σ_{j=0}^{k} C(k,j) q^j r^{k-j} / (j+1)
//!          = ((q+r)^{k+1} - r^{k+1}) / ((k+1) q)
//!          = Σ_{j=0}^{k} (q+r)^j r^{k-j} / (k+1).
//! ```
//!
//! The last form is a polynomial, so `q = 0` needs no special case
//! (it reduces to `r^k`).

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::profile::summary::subsets_of_size;
use crate::profile::{CandidateId, CandidateSet, KTournamentSummary, Profile};
use crate::scalar::Scalar;
use crate::simplex::{LinearProgram, LpOutcome};

/// A probability distribution over candidates.
#[derive(Clone, Debug, PartialEq)]
pub struct Lottery<S> {
    probs: Vec<S>,
}

impl<S: Scalar> Lottery<S> {
    /// Validates nonnegativity and total mass (exactly one for exact types,
    /// within `1e-9` otherwise, after which floats are renormalised).
    pub fn new(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::pre("lottery over zero candidates"));
        }
        if probs.iter().any(|x| x.is_negative()) {
            return Err(Error::pre("lottery has a negative probability"));
        }
        let total = probs.iter().fold(S::zero(), |a, x| a + x.clone());
        let slack = if S::EXACT { S::zero() } else { S::ratio(1, 1_000_000_000) };
        if (total.clone() - S::one()).abs() > slack {
            return Err(Error::pre(format!("lottery sums to {total}, not 1")));
        }
        let probs = if S::EXACT {
            probs
        } else {
            probs.into_iter().map(|x| x / total.clone()).collect()
        };
        Ok(Lottery { probs })
    }

    pub fn point(m: usize, c: CandidateId) -> Self {
        let mut probs = vec![S::zero(); m];
        probs[c.0] = S::one();
        Lottery { probs }
    }

    pub fn uniform(m: usize) -> Self {
        Lottery {
            probs: vec![S::ratio(1, m as i64); m],
        }
    }

    /// Lifts a lottery over `sub` (in that order) to all `m` candidates.
    pub fn embed(&self, sub: &[CandidateId], m: usize) -> Result<Self> {
        if sub.len() != self.probs.len() {
            return Err(Error::pre("embedding map does not match lottery length"));
        }
        let mut probs = vec![S::zero(); m];
        for (p, c) in self.probs.iter().zip(sub) {
            if c.0 >= m {
                return Err(Error::UnknownCandidate(c.to_string()));
            }
            probs[c.0] = p.clone();
        }
        Ok(Lottery { probs })
    }

    /// `mu·a + (1 − mu)·b`.
    pub fn mix(a: &Self, mu: &S, b: &Self) -> Result<Self> {
        if a.probs.len() != b.probs.len() {
            return Err(Error::pre("mixing lotteries of different lengths"));
        }
        let nu = S::one() - mu.clone();
        let probs = a
            .probs
            .iter()
            .zip(&b.probs)
            .map(|(x, y)| mu.clone() * x.clone() + nu.clone() * y.clone())
            .collect();
        Ok(Lottery { probs })
    }

    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    pub fn prob(&self, c: CandidateId) -> &S {
        &self.probs[c.0]
    }

    pub fn support(&self) -> CandidateSet {
        (0..self.m())
            .filter(|&i| !self.probs[i].is_zero())
            .map(CandidateId)
            .collect()
    }

    pub fn mass(&self, set: CandidateSet) -> S {
        set.iter().fold(S::zero(), |a, c| a + self.probs[c.0].clone())
    }

    pub fn to_f64(&self) -> Lottery<f64> {
        Lottery {
            probs: self.probs.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.probs.iter().map(|x| Value::String(x.render())).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Recorded with every result. The solvers start from the uniform
    /// distribution and never consume randomness.
    pub seed: u64,
}

impl SolverConfig {
    /// `1e-6` for `k = 1` (solved exactly anyway), `1e-4` otherwise.
    pub fn default_for(k: usize) -> Self {
        SolverConfig {
            epsilon: if k <= 1 { 1e-6 } else { 1e-4 },
            max_iters: 100_000,
            seed: 0,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::pre("solver epsilon must be positive"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({"epsilon": self.epsilon, "max_iters": self.max_iters, "seed": self.seed})
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::default_for(2)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityCertificate {
    pub k: usize,
    pub worst_response: CandidateId,
    /// `min_c Pr[D^k ≻ c]`.
    pub worst_value: f64,
    pub target_value: f64,
    pub epsilon: f64,
    pub certified: bool,
    pub iterations: usize,
}

impl StabilityCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "worst_response": self.worst_response.0,
            "worst_value": self.worst_value,
            "target_value": self.target_value,
            "epsilon": self.epsilon,
            "certified": self.certified,
            "iterations": self.iterations,
        })
    }
}

fn check_k(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::pre("k must be at least 1"));
    }
    Ok(())
}

fn check_len<S: Scalar>(p: &Profile<S>, d: &Lottery<S>) -> Result<()> {
    if d.m() != p.m() {
        return Err(Error::pre(format!(
            "lottery has {} entries for {} candidates",
            d.m(),
            p.m()
        )));
    }
    Ok(())
}

/// `Σ_{j=0}^{k} a^j b^{k-j} / (k+1)`.
fn lose_poly<S: Scalar>(a: &S, b: &S, k: usize) -> S {
    let mut total = S::zero();
    let mut apow = S::one();
    for j in 0..=k {
        let mut term = apow.clone();
        for _ in 0..k - j {
            term *= b.clone();
        }
        total += term;
        apow *= a.clone();
    }
    total / S::from_usize(k + 1).expect("small integer")
}

/// `Pr_v[D^k ≻_v {c}]` in closed form.
pub fn beat_probability<S: Scalar>(p: &Profile<S>, d: &Lottery<S>, k: usize, c: CandidateId) -> Result<S> {
    check_k(k)?;
    check_len(p, d)?;
    if c.0 >= p.m() {
        return Err(Error::UnknownCandidate(c.to_string()));
    }
    let mut lose = S::zero();
    for b in p.blocks() {
        let order = b.ranking.order();
        let at = b.ranking.position(c);
        let below = order[at + 1..]
            .iter()
            .fold(S::zero(), |acc, x| acc + d.prob(*x).clone());
        let upto = below.clone() + d.prob(c).clone();
        lose += b.weight.clone() * lose_poly(&upto, &below, k);
    }
    Ok(S::one() - lose)
}

/// `Pr_v[D^k ≻_v D']`, linear in the opponent distribution.
pub fn beat_lottery<S: Scalar>(p: &Profile<S>, d: &Lottery<S>, k: usize, opponent: &Lottery<S>) -> Result<S> {
    check_len(p, opponent)?;
    let mut total = S::zero();
    for c in p.candidates() {
        let w = opponent.prob(c);
        if !w.is_zero() {
            total += w.clone() * beat_probability(p, d, k, c)?;
        }
    }
    Ok(total)
}

fn multisets(items: &[CandidateId], k: usize) -> Vec<Vec<usize>> {
    // count vectors over `items` summing to k
    fn rec(i: usize, left: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == n {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for take in 0..=left {
            cur.push(take);
            rec(i + 1, left - take, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if !items.is_empty() {
        rec(0, k, items.len(), &mut Vec::new(), &mut out);
    }
    out
}

/// [`beat_probability`] computed from k'-tournament information only:
/// enumerate the multisets `U` of `k` draws and charge
/// `top_share(supp(U) ∪ {c}, c) / (n_c(U) + 1)` to the loss.
///
/// Needs summary order at least `min(k+1, m)` (every set `supp(U) ∪ {c}`
/// must be summarised).
pub fn beat_probability_from_summary<S: Scalar>(
    ks: &KTournamentSummary<S>,
    d: &Lottery<S>,
    k: usize,
    c: CandidateId,
) -> Result<S> {
    check_k(k)?;
    let m = ks.m();
    if d.m() != m {
        return Err(Error::pre(format!("lottery has {} entries for {m} candidates", d.m())));
    }
    if c.0 >= m {
        return Err(Error::UnknownCandidate(c.to_string()));
    }
    if ks.k() < (k + 1).min(m) {
        return Err(Error::pre(format!(
            "summary order {} too small for k = {k}; need {}",
            ks.k(),
            (k + 1).min(m)
        )));
    }
    let support: Vec<CandidateId> = d.support().iter().collect();
    let mut factorial = vec![1u128; k + 1];
    for i in 1..=k {
        factorial[i] = factorial[i - 1] * i as u128;
    }
    let mut lose = S::zero();
    for counts in multisets(&support, k) {
        let mut weight = S::from_u128(counts.iter().fold(factorial[k], |acc, &n| acc / factorial[n]))
            .expect("multinomial fits");
        let mut set = CandidateSet::singleton(c);
        let mut copies = 0;
        for (&n, &x) in counts.iter().zip(&support) {
            for _ in 0..n {
                weight *= d.prob(x).clone();
            }
            if n > 0 {
                set.insert(x);
            }
            if x == c {
                copies = n;
            }
        }
        let top = ks
            .top_share(set, c)
            .ok_or_else(|| Error::Internal(format!("summary lacks {set:?}")))?;
        lose += weight * top.clone() / S::from_usize(copies + 1).expect("small integer");
    }
    Ok(S::one() - lose)
}

/// Simulates the tie-breaking process directly: returns the sample mean and
/// its standard error.
pub fn simulate_beat_probability(
    p: &Profile<f64>,
    d: &Lottery<f64>,
    k: usize,
    c: CandidateId,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_k(k)?;
    check_len(p, d)?;
    if samples == 0 {
        return Err(Error::pre("need at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let voters = WeightedIndex::new(p.blocks().iter().map(|b| b.weight))
        .map_err(|e| Error::pre(format!("voter weights: {e}")))?;
    let draws =
        WeightedIndex::new(d.probs()).map_err(|e| Error::pre(format!("lottery weights: {e}")))?;
    let mut wins = 0usize;
    for _ in 0..samples {
        let ranking = &p.blocks()[voters.sample(&mut rng)].ranking;
        let mut best = ranking.position(c);
        let mut copies = 0usize;
        for _ in 0..k {
            let pos = ranking.position(CandidateId(draws.sample(&mut rng)));
            if pos < best {
                best = pos;
                copies = 1;
            } else if pos == best {
                copies += 1;
            }
        }
        let opponent_copy = best == ranking.position(c);
        let won = if !opponent_copy {
            true
        } else {
            // uniform attachments: the opponent's copy is highest w.p. 1/(n+1)
            rng.gen_range(0..copies + 1) != copies
        };
        if won {
            wins += 1;
        }
    }
    let mean = wins as f64 / samples as f64;
    let se = (mean * (1.0 - mean) / samples as f64).sqrt();
    Ok((mean, se))
}

/// Dense evaluation of all `Pr[D^k ≻ c]` and of the gradient of
/// `Σ_c y_c Pr[D^k ≻ c]` with respect to `D`.
struct GameOracle {
    m: usize,
    k: usize,
    weights: Vec<f64>,
    orders: Vec<Vec<usize>>,
}

impl GameOracle {
    fn new(p: &Profile<f64>, k: usize) -> Self {
        GameOracle {
            m: p.m(),
            k,
            weights: p.blocks().iter().map(|b| b.weight).collect(),
            orders: p
                .blocks()
                .iter()
                .map(|b| b.ranking.order().iter().map(|c| c.0).collect())
                .collect(),
        }
    }

    /// `(H, ∂H/∂a, ∂H/∂b)` for `H(a,b) = Σ_j a^j b^{k-j} / (k+1)`.
    fn lose_terms(&self, a: f64, b: f64) -> (f64, f64, f64) {
        let k = self.k;
        let mut apow = vec![1.0; k + 1];
        let mut bpow = vec![1.0; k + 1];
        for j in 1..=k {
            apow[j] = apow[j - 1] * a;
            bpow[j] = bpow[j - 1] * b;
        }
        let (mut h, mut da, mut db) = (0.0, 0.0, 0.0);
        for j in 0..=k {
            h += apow[j] * bpow[k - j];
            if j >= 1 {
                da += j as f64 * apow[j - 1] * bpow[k - j];
            }
            if j < k {
                db += (k - j) as f64 * apow[j] * bpow[k - j - 1];
            }
        }
        let n = (k + 1) as f64;
        (h / n, da / n, db / n)
    }

    /// Returns `beat[c]`; when `y` is given also fills `grad[x]` with
    /// `∂/∂D(x) Σ_c y_c beat[c]`.
    fn eval(&self, d: &[f64], y: Option<&[f64]>, grad: &mut [f64]) -> Vec<f64> {
        let m = self.m;
        let mut lose = vec![0.0; m];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut suffix = vec![0.0; m + 1];
        let mut coef_a = vec![0.0; m];
        let mut coef_b = vec![0.0; m];
        for (w, order) in self.weights.iter().zip(&self.orders) {
            for i in (0..m).rev() {
                suffix[i] = suffix[i + 1] + d[order[i]];
            }
            for i in 0..m {
                let c = order[i];
                let (h, da, db) = self.lose_terms(suffix[i], suffix[i + 1]);
                lose[c] += w * h;
                if let Some(y) = y {
                    coef_a[i] = y[c] * w * da;
                    coef_b[i] = y[c] * w * db;
                }
            }
            if y.is_some() {
                // x at position j sits weakly below every c at i ≤ j, strictly below i < j
                let mut acc_a = 0.0;
                let mut acc_b = 0.0;
                for j in 0..m {
                    acc_a += coef_a[j];
                    grad[order[j]] -= acc_a + acc_b;
                    acc_b += coef_b[j];
                }
            }
        }
        lose.into_iter().map(|l| 1.0 - l).collect()
    }

    fn worst(&self, d: &[f64]) -> (usize, f64) {
        let beats = self.eval(d, None, &mut vec![0.0; self.m]);
        let mut best = (0, beats[0]);
        for (c, &v) in beats.iter().enumerate().skip(1) {
            if v < best.1 {
                best = (c, v);
            }
        }
        best
    }
}

fn entropic_step(x: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
    let shift = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = x
        .iter()
        .zip(g)
        .map(|(xi, gi)| xi * (eta * (gi - shift)).exp())
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    out
}

/// The stable 1-lottery (maximal lottery), solved exactly as a matrix game.
///
/// With `M[a][c] = s_{a≻c}` and `M[a][a] = ½`, the column player's LP
/// `max Σx s.t. M x ≤ 1` has value `1/v = 2`; its duals, normalised, are
/// an optimal row strategy.
pub fn maximal_lottery<S: Scalar>(p: &Profile<S>) -> Result<Lottery<S>> {
    let m = p.m();
    let t = p.tournament_matrix();
    let mut lp = LinearProgram::new(m);
    for c in 0..m {
        lp.add_objective(c, S::one());
    }
    for a in 0..m {
        let row = (0..m)
            .map(|c| {
                let v = if a == c { S::half() } else { t.get(CandidateId(a), CandidateId(c)).clone() };
                (c, v)
            })
            .filter(|(_, v)| !v.is_zero())
            .collect();
        lp.add_le(row, S::one())?;
    }
    match lp.solve()? {
        LpOutcome::Unbounded => Err(Error::Internal("matrix game LP unbounded".into())),
        LpOutcome::Optimal(sol) => {
            let total = sol.dual.iter().fold(S::zero(), |a, x| a + x.clone());
            let probs = sol.dual.into_iter().map(|x| S::max_of(x / total.clone(), S::zero())).collect();
            Lottery::new(probs)
        }
    }
}

fn certificate(oracle: &GameOracle, d: &[f64], k: usize, cfg: &SolverConfig, iterations: usize) -> StabilityCertificate {
    let (c, v) = oracle.worst(d);
    let target = k as f64 / (k + 1) as f64;
    StabilityCertificate {
        k,
        worst_response: CandidateId(c),
        worst_value: v,
        target_value: target,
        epsilon: cfg.epsilon,
        certified: v >= target - cfg.epsilon,
        iterations,
    }
}

/// Drops probabilities below `1e-12` if the certificate survives.
fn tidy(oracle: &GameOracle, d: Vec<f64>, k: usize, cfg: &SolverConfig, iters: usize) -> (Vec<f64>, StabilityCertificate) {
    let cert = certificate(oracle, &d, k, cfg, iters);
    let mut pruned: Vec<f64> = d.iter().map(|&x| if x < 1e-12 { 0.0 } else { x }).collect();
    let total: f64 = pruned.iter().sum();
    pruned.iter_mut().for_each(|x| *x /= total);
    let tidy_cert = certificate(oracle, &pruned, k, cfg, iters);
    if tidy_cert.certified || !cert.certified {
        (pruned, tidy_cert)
    } else {
        (d, cert)
    }
}

/// A stable k-lottery: `min_c Pr[D^k ≻ c] ≥ k/(k+1) − ε`.
///
/// `k = 1` is solved exactly ([`maximal_lottery`]). For `k ≥ 2` the solver
/// runs entropic mirror-prox on the saddle function
/// `Σ_c y_c Pr[D^k ≻ c]` (concave in `D`, linear in `y`) from uniform
/// starting points, checking the certificate on the current and averaged
/// iterates. The result is deterministic; if `max_iters` runs out the best
/// iterate is returned with `certified = false`.
pub fn solve_stable<S: Scalar>(
    p: &Profile<S>,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(Lottery<f64>, StabilityCertificate)> {
    check_k(k)?;
    cfg.check()?;
    let pf = p.to_f64();
    let oracle = GameOracle::new(&pf, k);
    let m = p.m();
    if k == 1 {
        let d = maximal_lottery(p)?.to_f64();
        let (probs, cert) = tidy(&oracle, d.probs, k, cfg, 0);
        return Ok((Lottery::new(probs)?, cert));
    }
    let target = k as f64 / (k + 1) as f64;
    let eta = 1.0 / k as f64;
    let mut d = vec![1.0 / m as f64; m];
    let mut y = d.clone();
    let mut avg = vec![0.0; m];
    let mut best = (d.clone(), oracle.worst(&d).1);
    let mut grad = vec![0.0; m];
    for it in 1..=cfg.max_iters {
        let beats = oracle.eval(&d, Some(&y), &mut grad);
        let d_half = entropic_step(&d, &grad, eta);
        let y_half = entropic_step(&y, &beats.iter().map(|b| -b).collect::<Vec<_>>(), eta);
        let beats_half = oracle.eval(&d_half, Some(&y_half), &mut grad);
        d = entropic_step(&d, &grad, eta);
        y = entropic_step(&y, &beats_half.iter().map(|b| -b).collect::<Vec<_>>(), eta);
        for (a, x) in avg.iter_mut().zip(&d_half) {
            *a += x;
        }
        let worst_half = beats_half.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst_half > best.1 {
            best = (d_half.clone(), worst_half);
        }
        if it % 16 == 0 {
            let mean: Vec<f64> = avg.iter().map(|a| a / it as f64).collect();
            let w = oracle.worst(&mean).1;
            if w > best.1 {
                best = (mean, w);
            }
        }
        if best.1 >= target - cfg.epsilon {
            let (probs, cert) = tidy(&oracle, best.0, k, cfg, it);
            return Ok((Lottery::new(probs)?, cert));
        }
    }
    let (probs, cert) = tidy(&oracle, best.0, k, cfg, cfg.max_iters);
    Ok((Lottery::new(probs)?, cert))
}

/// [`solve_stable`] on the reversed profile.
pub fn solve_reverse_stable<S: Scalar>(
    p: &Profile<S>,
    k: usize,
    cfg: &SolverConfig,
) -> Result<(Lottery<f64>, StabilityCertificate)> {
    solve_stable(&p.reverse(), k, cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefensiveGap {
    /// Best value found of `max_A Pr[A^k ≻ D] − k/(k+1)`; never negative
    /// since `A = D` attains zero.
    pub gap: f64,
    /// Frank–Wolfe upper bound on the same quantity.
    pub upper: f64,
    pub best_response: Lottery<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl DefensiveGap {
    pub fn to_json(&self) -> Value {
        json!({
            "gap": self.gap,
            "upper": self.upper,
            "best_response": self.best_response.probs(),
            "converged": self.converged,
            "iterations": self.iterations,
        })
    }
}

/// How far any distribution `A` gets above `k/(k+1)` against `D`:
/// concave maximisation of `A ↦ Pr[A^k ≻ D]` by entropic gradient ascent,
/// stopped once the Frank–Wolfe duality gap is below `ε/2`.
pub fn defensive_gap<S: Scalar>(
    p: &Profile<S>,
    d: &Lottery<f64>,
    k: usize,
    cfg: &SolverConfig,
) -> Result<DefensiveGap> {
    check_k(k)?;
    cfg.check()?;
    let pf = p.to_f64();
    check_len(&pf, d)?;
    let oracle = GameOracle::new(&pf, k);
    let m = p.m();
    let target = k as f64 / (k + 1) as f64;
    let value = |beats: &[f64]| beats.iter().zip(d.probs()).map(|(b, w)| b * w).sum::<f64>();
    let mut grad = vec![0.0; m];
    let mut best = (d.probs().to_vec(), value(&oracle.eval(d.probs(), None, &mut grad)));
    let mut upper = f64::INFINITY;
    let mut a: Vec<f64> = d.probs().iter().map(|x| 0.5 * x + 0.5 / m as f64).collect();
    let eta = 1.0 / k as f64;
    let mut iterations = 0;
    for it in 1..=cfg.max_iters {
        iterations = it;
        let beats = oracle.eval(&a, Some(d.probs()), &mut grad);
        let v = value(&beats);
        if v > best.1 {
            best = (a.clone(), v);
        }
        let lin = grad.iter().zip(&a).map(|(g, x)| g * x).sum::<f64>();
        let top = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        upper = upper.min(v + top - lin);
        if upper - best.1 <= cfg.epsilon / 2.0 {
            break;
        }
        a = entropic_step(&a, &grad, eta);
    }
    Ok(DefensiveGap {
        gap: (best.1 - target).max(0.0),
        upper: upper - target,
        best_response: Lottery::new(best.0)?,
        converged: upper - best.1 <= cfg.epsilon / 2.0,
        iterations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationEntry {
    pub i: CandidateId,
    pub j: CandidateSet,
    pub s_i_over_j: f64,
    pub p_j: f64,
    /// `p_J^{-k}/(k+1)` (infinite when `p_J = 0`).
    pub bound: f64,
    pub holds: bool,
    /// `(1 − s_{i≻J}) − p_J`, reported only.
    pub representation_slack: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationReport {
    pub k: usize,
    pub epsilon: f64,
    pub entries: Vec<RepresentationEntry>,
    pub all_hold: bool,
}

impl RepresentationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "k": self.k,
            "epsilon": self.epsilon,
            "all_hold": self.all_hold,
            "entries": self.entries.iter().map(|e| json!({
                "i": e.i.0,
                "J": e.j.iter().map(|c| c.0).collect::<Vec<_>>(),
                "s": e.s_i_over_j,
                "p_J": e.p_j,
                "bound": if e.bound.is_finite() { json!(e.bound) } else { json!("inf") },
                "holds": e.holds,
                "representation_slack": e.representation_slack,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Checks `s_{i≻J} ≤ p_J^{-k}/(k+1) + ε` for every `J` with
/// `1 ≤ |J| ≤ max_j` and every `i ∉ J`.
pub fn representation_check<S: Scalar>(
    p: &Profile<S>,
    d: &Lottery<f64>,
    k: usize,
    max_j: usize,
    epsilon: f64,
) -> Result<RepresentationReport> {
    check_k(k)?;
    check_len(&p.to_f64(), d)?;
    let m = p.m();
    let mut entries = Vec::new();
    for size in 1..=max_j.min(m.saturating_sub(1)) {
        for j in subsets_of_size(m, size) {
            let p_j = d.mass(j);
            let bound = if p_j > 0.0 {
                p_j.powi(-(k as i32)) / (k + 1) as f64
            } else {
                f64::INFINITY
            };
            for i in j.complement(m).iter() {
                let s = p
                    .frac_group_unchecked(CandidateSet::singleton(i), j)
                    .to_f64_lossy();
                entries.push(RepresentationEntry {
                    i,
                    j,
                    s_i_over_j: s,
                    p_j,
                    bound,
                    holds: s <= bound + epsilon,
                    representation_slack: (1.0 - s) - p_j,
                });
            }
        }
    }
    let all_hold = entries.iter().all(|e| e.holds);
    Ok(RepresentationReport {
        k,
        epsilon,
        entries,
        all_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::fixtures::*;
    use crate::scalar::Rational;

    fn c(i: usize) -> CandidateId {
        CandidateId(i)
    }

    fn lot(v: &[Rational]) -> Lottery<Rational> {
        Lottery::new(v.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let p = sixty_forty();
        let d = lot(&[q(1, 2), q(1, 2)]);
        assert_eq!(beat_probability(&p, &d, 1, c(1)).unwrap(), q(11, 20));
        let single = unanimous(&[0, 1]);
        assert_eq!(beat_probability(&single, &d, 2, c(1)).unwrap(), q(11, 12));
        assert!(beat_probability(&p, &d, 0, c(1)).is_err());
    }

    #[test]
    fn zero_mass_opponent_reduces_to_power() {
        // D = δ_b against a: the a>b voters always prefer a
        let p = sixty_forty();
        let d = lot(&[q(0, 1), q(1, 1)]);
        assert_eq!(beat_probability(&p, &d, 3, c(0)).unwrap(), q(2, 5));
    }

    #[test]
    fn self_play_is_exact() {
        let p = three_cycle();
        let d = lot(&[q(1, 2), q(1, 3), q(1, 6)]);
        for k in 1..=4 {
            let v = beat_lottery(&p, &d, k, &d).unwrap();
            assert_eq!(v, q(k as i64, k as i64 + 1));
        }
    }

    #[test]
    fn summary_route_agrees() {
        let p = three_cycle();
        let d = lot(&[q(1, 3), q(1, 3), q(1, 3)]);
        let s3 = p.summarize(3).unwrap();
        for k in 1..=3 {
            for cand in p.candidates() {
                assert_eq!(
                    beat_probability_from_summary(&s3, &d, k, cand).unwrap(),
                    beat_probability(&p, &d, k, cand).unwrap()
                );
            }
        }
        let s2 = p.summarize(2).unwrap();
        assert!(beat_probability_from_summary(&s2, &d, 2, c(0)).is_err());
        let pt = Lottery::point(3, c(2));
        assert_eq!(beat_probability_from_summary(&s2, &pt, 1, c(2)).unwrap(), q(1, 2));
    }

    #[test]
    fn maximal_lottery_examples() {
        assert_eq!(maximal_lottery(&sixty_forty()).unwrap(), Lottery::point(2, c(0)));
        assert_eq!(maximal_lottery(&three_cycle()).unwrap(), Lottery::uniform(3));
    }

    #[test]
    fn stable_k1_examples() {
        let cfg = SolverConfig::default_for(1);
        let (d, cert) = solve_stable(&sixty_forty(), 1, &cfg).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0]);
        assert!(cert.certified);
        assert_eq!(cert.worst_value, 0.5);
        let (d, _) = solve_reverse_stable(&sixty_forty(), 1, &cfg).unwrap();
        assert_eq!(d.probs(), &[0.0, 1.0]);
        let (d, _) = solve_reverse_stable(&unanimous(&[0, 1, 2]), 1, &cfg).unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn stable_k2_on_cycle_is_uniform() {
        let cfg = SolverConfig::default_for(2);
        let (d, cert) = solve_stable(&three_cycle(), 2, &cfg).unwrap();
        assert!(cert.certified, "{cert:?}");
        for x in d.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-3);
        }
        let (r, _) = solve_reverse_stable(&three_cycle(), 2, &cfg).unwrap();
        for x in r.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-3);
        }
    }

    #[test]
    fn stable_k3_certifies_on_sixty_forty() {
        let cfg = SolverConfig::default_for(3);
        let (_, cert) = solve_stable(&sixty_forty(), 3, &cfg).unwrap();
        assert!(cert.certified, "{cert:?}");
    }

    #[test]
    fn defensive_gap_examples() {
        let cfg = SolverConfig::default_for(1);
        let p = sixty_forty();
        let a = defensive_gap(&p, &Lottery::point(2, c(0)), 1, &cfg).unwrap();
        assert!(a.gap.abs() < 1e-6 && a.converged);
        let b = defensive_gap(&p, &Lottery::point(2, c(1)), 1, &cfg).unwrap();
        assert!((b.gap - 0.1).abs() < 1e-6, "{b:?}");
        let cyc = defensive_gap(&three_cycle(), &Lottery::uniform(3), 2, &SolverConfig::default_for(2)).unwrap();
        assert!(cyc.gap < 1e-4);
    }

    #[test]
    fn representation_examples() {
        let p = three_cycle();
        let r = representation_check(&p, &Lottery::uniform(3), 2, 2, 1e-4).unwrap();
        assert!(r.all_hold);
        let ab = r
            .entries
            .iter()
            .find(|e| e.i == c(0) && e.j == CandidateSet::singleton(c(1)))
            .unwrap();
        assert!((ab.s_i_over_j - 2.0 / 3.0).abs() < 1e-12);
        assert!((ab.bound - 3.0).abs() < 1e-12);
        let abc = r
            .entries
            .iter()
            .find(|e| e.i == c(0) && e.j == CandidateSet::from_bits(0b110))
            .unwrap();
        assert!((abc.bound - 0.75).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let p = three_cycle().to_f64();
        let d = Lottery::new(vec![0.5, 0.3, 0.2]).unwrap();
        let exact = beat_probability(&p, &d, 2, c(1)).unwrap();
        let (mean, se) = simulate_beat_probability(&p, &d, 2, c(1), 200_000, 7).unwrap();
        assert!((mean - exact).abs() <= 3.0 * se + 1e-12, "{mean} vs {exact}");
    }

    #[test]
    fn lottery_validation() {
        assert!(Lottery::new(vec![q(1, 2), q(1, 3)]).is_err());
        assert!(Lottery::new(vec![q(3, 2), q(-1, 2)]).is_err());
        assert!(Lottery::<f64>::new(vec![]).is_err());
        let l = Lottery::new(vec![0.25, 0.75]).unwrap();
        let e = l.embed(&[c(2), c(0)], 3).unwrap();
        assert_eq!(e.probs(), &[0.75, 0.0, 0.25]);
    }
}
