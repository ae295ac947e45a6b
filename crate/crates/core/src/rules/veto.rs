//! Lottery-based rules on top of quasi-kernel pruning.

use serde_json::{json, Value};

use super::kernel::quasi_kernel_prune;
use super::check_theta;
use crate::error::{Error, Result};
use crate::lottery::{solve_reverse_stable, solve_stable, Lottery, SolverConfig, StabilityCertificate};
use crate::profile::{CandidateId, CandidateSet, Profile};
use crate::scalar::Scalar;

/// Scores at or below this are treated as exhausted.
const SCORE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct VetoEvent {
    pub time: f64,
    pub eliminated: CandidateSet,
    /// Reverse stable lottery applied since the previous event; `None` for
    /// the zero-length event removing candidates that start at score zero.
    pub rates: Option<Lottery<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VetoTrace {
    pub kernel: CandidateSet,
    pub initial_scores: Lottery<f64>,
    pub events: Vec<VetoEvent>,
    pub winner: CandidateId,
    /// Every stable and reverse stable lottery solve was certified.
    pub certified: bool,
}

impl VetoTrace {
    /// `∫ Δ_t(c) dt` over the whole run.
    pub fn integral(&self, c: CandidateId) -> f64 {
        let mut prev = 0.0;
        let mut total = 0.0;
        for e in &self.events {
            if let Some(r) = &e.rates {
                total += (e.time - prev) * r.prob(c);
            }
            prev = e.time;
        }
        total
    }

    pub fn total_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.time)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kernel": self.kernel,
            "initial_scores": self.initial_scores.probs(),
            "winner": self.winner.0,
            "certified": self.certified,
            "events": self.events.iter().map(|e| json!({
                "time": e.time,
                "eliminated": e.eliminated,
                "rates": e.rates.as_ref().map(|r| r.probs().to_vec()),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Stable (or reverse stable) k-lottery of the sub-profile on `set`, lifted
/// back to all candidates.
fn lottery_on<S: Scalar>(
    p: &Profile<S>,
    set: CandidateSet,
    k: usize,
    cfg: &SolverConfig,
    reverse: bool,
) -> Result<(Lottery<f64>, StabilityCertificate)> {
    let members: Vec<CandidateId> = set.iter().collect();
    let sub = p.restrict(&members)?;
    let (d, cert) = if reverse {
        solve_reverse_stable(&sub, k, cfg)?
    } else {
        solve_stable(&sub, k, cfg)?
    };
    Ok((d.embed(&members, p.m())?, cert))
}

/// Simultaneous Lottery Veto, simulated event by event.
///
/// Scores start at a stable k-lottery of the pruned candidates. Between
/// events every surviving candidate's score falls at the rate given by the
/// reverse stable k-lottery of the survivors; an event happens when some
/// scores reach zero, and the rates are recomputed. The last candidate to
/// lose its score wins (lowest index among simultaneous last losers).
pub fn simultaneous_lottery_veto<S: Scalar>(
    p: &Profile<S>,
    k: usize,
    theta: &S,
    cfg: &SolverConfig,
) -> Result<(CandidateId, VetoTrace)> {
    let m = p.m();
    let kernel = quasi_kernel_prune(p, theta)?;
    let (initial, cert) = lottery_on(p, kernel, k, cfg, false)?;
    let mut certified = cert.certified;
    let mut score = initial.probs().to_vec();
    let mut alive: CandidateSet = kernel.iter().filter(|c| score[c.0] > SCORE_FLOOR).collect();
    let mut events = Vec::new();
    let dead_at_start = kernel.difference(alive);
    if !dead_at_start.is_empty() {
        for c in dead_at_start.iter() {
            score[c.0] = 0.0;
        }
        events.push(VetoEvent {
            time: 0.0,
            eliminated: dead_at_start,
            rates: None,
        });
    }
    let mut time = 0.0;
    let mut last = dead_at_start;
    while !alive.is_empty() {
        let (rates, cert) = lottery_on(p, alive, k, cfg, true)?;
        certified &= cert.certified;
        let dt = alive
            .iter()
            .filter(|c| *rates.prob(*c) > 0.0)
            .map(|c| score[c.0] / rates.prob(c))
            .fold(f64::INFINITY, f64::min);
        if !dt.is_finite() {
            return Err(Error::Internal("reverse lottery has no mass on survivors".into()));
        }
        time += dt;
        let mut gone = CandidateSet::empty();
        for c in alive.iter() {
            score[c.0] -= dt * rates.prob(c);
            if score[c.0] <= SCORE_FLOOR {
                score[c.0] = 0.0;
                gone.insert(c);
            }
        }
        if gone.is_empty() {
            return Err(Error::Internal("veto step eliminated nobody".into()));
        }
        alive = alive.difference(gone);
        events.push(VetoEvent {
            time,
            eliminated: gone,
            rates: Some(rates),
        });
        last = gone;
    }
    let winner = last
        .first()
        .ok_or_else(|| Error::Internal(format!("no candidate survived pruning among {m}")))?;
    Ok((
        winner,
        VetoTrace {
            kernel,
            initial_scores: initial,
            events,
            winner,
            certified,
        },
    ))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoubleLottery {
    pub lottery: Lottery<f64>,
    pub kernel: CandidateSet,
    pub stable_one: (Lottery<f64>, StabilityCertificate),
    pub stable_k: (Lottery<f64>, StabilityCertificate),
}

impl DoubleLottery {
    pub fn certified(&self) -> bool {
        self.stable_one.1.certified && self.stable_k.1.certified
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lottery": self.lottery.probs(),
            "kernel": self.kernel,
            "stable_one": {"probs": self.stable_one.0.probs(), "certificate": self.stable_one.1.to_json()},
            "stable_k": {"probs": self.stable_k.0.probs(), "certificate": self.stable_k.1.to_json()},
            "certified": self.certified(),
        })
    }
}

/// Pruned Double Lotteries: `μ·(stable 1-lottery) + (1 − μ)·(stable
/// k-lottery on the pruned candidates)`.
pub fn pruned_double_lotteries<S: Scalar>(
    p: &Profile<S>,
    k: usize,
    mu: f64,
    theta: &S,
    cfg: &SolverConfig,
) -> Result<DoubleLottery> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::pre(format!("requires 0 ≤ μ ≤ 1, got μ = {mu}")));
    }
    check_theta(theta)?;
    let first = solve_stable(p, 1, &SolverConfig {
        epsilon: cfg.epsilon.min(SolverConfig::default_for(1).epsilon),
        ..cfg.clone()
    })?;
    let kernel = quasi_kernel_prune(p, theta)?;
    let second = lottery_on(p, kernel, k, cfg, false)?;
    let lottery = if mu == 1.0 {
        first.0.clone()
    } else {
        Lottery::new(Lottery::mix(&first.0, &mu, &second.0)?.probs().to_vec())?
    };
    Ok(DoubleLottery {
        lottery,
        kernel,
        stable_one: first,
        stable_k: second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::fixtures::*;

    fn c(i: usize) -> CandidateId {
        CandidateId(i)
    }

    #[test]
    fn veto_on_sixty_forty() {
        let cfg = SolverConfig::default_for(1);
        let (w, trace) = simultaneous_lottery_veto(&sixty_forty(), 1, &q(99, 100), &cfg).unwrap();
        assert_eq!(w, c(0));
        assert_eq!(trace.events[0].time, 0.0);
        assert_eq!(trace.events[0].eliminated, CandidateSet::singleton(c(1)));
        assert!((trace.total_time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn veto_on_cycle() {
        let cfg = SolverConfig::default_for(1);
        let (w, trace) = simultaneous_lottery_veto(&three_cycle(), 1, &q(99, 100), &cfg).unwrap();
        assert_eq!(w, c(0));
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.events[0].eliminated, CandidateSet::full(3));
        for x in 0..3 {
            assert!((trace.integral(c(x)) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn double_lottery_examples() {
        let cfg = SolverConfig::default_for(2);
        let sf = pruned_double_lotteries(&sixty_forty(), 2, 0.9, &q(51, 100), &cfg).unwrap();
        assert_eq!(sf.lottery.probs(), &[1.0, 0.0]);
        let one = pruned_double_lotteries(&three_cycle(), 2, 1.0, &q(7, 10), &cfg).unwrap();
        assert_eq!(one.lottery, one.stable_one.0);
        let cyc = pruned_double_lotteries(&three_cycle(), 2, 0.3, &q(7, 10), &cfg).unwrap();
        for x in cyc.lottery.probs() {
            assert!((x - 1.0 / 3.0).abs() < 1e-3);
        }
        assert!(pruned_double_lotteries(&three_cycle(), 2, 1.5, &q(7, 10), &cfg).is_err());
    }
}
