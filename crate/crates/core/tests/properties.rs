//! Property tests for the invariants the analysis relies on. Profiles are
//! drawn from the crate's seeded generators so every case is reproducible.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kdist::certificates::{cert_local, cert_partition, cert_post_shift, cert_two_step};
use kdist::lottery::{beat_lottery, beat_probability, beat_probability_from_summary, Lottery};
use kdist::metric::{
    biased_metric, consistency_check, distortion_against, expected_social_cost, integral_pair, social_cost,
    BiasedVector, Target,
};
use kdist::random::{random_biased_x, random_distribution, random_profile};
use kdist::rules::{is_quasi_kernel, quasi_kernel_prune, PruningGraph};
use kdist::{CandidateId, ExactProfile, Rational, Scalar};

fn c(i: usize) -> CandidateId {
    CandidateId(i)
}

fn draw(seed: u64, m_lo: usize, m_hi: usize) -> (ChaCha8Rng, ExactProfile) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let m = r.gen_range(m_lo..=m_hi);
    let blocks = r.gen_range(1..=6);
    let p = random_profile(&mut r, m, blocks).expect("valid random profile");
    (r, p)
}

fn lottery(r: &mut ChaCha8Rng, m: usize) -> Lottery<Rational> {
    Lottery::new(random_distribution(r, m)).expect("valid distribution")
}

/// `Pr[best of k draws beats c]` by enumerating all `m^k` draw sequences;
/// a best draw equal to `c` drawn `n` times wins with probability `n/(n+1)`.
fn beat_brute(p: &ExactProfile, d: &Lottery<Rational>, k: usize, target: CandidateId) -> Rational {
    let m = p.m();
    let mut total = Rational::from_integer(0.into());
    let mut idx = vec![0usize; k];
    loop {
        let prob = idx.iter().fold(Rational::from_integer(1.into()), |a, &i| a * d.prob(c(i)).clone());
        if prob != Rational::from_integer(0.into()) {
            for b in p.blocks() {
                let best = idx.iter().map(|&i| b.ranking.position(c(i))).min().expect("k ≥ 1");
                let at = b.ranking.position(target);
                let win = if best < at {
                    Rational::from_integer(1.into())
                } else if best == at {
                    let n = idx.iter().filter(|&&i| i == target.0).count() as i64;
                    Rational::new(n.into(), (n + 1).into())
                } else {
                    Rational::from_integer(0.into())
                };
                total += prob.clone() * b.weight.clone() * win;
            }
        }
        let mut pos = 0;
        while pos < k {
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            return total;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairwise_fractions_are_complementary(seed in any::<u64>()) {
        let (_, p) = draw(seed, 2, 6);
        let one = Rational::from_integer(1.into());
        for a in p.candidates() {
            for b in p.candidates().filter(|&b| b != a) {
                prop_assert_eq!(p.frac_pairwise(a, b).unwrap() + p.frac_pairwise(b, a).unwrap(), one.clone());
            }
        }
    }

    #[test]
    fn cyclic_triples_sum_to_at_most_two(seed in any::<u64>()) {
        let (_, p) = draw(seed, 3, 6);
        let t = p.tournament_matrix();
        prop_assert!(t.triple_violations().is_empty());
        let two = Rational::from_integer(2.into());
        for a in 0..p.m() {
            for b in 0..p.m() {
                for x in 0..p.m() {
                    if a != b && b != x && a != x {
                        let s = t.get(c(a), c(b)).clone() + t.get(c(b), c(x)).clone() + t.get(c(x), c(a)).clone();
                        prop_assert!(s <= two);
                    }
                }
            }
        }
    }

    #[test]
    fn beat_probability_matches_enumeration(seed in any::<u64>(), k in 1usize..=3) {
        let (mut r, p) = draw(seed, 2, 4);
        let d = lottery(&mut r, p.m());
        for x in p.candidates() {
            prop_assert_eq!(beat_probability(&p, &d, k, x).unwrap(), beat_brute(&p, &d, k, x));
        }
    }

    #[test]
    fn summary_reproduces_beat_probability(seed in any::<u64>(), k in 1usize..=3) {
        let (mut r, p) = draw(seed, 2, 5);
        let d = lottery(&mut r, p.m());
        let ks = p.summarize((k + 1).min(p.m())).unwrap();
        for x in p.candidates() {
            prop_assert_eq!(
                beat_probability_from_summary(&ks, &d, k, x).unwrap(),
                beat_probability(&p, &d, k, x).unwrap()
            );
        }
    }

    #[test]
    fn self_play_is_a_fair_game(seed in any::<u64>(), k in 1usize..=3) {
        let (mut r, p) = draw(seed, 2, 5);
        let d = lottery(&mut r, p.m());
        let v = beat_lottery(&p, &d, k, &d).unwrap();
        prop_assert_eq!(v, Rational::new((k as i64).into(), (k as i64 + 1).into()));
    }

    #[test]
    fn biased_metric_is_consistent_and_integrals_match(seed in any::<u64>()) {
        let (mut r, p) = draw(seed, 2, 5);
        let istar = c(r.gen_range(0..p.m()));
        let bv = BiasedVector::new(random_biased_x(&mut r, p.m(), istar), istar).unwrap();
        let mt = biased_metric(&p, &bv).unwrap();
        prop_assert!(consistency_check(&p, &mt).is_empty());
        let probs = random_distribution(&mut r, p.m());
        let (lhs, rhs) = integral_pair(&p, &bv, &Target::Lottery(probs.clone())).unwrap();
        let sc_i = social_cost(&p, &mt, istar);
        prop_assert_eq!(lhs, expected_social_cost(&p, &mt, &probs) - sc_i.clone());
        prop_assert_eq!(rhs, sc_i.clone() + sc_i);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn biased_metric_never_exceeds_the_lp(seed in any::<u64>()) {
        let (mut r, p) = draw(seed, 2, 4);
        let istar = c(r.gen_range(0..p.m()));
        let j = c((istar.0 + 1 + r.gen_range(0..p.m() - 1)) % p.m());
        let bv = BiasedVector::new(random_biased_x(&mut r, p.m(), istar), istar).unwrap();
        let mt = biased_metric(&p, &bv).unwrap();
        let sc_i = social_cost(&p, &mt, istar);
        prop_assume!(sc_i.is_pos());
        let ratio = social_cost(&p, &mt, j) / sc_i;
        let (lp, _) = distortion_against(&p, &Target::Candidate(j), istar).unwrap();
        prop_assert!(lp.finite().is_none_or(|v| ratio.approx_le(v)));
    }

    #[test]
    fn certificates_bound_the_exact_distortion(seed in any::<u64>()) {
        let (mut r, p) = draw(seed, 3, 4);
        let m = p.m();
        let jstar = c(r.gen_range(0..m));
        let istar = c((jstar.0 + 1 + r.gen_range(0..m - 1)) % m);
        let kcand = (0..m).map(c).find(|&k| k != jstar && k != istar).expect("m ≥ 3");
        let (exact, _) = distortion_against(&p, &Target::Candidate(jstar), istar).unwrap();
        let t = p.tournament_matrix();
        let reports = [
            cert_partition(&p, jstar, istar),
            cert_post_shift(&p, jstar, istar, kcand),
            cert_local(&t, jstar, istar),
            cert_two_step(&t, jstar, istar),
        ];
        for rep in reports.into_iter().flatten() {
            if let Some(b) = rep.bound.finite() {
                prop_assert!(exact.le(b), "{}: exact {} > bound {}", rep.method.name(), exact, b);
            }
        }
    }

    #[test]
    fn pruning_returns_a_quasi_kernel(seed in any::<u64>(), num in 51i64..100) {
        let (_, p) = draw(seed, 2, 7);
        let theta = Rational::new(num.into(), 100.into());
        let g = PruningGraph::from_profile(&p, &theta).unwrap();
        let kernel = quasi_kernel_prune(&p, &theta).unwrap();
        prop_assert!(!kernel.is_empty());
        prop_assert!(is_quasi_kernel(&g, kernel));
    }
}
