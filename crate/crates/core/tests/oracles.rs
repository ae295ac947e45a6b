//! Cross-checks against independent computations: closed-form constants,
//! limits, small worked instances and the Monte Carlo simulator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kdist::bench::{cyclic_suite, unblanketed_params};
use kdist::certificates::regular_lambda;
use kdist::lottery::{beat_probability, simulate_beat_probability, Lottery};
use kdist::metric::{distortion_exact, Target};
use kdist::random::{random_distribution, random_profile};
use kdist::rules::ranked_pairs;
use kdist::{CandidateId, Profile, Rational, Scalar};

#[test]
fn unblanketed_parameters_solve_their_defining_equations() {
    let p = unblanketed_params().unwrap();
    let l = p.lambda.to_f64_lossy();
    // λ is the real root of λ³ = λ² + 1
    assert!((l * l * l - l * l - 1.0).abs() < 1e-10);
    assert!((l - 1.465571231877).abs() < 1e-9);
    assert!((p.alpha.to_f64_lossy() - 1.0 / l).abs() < 1e-12);
    assert!((p.beta.to_f64_lossy() - (2.0 - l)).abs() < 1e-12);
    assert!((p.bound.to_f64_lossy() - 3.931142463754).abs() < 1e-9);
    assert!(p.alpha >= p.beta && p.beta > Rational::new(1.into(), 2.into()));
}

#[test]
fn regular_lambda_limits() {
    let theta = 0.6;
    // k = 1 reduces to 1/(2(1−θ))
    assert!((regular_lambda(1, theta).unwrap() - 1.0 / (2.0 * (1.0 - theta))).abs() < 1e-12);
    // large k approaches θ/(1−θ)
    assert!((regular_lambda(100_000, theta).unwrap() - theta / (1.0 - theta)).abs() < 1e-3);
    assert!(regular_lambda(2, 0.5).is_err());
    assert!(regular_lambda(0, 0.6).is_err());
}

#[test]
fn two_candidate_distortion_is_one_plus_twice_the_odds() {
    let p = Profile::<Rational>::from_counts(2, &[(3, vec![0, 1]), (2, vec![1, 0])]).unwrap();
    let d = distortion_exact(&p, &Target::Candidate(CandidateId(0))).unwrap();
    assert_eq!(d.value.render(), "7/3");
    let d = distortion_exact(&p, &Target::Candidate(CandidateId(1))).unwrap();
    assert_eq!(d.value.render(), "4");
    assert_eq!(ranked_pairs(&p).unwrap(), CandidateId(0));
}

#[test]
fn three_cycle_candidates_have_distortion_at_most_three() {
    let p = Profile::<Rational>::from_counts(3, &[(1, vec![0, 1, 2]), (1, vec![1, 2, 0]), (1, vec![2, 0, 1])])
        .unwrap();
    for c in 0..3 {
        let d = distortion_exact(&p, &Target::Candidate(CandidateId(c))).unwrap();
        assert!(d.value.to_f64() <= 3.0 + 1e-12, "candidate {c}: {}", d.value);
    }
}

#[test]
fn cyclic_suite_stays_within_three() {
    let r = cyclic_suite(4, 5, 11).unwrap();
    assert!(r.passed);
    assert!(r.worst <= 3.0 + 1e-9);
    assert!(cyclic_suite(2, 1, 0).is_err());
}

/// The simulator's standardised errors behave like N(0, 1): over many
/// independent instances the mean of z² is near one and 4σ outliers are absent.
#[test]
fn monte_carlo_simulator_is_calibrated() {
    let mut r = ChaCha8Rng::seed_from_u64(42);
    let trials = 200;
    let mut sum_sq = 0.0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let m = r.gen_range(2..=5);
        let blocks = r.gen_range(1..=6);
        let p = random_profile(&mut r, m, blocks).unwrap();
        let d = Lottery::new(random_distribution(&mut r, m)).unwrap();
        let k = r.gen_range(1..=3);
        let x = CandidateId(r.gen_range(0..m));
        let exact = beat_probability(&p, &d, k, x).unwrap().to_f64_lossy();
        let (mean, se) = simulate_beat_probability(&p.to_f64(), &d.to_f64(), k, x, 2000, r.gen()).unwrap();
        let z = if se > 0.0 { (mean - exact) / se } else { 0.0 };
        sum_sq += z * z;
        worst = worst.max(z.abs());
    }
    let mean_sq = sum_sq / trials as f64;
    assert!((0.7..=1.3).contains(&mean_sq), "mean z² = {mean_sq}");
    assert!(worst < 4.5, "max |z| = {worst}");
}
