//! Seeded generators for test and sweep instances. Weights are small
//! integers normalised exactly, so every generated profile is rational.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::profile::{default_labels, CandidateId, Profile, Ranking};
use crate::scalar::Rational;

fn random_order<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    order
}

/// `blocks` uniformly random rankings with integer weights in `1..=20`.
pub fn random_profile<R: Rng + ?Sized>(rng: &mut R, m: usize, blocks: usize) -> Result<Profile<Rational>> {
    let raw: Vec<(u64, Vec<usize>)> = (0..blocks.max(1))
        .map(|_| (rng.gen_range(1..=20), random_order(rng, m)))
        .collect();
    Profile::from_counts(m, &raw)
}

/// A profile invariant under the rotation `c ↦ c + 1 (mod m)`: each sampled
/// ranking appears with all `m` of its rotations at equal weight.
pub fn rotation_closed_profile<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    base_blocks: usize,
) -> Result<Profile<Rational>> {
    let mut raw = Vec::new();
    for _ in 0..base_blocks.max(1) {
        let w: u64 = rng.gen_range(1..=20);
        let order = random_order(rng, m);
        for shift in 0..m {
            raw.push((w, order.iter().map(|c| (c + shift) % m).collect()));
        }
    }
    Profile::from_counts(m, &raw)
}

/// A `θ`-regular profile (every pairwise margin at most `θ`, `θ > ½`):
/// `(1 − t)·½(p + reverse(p)) + t·q` with `t = 2θ − 1`, where `p` and `q`
/// are random profiles.
pub fn theta_regular_profile<R: Rng + ?Sized>(
    rng: &mut R,
    m: usize,
    blocks: usize,
    theta: &Rational,
) -> Result<Profile<Rational>> {
    let one = Rational::from_integer(1.into());
    let half = Rational::new(1.into(), 2.into());
    let t = theta.clone() * Rational::from_integer(2.into()) - one.clone();
    let t = if t > one { one.clone() } else { t };
    let p = random_profile(rng, m, blocks)?;
    let q = random_profile(rng, m, blocks)?;
    let mut raw: Vec<(Rational, Ranking)> = Vec::new();
    let sym = (one - t.clone()) * half;
    for b in p.blocks() {
        raw.push((sym.clone() * b.weight.clone(), b.ranking.clone()));
        raw.push((sym.clone() * b.weight.clone(), b.ranking.reversed()));
    }
    for b in q.blocks() {
        raw.push((t.clone() * b.weight.clone(), b.ranking.clone()));
    }
    Profile::new(default_labels(m), raw)
}

/// Vector `x` with `x[istar] = 0` and other entries in `{0, ½, 1, …, 2}`.
pub fn random_biased_x<R: Rng + ?Sized>(rng: &mut R, m: usize, istar: CandidateId) -> Vec<Rational> {
    (0..m)
        .map(|i| {
            if i == istar.0 {
                Rational::from_integer(0.into())
            } else {
                Rational::new(rng.gen_range(0..=4).into(), 2.into())
            }
        })
        .collect()
}

/// A random rational distribution with weights in `0..=6` (not all zero).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<Rational> {
    loop {
        let w: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=6)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return w.into_iter().map(|x| Rational::new(x.into(), total.into())).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_are_deterministic() {
        let a = random_profile(&mut ChaCha8Rng::seed_from_u64(3), 5, 6).unwrap();
        let b = random_profile(&mut ChaCha8Rng::seed_from_u64(3), 5, 6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rotation_closed_margins_are_rotation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 3..=5 {
            let p = rotation_closed_profile(&mut rng, m, 2).unwrap();
            let t = p.tournament_matrix();
            for a in 0..m {
                for b in 0..m {
                    assert_eq!(
                        t.get(CandidateId(a), CandidateId(b)),
                        t.get(CandidateId((a + 1) % m), CandidateId((b + 1) % m))
                    );
                }
            }
        }
    }

    #[test]
    fn theta_regular_bounds_margins() {
        let theta = Rational::new(51.into(), 100.into());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let p = theta_regular_profile(&mut rng, 5, 4, &theta).unwrap();
            let t = p.tournament_matrix();
            assert!(t.rows().iter().flatten().all(|s| *s <= theta));
        }
    }
}
