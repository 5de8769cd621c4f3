//! The canonical one-query tester `N_E`, its amplification, and Monte-Carlo
//! estimates of the rejection rate.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action_space::ActionSpace;
use crate::error::{Error, Result};
use crate::presentation::EquationSet;
use crate::rational::{fmt_ratio, serde_big_ratio};

/// Trials per shard; each shard draws from its own ChaCha stream.
const SHARD: u64 = 1 << 14;

fn check_e(e: &EquationSet) -> Result<()> {
    if e.is_empty() {
        return Err(Error::Argument("the tester needs a nonempty equation set".into()));
    }
    Ok(())
}

/// One query: sample `x ∈ [n]` and `w ∈ E` uniformly; accept iff `w·x = x`.
pub fn canonical_query(phi: &ActionSpace, e: &EquationSet, rng: &mut ChaCha8Rng) -> bool {
    let x = rng.gen_range(0..phi.n());
    let w = &e.words[rng.gen_range(0..e.len())];
    phi.apply_word(w, x) == x
}

/// `N_E` with a fresh generator seeded by `seed`. Returns true on accept.
pub fn canonical_test(phi: &ActionSpace, e: &EquationSet, seed: u64) -> Result<bool> {
    check_e(e)?;
    Ok(canonical_query(phi, e, &mut ChaCha8Rng::seed_from_u64(seed)))
}

/// Smallest `k` with `(1−δ)^k ≤ 1/2`, i.e. `⌈log_{1−δ}(1/2)⌉`.
pub fn amplified_iterations(delta: &BigRational) -> Result<u64> {
    if !delta.is_positive() || *delta > BigRational::one() {
        return Err(Error::Argument(format!("detection probability {} must lie in (0, 1]", fmt_ratio(delta))));
    }
    let q = BigRational::one() - delta;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut k = 1u64;
    let mut pow = q.clone();
    while pow > half {
        pow *= &q;
        k += 1;
        if k > 1 << 24 {
            return Err(Error::Budget("amplification needs more than 2^24 iterations".into()));
        }
    }
    Ok(k)
}

/// `δ(ε) = min(1, ε^degree)`, the detection probability implied by a
/// polynomial stability rate of the given degree with unit constant.
pub fn polynomial_delta(epsilon: &BigRational, degree: u32) -> Result<BigRational> {
    if !epsilon.is_positive() {
        return Err(Error::Argument("epsilon must be positive".into()));
    }
    Ok(num::pow(epsilon.clone(), degree as usize).min(BigRational::one()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmplifiedOutcome {
    pub accept: bool,
    pub iterations: u64,
    /// Queries made before the first rejection (all of them on accept).
    pub queries: u64,
}

/// Repeats `N_E` `⌈log_{1−δ}(1/2)⌉` times; rejects iff some run rejects.
pub fn amplified_test(
    phi: &ActionSpace,
    e: &EquationSet,
    epsilon: &BigRational,
    delta_fn: impl Fn(&BigRational) -> Result<BigRational>,
    seed: u64,
) -> Result<AmplifiedOutcome> {
    check_e(e)?;
    let iterations = amplified_iterations(&delta_fn(epsilon)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..iterations {
        if !canonical_query(phi, e, &mut rng) {
            return Ok(AmplifiedOutcome { accept: false, iterations, queries: i + 1 });
        }
    }
    Ok(AmplifiedOutcome { accept: true, iterations, queries: iterations })
}

/// `Σ_{w∈E} |{x : w·x ≠ x}| / (n·|E|)`, by visiting every pair.
pub fn exhaustive_rejection(phi: &ActionSpace, e: &EquationSet) -> Result<BigRational> {
    check_e(e)?;
    let mut bad: u64 = 0;
    for x in 0..phi.n() {
        for w in &e.words {
            if phi.apply_word(w, x) != x {
                bad += 1;
            }
        }
    }
    Ok(BigRational::new(BigInt::from(bad), BigInt::from(phi.n() as u64 * e.len() as u64)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TesterStats {
    pub trials: u64,
    pub rejections: u64,
    #[serde(with = "serde_big_ratio")]
    pub rate: BigRational,
    /// `L_E / |E|`.
    #[serde(with = "serde_big_ratio")]
    pub expected_rate: BigRational,
    pub queries: u64,
    /// `|rate − expected| ≤ 4·sqrt(p(1−p)/trials)`.
    pub within_band: bool,
}

/// Runs `trials` independent queries in shards of fixed size; shard `i` uses
/// stream `i` of the ChaCha generator seeded by `seed`, so counts do not
/// depend on the thread count.
pub fn estimate_rejection(phi: &ActionSpace, e: &EquationSet, trials: u64, seed: u64) -> Result<TesterStats> {
    check_e(e)?;
    if trials == 0 {
        return Err(Error::Argument("trials must be at least 1".into()));
    }
    let shards = trials.div_ceil(SHARD);
    let rejections: u64 = (0..shards)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s);
            let count = SHARD.min(trials - s * SHARD);
            (0..count).filter(|_| !canonical_query(phi, e, &mut rng)).count() as u64
        })
        .sum();
    let defect = phi.local_defect(e)?.local_defect;
    let expected_rate = BigRational::new(BigInt::from(*defect.numer()), BigInt::from(*defect.denom() * e.len() as i64));
    let n = BigRational::from_integer(BigInt::from(trials));
    let k = BigRational::from_integer(BigInt::from(rejections));
    // (k − Np)² ≤ 16 N p (1 − p)
    let dev = &k - &n * &expected_rate;
    let within_band = &dev * &dev <= BigRational::from_integer(16.into()) * &n * &expected_rate * (BigRational::one() - &expected_rate);
    let within_band = within_band || (expected_rate.is_zero() && rejections == 0);
    Ok(TesterStats {
        trials,
        rejections,
        rate: BigRational::new(BigInt::from(rejections), BigInt::from(trials)),
        expected_rate,
        queries: trials,
        within_band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_space::tests::torus;
    use crate::instance_gen::make_xt;
    use crate::presentation::{build_e, build_presentation, commutator_equations};
    use proptest::prelude::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn iterations() {
        assert_eq!(amplified_iterations(&r(1, 2)).unwrap(), 1);
        assert_eq!(amplified_iterations(&r(1, 8)).unwrap(), 6);
        assert_eq!(amplified_iterations(&r(1, 1)).unwrap(), 1);
        assert!(amplified_iterations(&r(0, 1)).is_err());
        assert!(amplified_iterations(&r(3, 2)).is_err());
    }

    #[test]
    fn xt_rejection_rate() {
        let x = make_xt(2, 3).unwrap();
        let e = build_e(&build_presentation(2, 2, &[]).unwrap());
        assert_eq!(e.len(), 8);
        assert_eq!(exhaustive_rejection(&x, &e).unwrap(), r(3, 8));
        let s = estimate_rejection(&x, &e, 100_000, 11).unwrap();
        assert_eq!(s.expected_rate, r(3, 8));
        assert!(s.within_band, "{s:?}");
        let one = estimate_rejection(&x, &e, 1, 3).unwrap();
        assert!(one.rate.is_zero() || one.rate.is_one());
    }

    #[test]
    fn solutions_always_accept() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = build_e(&p);
        let x = torus(4, 5);
        let s = estimate_rejection(&x, &e, 5000, 1).unwrap();
        assert_eq!(s.rejections, 0);
        assert!(s.within_band);
        let out = amplified_test(&x, &e, &r(1, 10), |eps| polynomial_delta(eps, 2), 9).unwrap();
        assert!(out.accept);
        assert_eq!(out.iterations, 69);
        let single = ActionSpace::trivial(1, 2);
        assert!(canonical_test(&single, &commutator_equations(&p), 0).unwrap());
        assert!(canonical_test(&single, &EquationSet::custom(vec![]).unwrap(), 0).is_err());
    }

    #[test]
    fn shards_are_deterministic() {
        let x = make_xt(2, 4).unwrap();
        let e = build_e(&build_presentation(2, 2, &[]).unwrap());
        let a = estimate_rejection(&x, &e, 40_000, 5).unwrap();
        let b = estimate_rejection(&x, &e, 40_000, 5).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn one_sided(a in 1usize..6, b in 1usize..6, seed in any::<u64>()) {
            let e = build_e(&build_presentation(2, 2, &[]).unwrap());
            let x = torus(a, b);
            prop_assert!(canonical_test(&x, &e, seed).unwrap());
        }
    }
}
