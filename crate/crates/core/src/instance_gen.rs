//! Instance families: the punctured tori `X_t`, discrete tori, dilutions,
//! seeded perturbations and uniformly random tuples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action_space::ActionSpace;
use crate::error::{Error, Result};

/// Index of `a ∈ (Z/t)^d` in mixed radix, first coordinate fastest.
fn encode(a: &[usize], t: usize) -> usize {
    a.iter().rev().fold(0, |acc, &c| acc * t + c)
}

fn decode(mut i: usize, d: usize, t: usize) -> Vec<usize> {
    (0..d)
        .map(|_| {
            let c = i % t;
            i /= t;
            c
        })
        .collect()
}

/// `X_t`: `(Z/t)^d ∖ {0}` where `ê_i` adds `e_i`, except that `(t−1)e_i`
/// is sent to `e_i` instead of the removed origin. Point `a` gets index
/// `encode(a) − 1`.
pub fn make_xt(d: usize, t: usize) -> Result<ActionSpace> {
    if d == 0 || t < 2 {
        return Err(Error::Argument("X_t needs d >= 1 and t >= 2".into()));
    }
    let size = t.checked_pow(d as u32).filter(|&s| s <= u32::MAX as usize).ok_or(Error::Overflow("X_t size"))?;
    let mut perms = vec![vec![0usize; size - 1]; d];
    for idx in 1..size {
        let a = decode(idx, d, t);
        for (i, perm) in perms.iter_mut().enumerate() {
            let mut b = a.clone();
            b[i] = (b[i] + 1) % t;
            let mut target = encode(&b, t);
            if target == 0 {
                let mut e = vec![0; d];
                e[i] = 1;
                target = encode(&e, t);
            }
            perm[idx - 1] = target - 1;
        }
    }
    ActionSpace::new(perms)
}

/// Index of `a ∈ (Z/t)^d ∖ {0}` in [`make_xt`].
pub fn xt_index(a: &[usize], t: usize) -> usize {
    encode(a, t) - 1
}

/// `Z^m / diag(sides)` with `ê_i` adding `e_i`.
pub fn torus(sides: &[usize]) -> Result<ActionSpace> {
    if sides.is_empty() || sides.contains(&0) {
        return Err(Error::Argument("torus sides must be positive".into()));
    }
    let n = sides.iter().try_fold(1usize, |acc, &s| acc.checked_mul(s)).ok_or(Error::Overflow("torus size"))?;
    let mut perms = vec![vec![0usize; n]; sides.len()];
    let mut stride = 1;
    for (i, &s) in sides.iter().enumerate() {
        for (x, slot) in perms[i].iter_mut().enumerate() {
            let c = (x / stride) % s;
            *slot = if c + 1 == s { x - c * stride } else { x + stride };
        }
        stride *= s;
    }
    ActionSpace::new(perms)
}

/// `p` disjoint copies of `x` followed by `(q−p)·n` fixed points.
pub fn dilute(x: &ActionSpace, p: usize, q: usize) -> Result<ActionSpace> {
    if p == 0 || p > q {
        return Err(Error::Argument("dilution needs 1 <= p <= q".into()));
    }
    let n = x.n();
    let total = q * n;
    let perms = (0..x.m())
        .map(|j| {
            let base = x.perm(j);
            (0..total).map(|v| if v < p * n { (v / n) * n + base[v % n] as usize } else { v }).collect()
        })
        .collect();
    ActionSpace::new(perms)
}

/// `k` edits, each composing a uniformly chosen permutation with a random
/// transposition of two distinct points.
pub fn perturb(x: &ActionSpace, k: usize, seed: u64) -> Result<ActionSpace> {
    let mut perms = x.perms();
    let n = x.n();
    if n < 2 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..k {
        let j = rng.gen_range(0..x.m());
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        perms[j].swap(a, b);
    }
    ActionSpace::new(perms)
}

/// `m` independent uniform permutations of `[n]`.
pub fn random(n: usize, m: usize, seed: u64) -> Result<ActionSpace> {
    if n == 0 || m == 0 {
        return Err(Error::Argument("random instance needs n, m >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perms = (0..m)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    ActionSpace::new(perms)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InstanceSpec {
    Xt { d: usize, t: usize },
    Torus { sides: Vec<usize> },
    Dilution { base: Box<InstanceSpec>, p: usize, q: usize },
    Perturbed { base: Box<InstanceSpec>, k: usize, seed: u64 },
    Random { n: usize, m: usize, seed: u64 },
}

impl InstanceSpec {
    pub fn generate(&self) -> Result<ActionSpace> {
        match self {
            InstanceSpec::Xt { d, t } => make_xt(*d, *t),
            InstanceSpec::Torus { sides } => torus(sides),
            InstanceSpec::Dilution { base, p, q } => dilute(&base.generate()?, *p, *q),
            InstanceSpec::Perturbed { base, k, seed } => perturb(&base.generate()?, *k, *seed),
            InstanceSpec::Random { n, m, seed } => random(*n, *m, *seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::{build_presentation, commutator_equations, Word};
    use crate::rational::Rational;

    fn comm_e(d: usize) -> crate::EquationSet {
        commutator_equations(&build_presentation(d, d, &[]).unwrap())
    }

    #[test]
    fn xt_shapes() {
        assert_eq!(make_xt(2, 3).unwrap().n(), 8);
        assert_eq!(make_xt(2, 2).unwrap().n(), 3);
        let x = make_xt(1, 5).unwrap();
        assert_eq!(x.n(), 4);
        assert_eq!(x.ball(0, 4).len(), 4);
        assert_eq!(x.apply_vector(&[4], 0), 0);
        assert!(x.is_solution(&comm_e(1)).unwrap());
    }

    #[test]
    fn xt_violations_localized() {
        let t = 5;
        let x = make_xt(3, t).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                let w = Word::commutator(&Word::power(i, 1), &Word::power(j, 1));
                let mut bad: Vec<usize> = (0..x.n()).filter(|&q| x.apply_word(&w, q) != q).collect();
                bad.sort();
                let mut ei = vec![0; 3];
                ei[i] = 1;
                let mut ej = vec![0; 3];
                ej[j] = 1;
                let mut eij = ei.clone();
                eij[j] = 1;
                let mut want = vec![xt_index(&ei, t), xt_index(&ej, t), xt_index(&eij, t)];
                want.sort();
                assert_eq!(bad, want);
            }
        }
    }

    #[test]
    fn xt_defect_formula() {
        let e = comm_e(2);
        for t in 2..10usize {
            let x = make_xt(2, t).unwrap();
            assert_eq!(x.local_defect(&e).unwrap().local_defect, Rational::new(3, (t * t - 1) as i64));
        }
    }

    #[test]
    fn torus_is_solution() {
        let x = torus(&[3, 4, 2]).unwrap();
        assert_eq!(x.n(), 24);
        assert!(x.is_solution(&comm_e(3)).unwrap());
        assert_eq!(x.apply_vector(&[3, 0, 0], 5), 5);
        assert_eq!(x.apply_vector(&[0, 4, 0], 5), 5);
        assert_ne!(x.apply_vector(&[0, 0, 1], 5), 5);
    }

    #[test]
    fn dilution_scales_defect() {
        let e = comm_e(2);
        let x = make_xt(2, 3).unwrap();
        let y = dilute(&x, 1, 3).unwrap();
        assert_eq!(y.n(), 24);
        assert_eq!(y.local_defect(&e).unwrap().local_defect, Rational::new(1, 8));
        let z = dilute(&x, 2, 2).unwrap();
        assert_eq!(z.local_defect(&e).unwrap().local_defect, Rational::new(3, 8));
        assert_eq!(dilute(&x, 1, 1).unwrap(), x);
        assert!(dilute(&x, 3, 2).is_err());
    }

    #[test]
    fn perturbation() {
        let x = torus(&[6, 6]).unwrap();
        assert_eq!(perturb(&x, 0, 1).unwrap(), x);
        let y = perturb(&x, 3, 9).unwrap();
        assert_eq!(y, perturb(&x, 3, 9).unwrap());
        assert!(x.distance(&y).unwrap() <= Rational::new(2 * 3 * 2, 36));
        let z = perturb(&x, 1, 4).unwrap();
        assert!(z.local_defect(&comm_e(2)).unwrap().local_defect > Rational::new(0, 1));
    }

    #[test]
    fn spec_round_trip() {
        let s = InstanceSpec::Perturbed { base: Box::new(InstanceSpec::Xt { d: 2, t: 4 }), k: 2, seed: 7 };
        let json = serde_json::to_string(&s).unwrap();
        let back: InstanceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.generate().unwrap(), s.generate().unwrap());
        let r = InstanceSpec::Random { n: 5, m: 2, seed: 1 }.generate().unwrap();
        assert_eq!(r.n(), 5);
    }
}
