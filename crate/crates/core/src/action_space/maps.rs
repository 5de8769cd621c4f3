//! Partial maps between `F_m`-sets and the checks on them.

use std::collections::{HashMap, HashSet};
use std::fmt::Debug;
use std::hash::Hash;

use super::ActionSpace;
use crate::error::{Error, Result};

/// Anything the generators act on: finite action spaces and lattice
/// quotients `Z^m/H` (represented by canonical coset representatives).
pub trait GammaSet {
    type Point: Clone + Eq + Hash + Debug;
    fn rank(&self) -> usize;
    fn act(&self, p: &Self::Point, gen: usize, inverse: bool) -> Self::Point;
    /// Action of the sorted lift `v̂`.
    fn act_vector(&self, p: &Self::Point, v: &[i64]) -> Self::Point;
}

impl GammaSet for ActionSpace {
    type Point = usize;
    fn rank(&self) -> usize {
        self.m()
    }
    fn act(&self, p: &usize, gen: usize, inverse: bool) -> usize {
        self.step(*p, gen, inverse)
    }
    fn act_vector(&self, p: &usize, v: &[i64]) -> usize {
        self.apply_vector(v, *p)
    }
}

#[derive(Clone, Debug)]
pub struct PartialMap<P: Clone + Eq + Hash, Q: Clone + Eq + Hash> {
    pub domain: Vec<P>,
    pub image: Vec<Q>,
    pub injective: bool,
    lookup: HashMap<P, usize>,
}

impl<P: Clone + Eq + Hash, Q: Clone + Eq + Hash> PartialMap<P, Q> {
    /// Builds a map from pairs; repeated domain points must agree.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (P, Q)>) -> Result<PartialMap<P, Q>> {
        let mut domain = Vec::new();
        let mut image = Vec::new();
        let mut lookup = HashMap::new();
        for (p, q) in pairs {
            match lookup.get(&p) {
                Some(&i) => {
                    if image[i] != q {
                        return Err(Error::Precondition("map is not well defined".into()));
                    }
                }
                None => {
                    lookup.insert(p.clone(), domain.len());
                    domain.push(p);
                    image.push(q);
                }
            }
        }
        let distinct: HashSet<&Q> = image.iter().collect();
        let injective = distinct.len() == image.len();
        Ok(PartialMap { domain, image, injective, lookup })
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn get(&self, p: &P) -> Option<&Q> {
        self.lookup.get(p).map(|&i| &self.image[i])
    }

    pub fn index_of(&self, p: &P) -> Option<usize> {
        self.lookup.get(p).copied()
    }
}

/// `F_{P,x,y}: p̂·x ↦ p̂·y` for `p ∈ P`; errors when not well defined.
pub fn f_map<A: GammaSet, B: GammaSet>(
    src: &A,
    x: &A::Point,
    tgt: &B,
    y: &B::Point,
    p: &[Vec<i64>],
) -> Result<PartialMap<A::Point, B::Point>> {
    PartialMap::from_pairs(p.iter().map(|v| (src.act_vector(x, v), tgt.act_vector(y, v))))
}

/// True iff `f` is injective and preserves every edge `p → s·p` for
/// positive generators `s`: either both `s·p` and `s·f(p)` lie outside the
/// domain/image, or both inside with `f(s·p) = s·f(p)`.
pub fn check_subgraph_iso<A: GammaSet, B: GammaSet>(src: &A, tgt: &B, f: &PartialMap<A::Point, B::Point>) -> bool {
    if !f.injective {
        return false;
    }
    let image: HashSet<&B::Point> = f.image.iter().collect();
    for (p, fp) in f.domain.iter().zip(&f.image) {
        for s in 0..src.rank() {
            let sp = src.act(p, s, false);
            let sfp = tgt.act(fp, s, false);
            match f.get(&sp) {
                Some(fsp) => {
                    if *fsp != sfp {
                        return false;
                    }
                }
                None => {
                    if image.contains(&sfp) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// `Eq(f)`: domain points `p` with `s·p` in the domain and `f(s·p) = s·f(p)`
/// for every generator `s`.
pub fn equivariance_points<A: GammaSet, B: GammaSet>(
    src: &A,
    tgt: &B,
    f: &PartialMap<A::Point, B::Point>,
) -> Vec<A::Point> {
    f.domain
        .iter()
        .zip(&f.image)
        .filter(|(p, fp)| {
            (0..src.rank()).all(|s| match f.get(&src.act(p, s, false)) {
                Some(fsp) => *fsp == tgt.act(fp, s, false),
                None => false,
            })
        })
        .map(|(p, _)| p.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::l1_ball;

    fn cycle(n: usize) -> ActionSpace {
        ActionSpace::new(vec![(0..n).map(|i| (i + 1) % n).collect()]).unwrap()
    }

    #[test]
    fn f_map_basics() {
        let x = cycle(10);
        let f = f_map(&x, &3, &x, &7, &[vec![0]]).unwrap();
        assert_eq!(f.domain, vec![3]);
        assert_eq!(f.image, vec![7]);
        let p: Vec<Vec<i64>> = (-2..=2).map(|a| vec![a]).collect();
        let f = f_map(&x, &4, &x, &4, &p).unwrap();
        assert!(f.domain.iter().zip(&f.image).all(|(a, b)| a == b));
        // Z/2 target from a long cycle: not injective
        let z2 = cycle(2);
        let f = f_map(&x, &0, &z2, &0, &p).unwrap();
        assert!(!f.injective);
        // Z/3 source onto Z/2 target is not well defined
        let z3 = cycle(3);
        assert!(f_map(&z3, &0, &z2, &0, &p).is_err());
    }

    #[test]
    fn subgraph_iso_and_eq() {
        let x = cycle(12);
        let y = cycle(20);
        let p: Vec<Vec<i64>> = (-3..=3).map(|a| vec![a]).collect();
        let f = f_map(&x, &0, &y, &0, &p).unwrap();
        assert!(check_subgraph_iso(&x, &y, &f));
        assert_eq!(equivariance_points(&x, &y, &f).len(), 6);
        // moving one image point off the ball breaks it
        let moved = PartialMap::from_pairs(
            f.domain.iter().cloned().zip(f.image.iter().map(|&q| if q == 0 { 10 } else { q })),
        )
        .unwrap();
        assert!(!check_subgraph_iso(&x, &y, &moved));
        let empty: PartialMap<usize, usize> = PartialMap::from_pairs(Vec::new()).unwrap();
        assert!(equivariance_points(&x, &y, &empty).is_empty());
    }

    #[test]
    fn whole_space_iso_has_full_eq() {
        let x = cycle(9);
        let p: Vec<Vec<i64>> = (0..9).map(|a| vec![a]).collect();
        let f = f_map(&x, &0, &x, &4, &p).unwrap();
        assert!(check_subgraph_iso(&x, &x, &f));
        assert_eq!(equivariance_points(&x, &x, &f).len(), 9);
    }

    #[test]
    fn ball_identification_on_tori() {
        let a = super::super::tests::torus(11, 13);
        let b = super::super::tests::torus(15, 12);
        let p = l1_ball(2, 4);
        let f = f_map(&a, &5, &b, &17, &p).unwrap();
        assert!(f.injective);
        assert!(check_subgraph_iso(&a, &b, &f));
    }
}
