//! Sublattices of `Z^m` and their quotients.

mod hermite;
pub mod parallelotope;
pub mod reduce;

use std::collections::{HashSet, VecDeque};

pub use hermite::{adjugate, det, express, integer_kernel, Lattice};
pub use parallelotope::Parallelotope;
pub use reduce::{
    lenstra_certificate, lll, norm1, norm2, reduced_basis, set_norm1, short_basis_in_window, short_vectors,
    strongest_coordinates, successive_minima_sq, RankTracker,
};

use crate::action_space::GammaSet;

/// `Z^m / H` acting on itself by translation; points are canonical coset
/// representatives.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub lattice: Lattice,
}

impl Quotient {
    pub fn new(lattice: Lattice) -> Quotient {
        Quotient { lattice }
    }

    pub fn rep(&self, v: &[i64]) -> Vec<i64> {
        self.lattice.coset_rep(v)
    }

    pub fn zero(&self) -> Vec<i64> {
        vec![0; self.lattice.ambient()]
    }

    /// Points within graph distance `r` of `set`.
    pub fn ball_of_set(&self, set: &[Vec<i64>], r: u64, limit: usize) -> crate::Result<HashSet<Vec<i64>>> {
        let mut seen: HashSet<Vec<i64>> = set.iter().map(|p| self.rep(p)).collect();
        let mut queue: VecDeque<(Vec<i64>, u64)> = seen.iter().map(|p| (p.clone(), 0)).collect();
        while let Some((p, dist)) = queue.pop_front() {
            if dist == r {
                continue;
            }
            for g in 0..self.lattice.ambient() {
                for inv in [false, true] {
                    let q = self.act(&p, g, inv);
                    if !seen.contains(&q) {
                        if seen.len() >= limit {
                            return Err(crate::Error::Budget(format!("quotient ball exceeds {limit} points")));
                        }
                        seen.insert(q.clone());
                        queue.push_back((q, dist + 1));
                    }
                }
            }
        }
        Ok(seen)
    }
}

impl GammaSet for Quotient {
    type Point = Vec<i64>;

    fn rank(&self) -> usize {
        self.lattice.ambient()
    }

    fn act(&self, p: &Vec<i64>, gen: usize, inverse: bool) -> Vec<i64> {
        let mut q = p.clone();
        q[gen] += if inverse { -1 } else { 1 };
        self.lattice.reduce_in_place(&mut q);
        q
    }

    fn act_vector(&self, p: &Vec<i64>, v: &[i64]) -> Vec<i64> {
        let mut q: Vec<i64> = p.iter().zip(v).map(|(a, b)| a + b).collect();
        self.lattice.reduce_in_place(&mut q);
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_quotient_ball() {
        let q = Quotient::new(Lattice::new(2, &[vec![5, 0], vec![0, 5]]).unwrap());
        assert_eq!(q.ball_of_set(&[q.zero()], 1, 100).unwrap().len(), 5);
        assert_eq!(q.ball_of_set(&[q.zero()], 10, 100).unwrap().len(), 25);
        assert_eq!(q.act(&vec![4, 0], 0, false), vec![0, 0]);
    }
}
