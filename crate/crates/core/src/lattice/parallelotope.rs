//! Discrete parallelotopes spanned by `D0` and its strongest unit complement.

use itertools::Itertools;
use num::rational::BigRational;
use num::BigInt;

use super::hermite::{adjugate, det};
use super::reduce::{norm1, set_norm1, strongest_coordinates};
use crate::error::{Error, Result};

/// `P_t^{D0} = {x : M_D^{-1} x ∈ [0,1)^k × [−t,t)^{m−k}}` with
/// `D = (D0, e_{i_1}, …, e_{i_{m−k}})`.
///
/// `M_D^{-1} = adj / Δ` is kept in integers: `adj` is the adjugate, negated
/// if needed so that `Δ > 0`.
#[derive(Clone, Debug)]
pub struct Parallelotope {
    pub m: usize,
    pub d0: Vec<Vec<i64>>,
    /// Strongest coordinates, 0-based ascending.
    pub strong: Vec<usize>,
    pub t: i64,
    delta: i128,
    adj: Vec<Vec<i128>>,
}

impl Parallelotope {
    pub fn new(m: usize, d0: &[Vec<i64>], t: i64) -> Result<Parallelotope> {
        if t < 1 {
            return Err(Error::Argument("parallelotope side t must be at least 1".into()));
        }
        let strong = strongest_coordinates(d0, m)?;
        let basis: Vec<Vec<i64>> = d0
            .iter()
            .cloned()
            .chain(strong.iter().map(|&i| (0..m).map(|j| (i == j) as i64).collect()))
            .collect();
        // M_D has the basis vectors as columns
        let mat: Vec<Vec<i64>> = (0..m).map(|r| basis.iter().map(|v| v[r]).collect()).collect();
        let mut delta = det(&mat)?;
        let mut adj = adjugate(&mat)?;
        if delta < 0 {
            delta = -delta;
            for row in adj.iter_mut() {
                for x in row.iter_mut() {
                    *x = -*x;
                }
            }
        }
        Ok(Parallelotope { m, d0: d0.to_vec(), strong, t, delta, adj })
    }

    pub fn k(&self) -> usize {
        self.d0.len()
    }

    /// The ordered basis `D = D0 ∪ C(D0)`.
    pub fn basis(&self) -> Vec<Vec<i64>> {
        let m = self.m;
        self.d0
            .iter()
            .cloned()
            .chain(self.strong.iter().map(|&i| (0..m).map(|j| (i == j) as i64).collect()))
            .collect()
    }

    /// `|det M_D|`.
    pub fn volume(&self) -> i128 {
        self.delta
    }

    pub fn with_t(&self, t: i64) -> Parallelotope {
        Parallelotope { t, ..self.clone() }
    }

    /// `Δ · M_D^{-1} x`.
    fn scaled_coords(&self, x: &[i64]) -> Vec<i128> {
        self.adj.iter().map(|row| row.iter().zip(x).map(|(&a, &b)| a * b as i128).sum()).collect()
    }

    /// Exact rational coordinates `M_D^{-1} x`.
    pub fn coordinates(&self, x: &[i64]) -> Vec<BigRational> {
        self.scaled_coords(x)
            .into_iter()
            .map(|c| BigRational::new(BigInt::from(c), BigInt::from(self.delta)))
            .collect()
    }

    /// Entries of `M_D^{-1}` as exact rationals.
    pub fn inverse(&self) -> Vec<Vec<BigRational>> {
        self.adj
            .iter()
            .map(|row| row.iter().map(|&a| BigRational::new(BigInt::from(a), BigInt::from(self.delta))).collect())
            .collect()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let k = self.k();
        let td = self.t as i128 * self.delta;
        self.scaled_coords(x)
            .iter()
            .enumerate()
            .all(|(i, &c)| if i < k { 0 <= c && c < self.delta } else { -td <= c && c < td })
    }

    /// Every entry of the lower `(m−k) × m` block of `M_D^{-1}` lies in `[−1, 1]`.
    pub fn lower_block_bounded(&self) -> bool {
        self.adj[self.k()..].iter().all(|row| row.iter().all(|a| a.abs() <= self.delta))
    }

    /// `|P_t| = Δ · (2t)^{m−k}`.
    pub fn expected_size(&self) -> Option<u64> {
        let side = (2 * self.t as u64).checked_pow((self.m - self.k()) as u32)?;
        u64::try_from(self.delta).ok()?.checked_mul(side)
    }

    /// `‖D0‖₁ + (m−k) t`, a bound on the L1 norm of every point.
    pub fn l1_bound(&self) -> i64 {
        set_norm1(&self.d0) + (self.m - self.k()) as i64 * self.t
    }

    /// All points, in lexicographic order. Also checks the size identity and
    /// the L1 bound.
    pub fn points(&self, limit: u64) -> Result<Vec<Vec<i64>>> {
        let m = self.m;
        let mut lo = vec![0i64; m];
        let mut hi = vec![0i64; m];
        for (i, v) in self.basis().iter().enumerate() {
            let (a, b) = if i < self.k() { (0, 1) } else { (-self.t, self.t) };
            for j in 0..m {
                let (p, q) = (v[j] * a, v[j] * b);
                lo[j] += p.min(q);
                hi[j] += p.max(q);
            }
        }
        let mut volume: u64 = 1;
        for j in 0..m {
            volume = volume
                .checked_mul((hi[j] - lo[j] + 1) as u64)
                .filter(|&v| v <= limit)
                .ok_or_else(|| Error::Budget(format!("parallelotope bounding box exceeds {limit} points")))?;
        }
        let out: Vec<Vec<i64>> = (0..m)
            .map(|j| lo[j]..=hi[j])
            .multi_cartesian_product()
            .filter(|x| self.contains(x))
            .collect();
        if Some(out.len() as u64) != self.expected_size() {
            return Err(Error::Precondition("parallelotope size identity failed".into()));
        }
        let bound = self.l1_bound();
        if out.iter().any(|p| norm1(p) > bound) {
            return Err(Error::Precondition("parallelotope exceeds its L1 bound".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Lattice, Quotient};
    use crate::action_space::GammaSet;
    use proptest::prelude::*;
    use std::collections::HashSet;

    const LIM: u64 = 1_000_000;

    #[test]
    fn interval() {
        let p = Parallelotope::new(1, &[], 2).unwrap();
        assert_eq!(p.points(LIM).unwrap(), vec![vec![-2], vec![-1], vec![0], vec![1]]);
    }

    #[test]
    fn axis_strip() {
        let p = Parallelotope::new(2, &[vec![1, 0]], 2).unwrap();
        assert_eq!(p.strong, vec![1]);
        let pts = p.points(LIM).unwrap();
        assert_eq!(pts, (-2..2).map(|b| vec![0, b]).collect::<Vec<_>>());
        assert_eq!(pts.len(), 2 * p.with_t(1).points(LIM).unwrap().len());
    }

    #[test]
    fn full_rank_is_fundamental_domain() {
        let p = Parallelotope::new(2, &[vec![2, 1], vec![-1, 3]], 5).unwrap();
        let pts = p.points(LIM).unwrap();
        assert_eq!(pts.len(), 7);
        let l = Lattice::new(2, &p.d0).unwrap();
        let reps: HashSet<Vec<i64>> = pts.iter().map(|x| l.coset_rep(x)).collect();
        assert_eq!(reps.len(), 7);
    }

    fn independent(rows: &[Vec<i64>]) -> bool {
        Lattice::new(rows[0].len(), rows).map(|l| l.rank() == rows.len()).unwrap_or(false)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]
        #[test]
        fn growth_and_bounds(m in 1usize..4, k in 0usize..4, seed in prop::collection::vec(-3i64..4, 12), t in 1i64..5) {
            let k = k.min(m);
            let d0: Vec<Vec<i64>> = (0..k).map(|i| seed[i * m..(i + 1) * m].to_vec()).collect();
            prop_assume!(k == 0 || independent(&d0));
            let p = Parallelotope::new(m, &d0, t).unwrap();
            prop_assert!(p.lower_block_bounded());
            let pt = p.points(LIM).unwrap();
            let p1 = p.with_t(1).points(LIM).unwrap();
            prop_assert_eq!(pt.len() as u64, p1.len() as u64 * (t as u64).pow((m - k) as u32));
        }

        #[test]
        fn difference_set_in_double(seed in prop::collection::vec(-3i64..4, 4), t in 1i64..4) {
            let d0 = vec![seed[..2].to_vec()];
            prop_assume!(independent(&d0));
            let p = Parallelotope::new(2, &d0, t).unwrap();
            let q = Quotient::new(Lattice::new(2, &d0).unwrap());
            let pts = p.points(LIM).unwrap();
            let double: HashSet<Vec<i64>> = p.with_t(2 * t).points(LIM).unwrap().iter().map(|x| q.rep(x)).collect();
            for a in &pts {
                for b in &pts {
                    let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                    prop_assert!(double.contains(&q.act_vector(&q.zero(), &diff)));
                }
            }
        }
    }
}
