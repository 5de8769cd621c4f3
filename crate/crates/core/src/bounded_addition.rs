//! Bounded addition `[D]_R`: what can be generated from `D` by negation and
//! addition without leaving the box `B^{L∞}(R)`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{express, reduced_basis, Lattice};

pub fn linf(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).max().unwrap_or(0)
}

fn add(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn neg(a: &[i64]) -> Vec<i64> {
    a.iter().map(|x| -x).collect()
}

/// How an element of a generation sequence is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Zero,
    /// The `j`-th element of `D`.
    Seed(usize),
    /// Negation of an earlier element.
    Neg(usize),
    /// Sum of two earlier elements.
    Sum(usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSequence {
    pub vectors: Vec<Vec<i64>>,
    pub steps: Vec<Step>,
}

impl GenerationSequence {
    pub fn target(&self) -> Option<&Vec<i64>> {
        self.vectors.last()
    }

    /// Checks every step against `D` and the box `B^{L∞}(r)`.
    pub fn replays(&self, d: &[Vec<i64>], r: i64) -> bool {
        if self.vectors.len() != self.steps.len() {
            return false;
        }
        for (i, (v, s)) in self.vectors.iter().zip(&self.steps).enumerate() {
            if linf(v) > r {
                return false;
            }
            let ok = match *s {
                Step::Zero => v.iter().all(|&x| x == 0),
                Step::Seed(j) => d.get(j) == Some(v),
                Step::Neg(j) => j < i && neg(&self.vectors[j]) == *v,
                Step::Sum(a, b) => a < i && b < i && add(&self.vectors[a], &self.vectors[b]) == *v,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// The prefix ending at element `i`.
    fn truncated(mut self, i: usize) -> GenerationSequence {
        self.vectors.truncate(i + 1);
        self.steps.truncate(i + 1);
        self
    }
}

/// `[D]_R` together with a witness for every member.
#[derive(Clone, Debug)]
pub struct ClosureResult {
    pub r: i64,
    pub m: usize,
    pub seeds: Vec<Vec<i64>>,
    /// Members in discovery order; parents always come first.
    pub members: Vec<Vec<i64>>,
    pub witness: Vec<Step>,
    slot: Vec<u32>,
}

const EMPTY: u32 = u32::MAX;

impl ClosureResult {
    fn side(&self) -> usize {
        (2 * self.r + 1) as usize
    }

    fn offset(&self, v: &[i64]) -> Option<usize> {
        let side = self.side();
        let mut idx = 0usize;
        for &x in v {
            if x.abs() > self.r {
                return None;
            }
            idx = idx * side + (x + self.r) as usize;
        }
        Some(idx)
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.offset(v).is_some_and(|o| self.slot[o] != EMPTY)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// A generation sequence for `v`, listing only its ancestors.
    pub fn witness_for(&self, v: &[i64]) -> Option<GenerationSequence> {
        let root = self.slot[self.offset(v)?];
        if root == EMPTY {
            return None;
        }
        let mut need = vec![false; self.members.len()];
        let mut stack = vec![root as usize];
        while let Some(i) = stack.pop() {
            if need[i] {
                continue;
            }
            need[i] = true;
            match self.witness[i] {
                Step::Neg(a) => stack.push(a),
                Step::Sum(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                _ => {}
            }
        }
        let mut renumber = vec![usize::MAX; self.members.len()];
        let mut out = GenerationSequence::default();
        for i in (0..self.members.len()).filter(|&i| need[i]) {
            renumber[i] = out.vectors.len();
            out.vectors.push(self.members[i].clone());
            out.steps.push(match self.witness[i] {
                Step::Neg(a) => Step::Neg(renumber[a]),
                Step::Sum(a, b) => Step::Sum(renumber[a], renumber[b]),
                s => s,
            });
        }
        Some(out)
    }
}

/// Computes `[D]_R` exactly.
///
/// First a breadth-first walk from 0 by steps in `D^±` inside the box; then a
/// fixpoint over the remaining points of `⟨D⟩ ∩ B^{L∞}(R)` (the closure never
/// leaves the lattice), adding `z` whenever `z − x` and `x` are both members.
pub fn closure(d: &[Vec<i64>], r: i64, limit: u64) -> Result<ClosureResult> {
    if r < 0 {
        return Err(Error::Argument("R must be nonnegative".into()));
    }
    let m = match d.first() {
        Some(v) => v.len(),
        None => {
            return Err(Error::Argument("closure of an empty D needs an ambient rank; use closure_in".into()))
        }
    };
    closure_in(m, d, r, limit)
}

pub fn closure_in(m: usize, d: &[Vec<i64>], r: i64, limit: u64) -> Result<ClosureResult> {
    if d.iter().any(|v| v.len() != m) {
        return Err(Error::Argument("vectors of mixed length".into()));
    }
    if d.iter().any(|v| linf(v) > r) {
        return Err(Error::Precondition(format!("D is not inside the box of radius {r}")));
    }
    let side = (2 * r + 1) as u64;
    let cells = side
        .checked_pow(m as u32)
        .filter(|&c| c <= limit && c < EMPTY as u64)
        .ok_or_else(|| Error::Budget(format!("closure box ({side})^{m} exceeds {limit}")))?;
    let mut c = ClosureResult {
        r,
        m,
        seeds: d.to_vec(),
        members: Vec::new(),
        witness: Vec::new(),
        slot: vec![EMPTY; cells as usize],
    };
    let insert = |c: &mut ClosureResult, v: Vec<i64>, s: Step| -> Option<usize> {
        let o = c.offset(&v)?;
        if c.slot[o] != EMPTY {
            return None;
        }
        c.slot[o] = c.members.len() as u32;
        c.members.push(v);
        c.witness.push(s);
        Some(c.members.len() - 1)
    };
    let mut queue = VecDeque::new();
    if let Some(i) = insert(&mut c, vec![0; m], Step::Zero) {
        queue.push_back(i);
    }
    // steps: indices of the members equal to D^±
    let mut steps = Vec::new();
    for (j, v) in d.iter().enumerate() {
        if let Some(i) = insert(&mut c, v.clone(), Step::Seed(j)) {
            queue.push_back(i);
        }
        steps.push(c.slot[c.offset(v).unwrap()] as usize);
    }
    for j in 0..d.len() {
        let src = steps[j];
        let nv = neg(&c.members[src]);
        if let Some(i) = insert(&mut c, nv.clone(), Step::Neg(src)) {
            queue.push_back(i);
        }
        steps.push(c.slot[c.offset(&nv).unwrap()] as usize);
    }
    while let Some(i) = queue.pop_front() {
        for &s in &steps {
            let v = add(&c.members[i], &c.members[s]);
            if let Some(k) = insert(&mut c, v, Step::Sum(i, s)) {
                queue.push_back(k);
            }
        }
    }
    let lattice = Lattice::new(m, d)?;
    let mut pending: Vec<Vec<i64>> = box_points(m, r).filter(|z| !c.contains(z) && lattice.contains(z)).collect();
    loop {
        let mut grew = false;
        let mut rest = Vec::new();
        for z in pending {
            if c.contains(&z) {
                continue;
            }
            let found = (0..c.members.len()).find_map(|a| {
                let diff: Vec<i64> = z.iter().zip(&c.members[a]).map(|(p, q)| p - q).collect();
                c.offset(&diff).and_then(|o| (c.slot[o] != EMPTY).then_some((a, c.slot[o] as usize)))
            });
            match found {
                Some((a, b)) => {
                    let k = insert(&mut c, z.clone(), Step::Sum(a, b)).unwrap();
                    insert(&mut c, neg(&z), Step::Neg(k));
                    grew = true;
                }
                None => rest.push(z),
            }
        }
        pending = rest;
        if !grew || pending.is_empty() {
            break;
        }
    }
    Ok(c)
}

/// Points of `B^{L∞}(r)` in `Z^m`, lexicographic.
pub fn box_points(m: usize, r: i64) -> impl Iterator<Item = Vec<i64>> {
    let side = 2 * r + 1;
    let total = (side as u64).pow(m as u32);
    (0..total).map(move |mut i| {
        let mut v = vec![0i64; m];
        for j in (0..m).rev() {
            v[j] = (i % side as u64) as i64 - r;
            i /= side as u64;
        }
        v
    })
}

/// Orders the multiset `M` (summing to `y`) by flags at `N·b/a_i`: `a_i`
/// flags of color `i` evenly spaced up to `N`, merged by position with ties
/// broken by color. Colors are the distinct elements in lexicographic order.
pub fn jefferson_order(multiset: &[Vec<i64>], y: &[i64], r: i64) -> Result<Vec<Vec<i64>>> {
    let m = y.len();
    let mut sum = vec![0i64; m];
    for v in multiset {
        if v.len() != m {
            return Err(Error::Argument("vectors of mixed length".into()));
        }
        if linf(v) > r {
            return Err(Error::Precondition(format!("element outside the box of radius {r}")));
        }
        sum = add(&sum, v);
    }
    if sum != y {
        return Err(Error::Precondition("multiset does not sum to y".into()));
    }
    let mut counts: Vec<(Vec<i64>, i64)> = Vec::new();
    let mut sorted = multiset.to_vec();
    sorted.sort();
    for v in sorted {
        match counts.last_mut() {
            Some((u, a)) if *u == v => *a += 1,
            _ => counts.push((v, 1)),
        }
    }
    for (u, _) in &counts {
        if u.iter().any(|&x| x != 0) && counts.binary_search_by(|(w, _)| w.cmp(&neg(u))).is_ok() {
            return Err(Error::Precondition("multiset contains a vector and its negation".into()));
        }
    }
    let mut flags: Vec<(i64, usize)> = Vec::with_capacity(multiset.len());
    for (i, (_, a)) in counts.iter().enumerate() {
        for b in 1..=*a {
            flags.push((b, i));
        }
    }
    // N·b/a_i ≤ N·b'/a_j  ⇔  b·a_j ≤ b'·a_i
    flags.sort_by(|&(b1, i1), &(b2, i2)| {
        let l = b1 as i128 * counts[i2].1 as i128;
        let rr = b2 as i128 * counts[i1].1 as i128;
        l.cmp(&rr).then(i1.cmp(&i2))
    });
    Ok(flags.into_iter().map(|(_, i)| counts[i].0.clone()).collect())
}

/// `max_k ‖Σ_{j≤k} x_j − (k/N) y‖∞ ≤ bound`, compared exactly after scaling by `N`.
pub fn prefix_bound_holds(seq: &[Vec<i64>], y: &[i64], bound: i64) -> bool {
    let n = seq.len() as i128;
    let mut s = vec![0i128; y.len()];
    for k in 0..=seq.len() {
        if k > 0 {
            for (a, b) in s.iter_mut().zip(&seq[k - 1]) {
                *a += *b as i128;
            }
        }
        let worst = s.iter().zip(y).map(|(&a, &b)| (n.max(1) * a - k as i128 * b as i128).abs()).max().unwrap_or(0);
        if worst > n.max(1) * bound as i128 {
            return false;
        }
    }
    true
}

/// Builds generation sequences, sharing already generated vectors.
struct Builder {
    seq: GenerationSequence,
    index: HashMap<Vec<i64>, usize>,
}

impl Builder {
    fn push(&mut self, v: Vec<i64>, s: Step) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.seq.vectors.len();
        self.index.insert(v.clone(), i);
        self.seq.vectors.push(v);
        self.seq.steps.push(s);
        i
    }

    fn vector(&self, i: usize) -> &Vec<i64> {
        &self.seq.vectors[i]
    }

    /// Generates `target = Σ c_j gens[j]` (gens already in the sequence at
    /// `idx`) through the Jefferson ordering of the multiset of signed
    /// generators.
    fn combine(&mut self, idx: &[usize], coeffs: &[i64], target: &[i64], r: i64) -> Result<usize> {
        // merge generators equal up to sign so no vector meets its negation
        let mut merged: Vec<(usize, i64)> = Vec::new();
        for (&i, &c) in idx.iter().zip(coeffs) {
            if c == 0 || self.vector(i).iter().all(|&x| x == 0) {
                continue;
            }
            let v = self.vector(i).clone();
            match merged.iter_mut().find(|(j, _)| *self.seq.vectors.get(*j).unwrap() == v) {
                Some((_, a)) => *a += c,
                None => match merged.iter_mut().find(|(j, _)| self.seq.vectors[*j] == neg(&v)) {
                    Some((_, a)) => *a -= c,
                    None => merged.push((i, c)),
                },
            }
        }
        let mut multiset = Vec::new();
        let mut signed: HashMap<Vec<i64>, usize> = HashMap::new();
        for (i, c) in merged {
            if c == 0 {
                continue;
            }
            let v = if c > 0 { self.vector(i).clone() } else { neg(self.vector(i)) };
            let vi = if c > 0 { i } else { self.push(v.clone(), Step::Neg(i)) };
            signed.insert(v.clone(), vi);
            for _ in 0..c.abs() {
                multiset.push(v.clone());
            }
        }
        if multiset.is_empty() {
            return Ok(self.push(vec![0; target.len()], Step::Zero));
        }
        let order = jefferson_order(&multiset, target, r)?;
        let mut cur = signed[&order[0]];
        for v in &order[1..] {
            let s = add(self.vector(cur), v);
            cur = self.push(s, Step::Sum(cur, signed[v]));
        }
        Ok(cur)
    }
}

/// A `(D, 5m²R)`-generation sequence for `y`, or `None` when `y ∉ ⟨D⟩`.
///
/// Follows the basis path: `E_i` is a reduced basis of `⟨x_1..x_i⟩`, each of
/// its elements generated from `E_{i−1} ∪ {x_i}` by a Jefferson ordering of
/// its integer representation; `y` is then generated from `E_p` the same way.
pub fn membership_with_witness(d: &[Vec<i64>], r: i64, y: &[i64], budget: u64) -> Result<Option<GenerationSequence>> {
    let m = y.len();
    if d.iter().any(|v| v.len() != m) {
        return Err(Error::Argument("vectors of mixed length".into()));
    }
    if d.iter().any(|v| linf(v) > r) || linf(y) > r {
        return Err(Error::Precondition(format!("inputs not inside the box of radius {r}")));
    }
    if !Lattice::new(m, d)?.contains(y) {
        return Ok(None);
    }
    let big = 5 * (m * m) as i64 * r;
    let mut b = Builder { seq: GenerationSequence::default(), index: HashMap::new() };
    let seeds: Vec<usize> = d.iter().enumerate().map(|(j, v)| b.push(v.clone(), Step::Seed(j))).collect();
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..d.len() {
        let span: Vec<Vec<i64>> = d[..=i].to_vec();
        let e_i = reduced_basis(&Lattice::new(m, &span)?, budget)?;
        let mut gens_idx = basis.clone();
        gens_idx.push(seeds[i]);
        let gens: Vec<Vec<i64>> = gens_idx.iter().map(|&k| b.vector(k).clone()).collect();
        let bound = gens.iter().map(|g| linf(g)).max().unwrap_or(0).max(1);
        let mut next = Vec::with_capacity(e_i.len());
        for e in &e_i {
            let c = express(m, &gens, e)?.ok_or_else(|| Error::Precondition("basis vector outside span".into()))?;
            next.push(b.combine(&gens_idx, &c, e, bound)?);
        }
        basis = next;
    }
    let gens: Vec<Vec<i64>> = basis.iter().map(|&k| b.vector(k).clone()).collect();
    let c = express(m, &gens, y)?.ok_or_else(|| Error::Precondition("y outside the reduced span".into()))?;
    let bound = gens.iter().map(|g| linf(g)).max().unwrap_or(0).max(1);
    let last = if gens.is_empty() { b.push(vec![0; m], Step::Zero) } else { b.combine(&basis, &c, y, bound)? };
    let seq = b.seq.truncated(last);
    if seq.target().map(|v| v.as_slice()) != Some(y) || !seq.replays(d, big) {
        return Err(Error::Precondition("generation sequence left the box of radius 5m²R".into()));
    }
    Ok(Some(seq))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    const LIM: u64 = 10_000_000;

    /// Fixpoint of the three rules by brute force over pairs.
    pub(crate) fn naive_closure(m: usize, d: &[Vec<i64>], r: i64) -> BTreeSet<Vec<i64>> {
        let mut s: BTreeSet<Vec<i64>> = d.iter().cloned().collect();
        s.insert(vec![0; m]);
        loop {
            let cur: Vec<Vec<i64>> = s.iter().cloned().collect();
            let mut next = s.clone();
            for a in &cur {
                next.insert(neg(a));
                for b in &cur {
                    let c = add(a, b);
                    if linf(&c) <= r {
                        next.insert(c);
                    }
                }
            }
            if next == s {
                return s;
            }
            s = next;
        }
    }

    #[test]
    fn closure_examples() {
        let c = closure(&[vec![2]], 3, LIM).unwrap();
        let got: BTreeSet<_> = c.members.iter().cloned().collect();
        assert_eq!(got, [vec![-2], vec![0], vec![2]].into_iter().collect());
        let c = closure(&[vec![2]], 10, LIM).unwrap();
        let got: BTreeSet<_> = c.members.iter().cloned().collect();
        assert_eq!(got, (-5..=5).map(|k| vec![2 * k]).collect());
        let c = closure_in(2, &[], 4, LIM).unwrap();
        assert_eq!(c.members, vec![vec![0, 0]]);
    }

    #[test]
    fn jefferson_examples() {
        let m = vec![vec![1, 0], vec![1, 0], vec![0, 1], vec![0, 1]];
        let s = jefferson_order(&m, &[2, 2], 1).unwrap();
        assert_eq!(s, vec![vec![0, 1], vec![1, 0], vec![0, 1], vec![1, 0]]);
        assert!(prefix_bound_holds(&s, &[2, 2], 4));
        assert_eq!(jefferson_order(&[vec![3]], &[3], 3).unwrap(), vec![vec![3]]);
        assert!(jefferson_order(&[vec![3]], &[2], 3).is_err());
        assert!(jefferson_order(&[vec![1], vec![-1]], &[0], 3).is_err());
    }

    #[test]
    fn membership_examples() {
        let w = membership_with_witness(&[vec![2]], 3, &[2], LIM).unwrap().unwrap();
        assert_eq!(w.vectors, vec![vec![2]]);
        let d = [vec![1, 1], vec![1, -1]];
        let w = membership_with_witness(&d, 2, &[2, 0], LIM).unwrap().unwrap();
        assert!(w.replays(&d, 40));
        assert_eq!(w.target(), Some(&vec![2, 0]));
        assert!(closure(&d, 40, LIM).unwrap().contains(&[2, 0]));
        assert!(membership_with_witness(&d, 2, &[1, 0], LIM).unwrap().is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn closure_matches_naive(d in prop::collection::vec(prop::collection::vec(-3i64..4, 2), 0..3), r in 3i64..7) {
            let c = closure_in(2, &d, r, LIM).unwrap();
            let got: BTreeSet<_> = c.members.iter().cloned().collect();
            prop_assert_eq!(got.len(), c.members.len());
            prop_assert_eq!(&got, &naive_closure(2, &d, r));
            for v in &c.members {
                let w = c.witness_for(v).unwrap();
                prop_assert!(w.replays(&d, r));
                prop_assert_eq!(w.target(), Some(v));
            }
        }

        #[test]
        fn jefferson_prefixes(m in 1usize..4, picks in prop::collection::vec((0usize..3, 1i64..6), 1..4), seed in prop::collection::vec(-5i64..6, 9)) {
            let r = 5;
            let distinct: Vec<Vec<i64>> = (0..3).map(|i| seed[i * 3..i * 3 + m].to_vec()).collect();
            let mut ms = Vec::new();
            for (i, a) in picks {
                for _ in 0..a { ms.push(distinct[i].clone()); }
            }
            let y = ms.iter().fold(vec![0; m], |s, v| add(&s, v));
            if let Ok(seq) = jefferson_order(&ms, &y, r) {
                let mut colors = ms.clone();
                colors.sort();
                colors.dedup();
                prop_assert!(prefix_bound_holds(&seq, &y, 2 * colors.len() as i64 * r));
            }
        }

        #[test]
        fn witnesses_replay(d in prop::collection::vec(prop::collection::vec(-3i64..4, 3), 1..4), y in prop::collection::vec(-3i64..4, 3)) {
            let r = 3;
            let lat = Lattice::new(3, &d).unwrap();
            match membership_with_witness(&d, r, &y, LIM).unwrap() {
                Some(w) => {
                    prop_assert!(lat.contains(&y));
                    prop_assert!(w.replays(&d, 5 * 9 * r));
                    prop_assert_eq!(w.target(), Some(&y));
                }
                None => prop_assert!(!lat.contains(&y)),
            }
        }
    }
}
