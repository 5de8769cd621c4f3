//! Finite `F_m`-sets: `n` points with `m` labelled permutations.

mod maps;

pub use maps::{check_subgraph_iso, equivariance_points, f_map, GammaSet, PartialMap};

use std::collections::{HashSet, VecDeque};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::presentation::{EquationSet, PresentationSpec, Word};
use crate::rational::{serde_ratio, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSpace {
    n: usize,
    fwd: Vec<Vec<u32>>,
    inv: Vec<Vec<u32>>,
}

/// On-disk instance. Field order is alphabetical so the compact serialization
/// is canonical.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct InstanceFile {
    pub m: usize,
    pub n: usize,
    pub perms: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub presentation: Option<PresentationSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct WordViolations {
    pub word: String,
    pub violations: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct DefectReport {
    pub n: usize,
    #[serde(with = "serde_ratio")]
    pub local_defect: Rational,
    pub abiding_count: usize,
    pub per_word: Vec<WordViolations>,
}

impl ActionSpace {
    pub fn new(perms: Vec<Vec<usize>>) -> Result<ActionSpace> {
        if perms.is_empty() {
            return Err(Error::Instance("need at least one generator".into()));
        }
        let n = perms[0].len();
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::Instance(format!("unsupported point count {n}")));
        }
        let mut fwd = Vec::with_capacity(perms.len());
        let mut inv = Vec::with_capacity(perms.len());
        for (j, p) in perms.iter().enumerate() {
            if p.len() != n {
                return Err(Error::Instance(format!("permutation {j} has length {}, expected {n}", p.len())));
            }
            let mut back = vec![u32::MAX; n];
            for (x, &y) in p.iter().enumerate() {
                if y >= n || back[y] != u32::MAX {
                    return Err(Error::Instance(format!("permutation {j} is not a bijection of [0,{n})")));
                }
                back[y] = x as u32;
            }
            fwd.push(p.iter().map(|&y| y as u32).collect());
            inv.push(back);
        }
        Ok(ActionSpace { n, fwd, inv })
    }

    /// All generators act trivially.
    pub fn trivial(n: usize, m: usize) -> ActionSpace {
        let id: Vec<u32> = (0..n as u32).collect();
        ActionSpace { n, fwd: vec![id.clone(); m], inv: vec![id; m] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.fwd.len()
    }

    pub fn perm(&self, j: usize) -> &[u32] {
        &self.fwd[j]
    }

    pub fn perm_inverse(&self, j: usize) -> &[u32] {
        &self.inv[j]
    }

    pub fn perms(&self) -> Vec<Vec<usize>> {
        self.fwd.iter().map(|p| p.iter().map(|&y| y as usize).collect()).collect()
    }

    #[inline]
    pub fn step(&self, x: usize, gen: usize, inverse: bool) -> usize {
        if inverse {
            self.inv[gen][x] as usize
        } else {
            self.fwd[gen][x] as usize
        }
    }

    /// `ê_gen^a · x`.
    pub fn pow(&self, mut x: usize, gen: usize, a: i64) -> usize {
        let table = if a < 0 { &self.inv[gen] } else { &self.fwd[gen] };
        for _ in 0..a.unsigned_abs() {
            x = table[x] as usize;
        }
        x
    }

    /// Applies the word right to left.
    pub fn apply_word(&self, w: &Word, mut x: usize) -> usize {
        for l in w.letters().iter().rev() {
            x = self.step(x, l.gen, l.inv);
        }
        x
    }

    /// `v̂ · x` for the sorted lift `v̂ = ê_1^{v_1} ⋯ ê_m^{v_m}` (last generator first).
    pub fn apply_vector(&self, v: &[i64], mut x: usize) -> usize {
        for j in (0..v.len()).rev() {
            x = self.pow(x, j, v[j]);
        }
        x
    }

    /// `v̂⁻¹ · x`.
    pub fn apply_vector_inverse(&self, v: &[i64], mut x: usize) -> usize {
        for (j, &a) in v.iter().enumerate() {
            x = self.pow(x, j, -a);
        }
        x
    }

    /// Permutation induced by a word, as an image array.
    pub fn word_permutation(&self, w: &Word) -> Vec<u32> {
        (0..self.n).map(|x| self.apply_word(w, x) as u32).collect()
    }

    fn check_words(&self, e: &EquationSet) -> Result<()> {
        if let Some(g) = e.words.iter().filter_map(Word::max_generator).max() {
            if g >= self.m() {
                return Err(Error::Argument(format!(
                    "equation uses generator {} but instance has m={}",
                    g + 1,
                    self.m()
                )));
            }
        }
        Ok(())
    }

    /// Points fixed by every relator (`X_E`).
    pub fn abiding_mask(&self, e: &EquationSet) -> Result<Vec<bool>> {
        self.check_words(e)?;
        Ok((0..self.n)
            .into_par_iter()
            .map(|x| e.words.iter().all(|w| self.apply_word(w, x) == x))
            .collect())
    }

    /// `L_E(X) = |{(x,w): w·x ≠ x}| / n`, with per-word counts and `|X_E|`.
    pub fn local_defect(&self, e: &EquationSet) -> Result<DefectReport> {
        self.check_words(e)?;
        let rows: Vec<Vec<bool>> = e
            .words
            .par_iter()
            .map(|w| (0..self.n).map(|x| self.apply_word(w, x) != x).collect())
            .collect();
        let per_word: Vec<WordViolations> = e
            .words
            .iter()
            .zip(&rows)
            .map(|(w, r)| WordViolations {
                word: w.to_string(),
                violations: r.iter().filter(|&&b| b).count() as u64,
            })
            .collect();
        let total: u64 = per_word.iter().map(|w| w.violations).sum();
        let abiding_count = (0..self.n).filter(|&x| rows.iter().all(|r| !r[x])).count();
        Ok(DefectReport {
            n: self.n,
            local_defect: Rational::new(total as i64, self.n as i64),
            abiding_count,
            per_word,
        })
    }

    pub fn is_solution(&self, e: &EquationSet) -> Result<bool> {
        self.check_words(e)?;
        Ok(e.words.par_iter().all(|w| (0..self.n).all(|x| self.apply_word(w, x) == x)))
    }

    /// `d_n(Φ, Ψ) = Σ_s d_n(Φ(s), Ψ(s))`.
    pub fn distance(&self, other: &ActionSpace) -> Result<Rational> {
        if self.n != other.n || self.m() != other.m() {
            return Err(Error::Argument("distance between spaces of different shape".into()));
        }
        let mut total = Rational::from_integer(0);
        for j in 0..self.m() {
            total += hamming(&self.fwd[j], &other.fwd[j])?;
        }
        Ok(total)
    }

    /// `B_X(x, r)`, sorted.
    pub fn ball(&self, x: usize, r: u64) -> Vec<usize> {
        let mut seen: HashSet<usize> = HashSet::from([x]);
        let mut frontier = vec![x];
        for _ in 0..r {
            let mut next = Vec::new();
            for &p in &frontier {
                for j in 0..self.m() {
                    for inv in [false, true] {
                        let q = self.step(p, j, inv);
                        if seen.insert(q) {
                            next.push(q);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let mut out: Vec<usize> = seen.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Indicator of `B(A, r) = ∪_{x∈A} B(x, r)` (multi-source breadth-first search).
    pub fn ball_of_set(&self, a: &[bool], r: u64) -> Vec<bool> {
        let mut dist = vec![u64::MAX; self.n];
        let mut q = VecDeque::new();
        for (x, &inside) in a.iter().enumerate() {
            if inside {
                dist[x] = 0;
                q.push_back(x);
            }
        }
        while let Some(p) = q.pop_front() {
            if dist[p] == r {
                continue;
            }
            for j in 0..self.m() {
                for inv in [false, true] {
                    let y = self.step(p, j, inv);
                    if dist[y] == u64::MAX {
                        dist[y] = dist[p] + 1;
                        q.push_back(y);
                    }
                }
            }
        }
        dist.into_iter().map(|d| d != u64::MAX).collect()
    }

    /// Visits `ŵ · x` for every exponent vector in the product of `ranges`,
    /// applying generators in the order given by `order` with exponents
    /// multiplied by `sign`. Stops early when `f` returns false; the return
    /// value says whether the walk completed.
    fn walk_ranges(
        &self,
        x: usize,
        ranges: &[(i64, i64)],
        order: &[usize],
        sign: i64,
        f: &mut dyn FnMut(&[i64], usize) -> bool,
    ) -> bool {
        let mut v = vec![0i64; ranges.len()];
        self.walk_level(0, x, ranges, order, sign, &mut v, f)
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_level(
        &self,
        depth: usize,
        p: usize,
        ranges: &[(i64, i64)],
        order: &[usize],
        sign: i64,
        v: &mut Vec<i64>,
        f: &mut dyn FnMut(&[i64], usize) -> bool,
    ) -> bool {
        let j = order[depth];
        let (lo, hi) = ranges[j];
        let mut q = self.pow(p, j, sign * lo);
        for a in lo..=hi {
            v[j] = a;
            let ok = if depth + 1 == order.len() {
                f(v, q)
            } else {
                self.walk_level(depth + 1, q, ranges, order, sign, v, f)
            };
            if !ok {
                return false;
            }
            if a < hi {
                q = self.step(q, j, sign < 0);
            }
        }
        true
    }

    /// Visits `v̂ · x` for all `v` in the box `Π [lo_j, hi_j]`.
    pub fn walk_box(&self, x: usize, ranges: &[(i64, i64)], f: &mut dyn FnMut(&[i64], usize) -> bool) -> bool {
        let order: Vec<usize> = (0..self.m()).rev().collect();
        self.walk_ranges(x, ranges, &order, 1, f)
    }

    /// Visits `v̂⁻¹ · x` for all `v` in the box.
    pub fn walk_box_inverse(
        &self,
        x: usize,
        ranges: &[(i64, i64)],
        f: &mut dyn FnMut(&[i64], usize) -> bool,
    ) -> bool {
        let order: Vec<usize> = (0..self.m()).collect();
        self.walk_ranges(x, ranges, &order, -1, f)
    }

    /// Visits `v̂ · x` for every `v` with `‖v‖₁ ≤ r`.
    pub fn walk_l1_ball(&self, x: usize, r: i64, f: &mut dyn FnMut(&[i64], usize)) {
        let mut v = vec![0i64; self.m()];
        self.l1_level(self.m() - 1, x, r, &mut v, f);
    }

    fn l1_level(&self, j: usize, p: usize, rem: i64, v: &mut Vec<i64>, f: &mut dyn FnMut(&[i64], usize)) {
        for dir in [false, true] {
            let mut q = p;
            let start = if dir { 1 } else { 0 };
            if dir {
                q = self.step(q, j, true);
            }
            for a in start..=rem {
                v[j] = if dir { -a } else { a };
                if j == 0 {
                    f(v, q);
                } else {
                    self.l1_level(j - 1, q, rem - a, v, f);
                }
                if a < rem {
                    q = self.step(q, j, dir);
                }
            }
        }
        v[j] = 0;
    }

    /// `{v : ‖v‖₁ ≤ r, v̂·x0 = x0}`, sorted lexicographically.
    pub fn stabilizer_vectors(&self, x0: usize, r: i64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        self.walk_l1_ball(x0, r, &mut |v, p| {
            if p == x0 {
                out.push(v.to_vec());
            }
        });
        out.sort();
        out
    }

    /// Disjoint union; points of `other` are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &ActionSpace) -> Result<ActionSpace> {
        if self.m() != other.m() {
            return Err(Error::Argument("union of spaces with different m".into()));
        }
        let shift = self.n;
        let perms = (0..self.m())
            .map(|j| {
                self.fwd[j]
                    .iter()
                    .map(|&y| y as usize)
                    .chain(other.fwd[j].iter().map(|&y| y as usize + shift))
                    .collect()
            })
            .collect();
        ActionSpace::new(perms)
    }

    pub fn to_file(&self, presentation: Option<PresentationSpec>) -> InstanceFile {
        InstanceFile { m: self.m(), n: self.n, perms: self.perms(), presentation }
    }

    pub fn from_file(f: &InstanceFile) -> Result<ActionSpace> {
        if f.perms.len() != f.m {
            return Err(Error::Instance(format!("m={} but {} permutations given", f.m, f.perms.len())));
        }
        let x = ActionSpace::new(f.perms.clone())?;
        if x.n != f.n {
            return Err(Error::Instance(format!("n={} but permutations have length {}", f.n, x.n)));
        }
        Ok(x)
    }

    pub fn from_json(s: &str) -> Result<(ActionSpace, Option<PresentationSpec>)> {
        let f: InstanceFile = serde_json::from_str(s).map_err(|e| Error::Instance(e.to_string()))?;
        Ok((ActionSpace::from_file(&f)?, f.presentation))
    }

    /// Canonical compact serialization.
    pub fn to_json(&self, presentation: Option<PresentationSpec>) -> String {
        serde_json::to_string(&self.to_file(presentation)).expect("instance serializes")
    }
}

pub fn load(path: &Path) -> Result<(ActionSpace, Option<PresentationSpec>)> {
    ActionSpace::from_json(&std::fs::read_to_string(path)?)
}

pub fn store(x: &ActionSpace, presentation: Option<PresentationSpec>, path: &Path) -> Result<()> {
    std::fs::write(path, x.to_json(presentation))?;
    Ok(())
}

/// Normalized Hamming distance `|{x: σx ≠ τx}| / n`.
pub fn hamming(s: &[u32], t: &[u32]) -> Result<Rational> {
    if s.len() != t.len() || s.is_empty() {
        return Err(Error::Argument("hamming distance needs equal nonempty lengths".into()));
    }
    let diff = s.iter().zip(t).filter(|(a, b)| a != b).count();
    Ok(Rational::new(diff as i64, s.len() as i64))
}

/// `‖f‖_S = Σ_s |{x : f(s·x) ≠ s·f(x)}| / n` for a bijection `f: X → Y`.
pub fn norm_s(x: &ActionSpace, y: &ActionSpace, f: &[usize]) -> Result<Rational> {
    if x.n() != y.n() || f.len() != x.n() || x.m() != y.m() {
        return Err(Error::Argument("norm_S needs a bijection between equal-size spaces".into()));
    }
    let mut seen = vec![false; y.n()];
    for &v in f {
        if v >= y.n() || std::mem::replace(&mut seen[v], true) {
            return Err(Error::Argument("map is not a bijection".into()));
        }
    }
    let mut bad = 0i64;
    for j in 0..x.m() {
        for p in 0..x.n() {
            if f[x.step(p, j, false)] != y.step(f[p], j, false) {
                bad += 1;
            }
        }
    }
    Ok(Rational::new(bad, x.n() as i64))
}
