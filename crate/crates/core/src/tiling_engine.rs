//! Tiles, the greedy per-round packing, the multi-round tiling schedule and
//! the repairs built on top of them.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action_space::{equivariance_points, norm_s, ActionSpace, GammaSet, PartialMap};
use crate::config::Constants;
use crate::error::{Error, Result};
use crate::lattice::{norm1, Lattice};
use crate::presentation::{AbelianPresentation, EquationSet};
use crate::rational::{big, floor_mul, fmt_ratio, serde_ratio, Rational};
use crate::report::Check;
use crate::stability_tools::{tool_a, tool_b, tool_c, ToolAResult, ToolBResult, ToolCResult};

/// A `t`-tile: an injection of the finite `Γ`-set `Y = Z^m/⟨D ∪ 2t·C(D)⟩`
/// into `X` with `f(0) = anchor`.
#[derive(Clone, Debug)]
pub struct Tile {
    pub anchor: usize,
    pub t: i64,
    pub basis: Vec<Vec<i64>>,
    /// `Y`, `P_t^D` and `f_C`; `tool_c.f_c.domain[i]` maps to `image[i]`.
    pub tool_c: Arc<ToolCResult>,
    pub image: Vec<usize>,
    pub eq_count: usize,
    pub checks: Vec<Check>,
}

impl Tile {
    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn map(&self) -> Result<PartialMap<Vec<i64>, usize>> {
        PartialMap::from_pairs(self.tool_c.f_c.domain.iter().cloned().zip(self.image.iter().copied()))
    }
}

/// Radii derived from `t` and the constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Radii {
    /// `⌊6 C_d t⌋`, the Tool A ball.
    pub tool_a: i64,
    /// `max(2·tool_a + 1, β_E)`.
    pub stabilizer: i64,
    /// `⌊2 C_d t⌋`: tile images lie in this ball around the anchor, and the
    /// interference superset uses it.
    pub image: i64,
    /// `⌊C_Box t⌋`.
    pub free_box: i64,
}

fn kind(e: &Error) -> String {
    match e {
        Error::Precondition(s) => s.clone(),
        Error::Budget(_) => "budget".into(),
        Error::Overflow(_) => "overflow".into(),
        other => other.to_string(),
    }
}

/// Per-instance tile builder with caches keyed by the stabilizer lattice.
pub struct Engine<'a> {
    pub x: &'a ActionSpace,
    pub p: &'a AbelianPresentation,
    pub constants: &'a Constants,
    pub budget: u64,
    pub abiding: Vec<bool>,
    tool_b_cache: HashMap<(Vec<Vec<i64>>, i64), std::result::Result<Arc<ToolBResult>, String>>,
    tool_c_cache: HashMap<(Vec<Vec<i64>>, i64), std::result::Result<Arc<ToolCResult>, String>>,
}

impl<'a> Engine<'a> {
    pub fn new(
        x: &'a ActionSpace,
        p: &'a AbelianPresentation,
        e: &EquationSet,
        constants: &'a Constants,
        budget: u64,
    ) -> Result<Engine<'a>> {
        if x.m() != p.m {
            return Err(Error::Argument(format!("instance has m={} but presentation has m={}", x.m(), p.m)));
        }
        let abiding = x.abiding_mask(e)?;
        Ok(Engine { x, p, constants, budget, abiding, tool_b_cache: HashMap::new(), tool_c_cache: HashMap::new() })
    }

    pub fn radii(&self, t: i64) -> Result<Radii> {
        let tool_a = floor_mul(&self.constants.c_d, 6 * t)?;
        let beta = if self.p.m > self.p.d { self.p.beta_e as i64 } else { 0 };
        Ok(Radii {
            tool_a,
            stabilizer: (2 * tool_a + 1).max(beta),
            image: floor_mul(&self.constants.c_d, 2 * t)?,
            free_box: floor_mul(&self.constants.c_box, t)?,
        })
    }

    /// Ranges of `Box_{F_d}(R)·T̂`.
    fn box_ranges(&self, r: i64) -> Vec<(i64, i64)> {
        (0..self.p.m).map(|i| if i < self.p.d { (-r, r) } else { (0, self.p.betas[i - self.p.d] as i64 - 1) }).collect()
    }

    /// `Box_{F_d}(C_Box t)·T̂·x ⊆ X_E`.
    pub fn box_condition(&self, x0: usize, t: i64) -> Result<bool> {
        let r = self.radii(t)?.free_box;
        let ranges = self.box_ranges(r);
        let size = ranges.iter().try_fold(1u64, |acc, (lo, hi)| acc.checked_mul((hi - lo + 1) as u64));
        if size.is_none_or(|s| s > self.budget) {
            return Err(Error::Budget(format!("box of radius {r} exceeds {} points", self.budget)));
        }
        Ok(self.x.walk_box(x0, &ranges, &mut |_, q| self.abiding[q]))
    }

    fn stabilizer_lattice(&self, x0: usize, t: i64) -> Result<Lattice> {
        let r = self.radii(t)?.stabilizer;
        if crate::stability_tools::l1_ball_size(self.p.m, r).is_none_or(|s| s > self.budget) {
            return Err(Error::Budget(format!("stabilizer ball of radius {r} exceeds the budget")));
        }
        Lattice::new(self.p.m, &self.x.stabilizer_vectors(x0, r))
    }

    fn tool_b_for(&mut self, h: &Lattice, t: i64) -> Result<Arc<ToolBResult>> {
        let key = (h.basis().to_vec(), t);
        if !self.tool_b_cache.contains_key(&key) {
            let out = tool_b(h, 2 * t, self.p, &self.constants.c_d, self.constants.binding(), self.budget)
                .map(Arc::new)
                .map_err(|e| kind(&e));
            self.tool_b_cache.insert(key.clone(), out);
        }
        self.tool_b_cache[&key].clone().map_err(Error::Precondition)
    }

    fn tool_c_for(&mut self, d: &[Vec<i64>], t: i64) -> Result<Arc<ToolCResult>> {
        let key = (d.to_vec(), t);
        if !self.tool_c_cache.contains_key(&key) {
            let out = tool_c(self.p.m, d, t, &[1, t], self.budget).map(Arc::new).map_err(|e| kind(&e));
            self.tool_c_cache.insert(key.clone(), out);
        }
        self.tool_c_cache[&key].clone().map_err(Error::Precondition)
    }

    /// The shared tile basis at `x0`, or `None` when the box condition fails
    /// or the construction is rejected.
    pub fn tile_basis(&mut self, x0: usize, t: i64) -> Option<Vec<Vec<i64>>> {
        if !self.box_condition(x0, t).ok()? {
            return None;
        }
        let h = self.stabilizer_lattice(x0, t).ok()?;
        Some(self.tool_b_for(&h, t).ok()?.basis.d.clone())
    }

    /// Builds the tile at `x0`. With `scan` the box condition is checked
    /// here; otherwise the caller has excluded anchors that violate it.
    pub fn single_tile(&mut self, x0: usize, t: i64, scan: bool) -> Result<Tile> {
        if BigRational::from_integer(BigInt::from(t)) < self.constants.t_e {
            return Err(Error::Precondition("t below t_E".into()));
        }
        if scan && !self.box_condition(x0, t)? {
            return Err(Error::Precondition("box around the anchor leaves X_E".into()));
        }
        let a = self.tool_a_at(x0, t)?;
        self.finish_tile(x0, t, &a)
    }

    fn tool_a_at(&self, x0: usize, t: i64) -> Result<ToolAResult> {
        tool_a(self.x, x0, self.radii(t)?.tool_a, self.p, &self.abiding, None, self.budget)
    }

    /// Tools B and C on the stabilizer lattice found by Tool A, composed.
    fn finish_tile(&mut self, x0: usize, t: i64, a: &ToolAResult) -> Result<Tile> {
        let radii = self.radii(t)?;
        let b = self.tool_b_for(&a.h, t)?;
        let c = self.tool_c_for(&b.basis.d, t)?;
        if c.points.iter().any(|v| norm1(v) > radii.image) {
            return Err(Error::Precondition("tile leaves the image ball".into()));
        }
        let mut image = Vec::with_capacity(c.f_c.len());
        for v in &c.f_c.image {
            let w = b.f_b.get(v).ok_or_else(|| Error::Precondition("f_C lands outside f_B".into()))?;
            let q = a.f_a.get(w).ok_or_else(|| Error::Precondition("f_B lands outside f_A".into()))?;
            image.push(*q);
        }
        let f = PartialMap::from_pairs(c.f_c.domain.iter().cloned().zip(image.iter().copied()))?;
        if !f.injective {
            return Err(Error::Precondition("tile map is not injective".into()));
        }
        let eq_count = equivariance_points(&c.y, self.x, &f).len();
        let d = self.p.d as i64;
        let mut checks = a.checks.clone();
        checks.extend(b.checks.iter().cloned());
        checks.extend(c.checks.iter().cloned());
        checks.push(Check::new(
            "tile.eq_bound",
            eq_count as i128 * t as i128 >= (t - d) as i128 * image.len() as i128,
            self.constants.binding(),
        ));
        Ok(Tile { anchor: x0, t, basis: b.basis.d.clone(), tool_c: c, image, eq_count, checks })
    }

    /// Anchors `x` with `Box_{F_d}(C_Box t)·T̂·x ⊄ X_E`.
    pub fn box_violators(&self, t: i64) -> Result<Vec<bool>> {
        let r = self.radii(t)?.free_box;
        let ranges = self.box_ranges(r);
        let per = ranges.iter().try_fold(1u64, |acc, (lo, hi)| acc.checked_mul((hi - lo + 1) as u64));
        let bad: Vec<usize> = (0..self.x.n()).filter(|&q| !self.abiding[q]).collect();
        if per.and_then(|s| s.checked_mul(bad.len() as u64)).is_none_or(|s| s > self.budget) {
            return Err(Error::Budget(format!("box scans of radius {r} exceed {} points", self.budget)));
        }
        let mut mask = vec![false; self.x.n()];
        for y in bad {
            self.x.walk_box_inverse(y, &ranges, &mut |_, q| {
                mask[q] = true;
                true
            });
        }
        Ok(mask)
    }

    /// `A ∪ B(A, ⌊2 C_d t⌋)`, which contains `η_t(A)`.
    pub fn eta_superset(&self, a: &[bool], t: i64) -> Result<Vec<bool>> {
        Ok(self.x.ball_of_set(a, self.radii(t)?.image as u64))
    }

    /// One greedy round: tiles anchored outside `M ∪ η(A)` in ascending order,
    /// keeping each tile whose image misses everything kept so far and `A`.
    pub fn single_iteration(&mut self, covered: &[bool], t: i64) -> Result<Iteration> {
        let n = self.x.n();
        let m_mask = self.box_violators(t)?;
        let eta = self.eta_superset(covered, t)?;
        let mut used = covered.to_vec();
        let mut tiles = Vec::new();
        let mut rejections: BTreeMap<String, usize> = BTreeMap::new();
        let candidates: Vec<usize> = (0..n).filter(|&q| !m_mask[q] && !eta[q]).collect();
        // Tool A is pure per anchor, so each chunk is built in parallel and
        // then scanned in order; the result matches a sequential scan.
        for chunk in candidates.chunks(256) {
            let todo: Vec<usize> = chunk.iter().copied().filter(|&q| !used[q]).collect();
            let built: Vec<Result<ToolAResult>> = todo.par_iter().map(|&q| self.tool_a_at(q, t)).collect();
            let skipped = chunk.len() - todo.len();
            *rejections.entry("anchor already covered".into()).or_default() += skipped;
            for (x0, a) in todo.into_iter().zip(built) {
                if used[x0] {
                    *rejections.entry("anchor already covered".into()).or_default() += 1;
                    continue;
                }
                match a.and_then(|a| self.finish_tile(x0, t, &a)) {
                    Ok(tile) => {
                        if tile.image.iter().any(|&q| used[q]) {
                            *rejections.entry("overlaps an accepted tile".into()).or_default() += 1;
                            continue;
                        }
                        for &q in &tile.image {
                            used[q] = true;
                        }
                        tiles.push(tile);
                    }
                    Err(e) => *rejections.entry(kind(&e)).or_default() += 1,
                }
            }
        }
        let image_total: usize = tiles.iter().map(Tile::len).sum();
        let eq_total: usize = tiles.iter().map(|t| t.eq_count).sum();
        let bad = self.abiding.iter().filter(|&&b| !b).count();
        let eta_size = eta.iter().filter(|&&b| b).count();
        let d = self.p.d;
        let mut checks = vec![
            Check::new(
                "single_iteration.disjoint_from_covered",
                tiles.iter().all(|tl| tl.image.iter().all(|&q| !covered[q])),
                true,
            ),
            Check::new(
                "single_iteration.eq_bound",
                eq_total as i128 * t as i128 >= (t - d as i64) as i128 * image_total as i128,
                self.constants.binding(),
            ),
        ];
        // 2^d |Im| ≥ n − (3 C_Box t)^d |Tor| |X∖X_E| − |η|, with the superset for η
        let three_box = BigRational::from_integer(BigInt::from(3 * t)) * &self.constants.c_box;
        let rhs = BigRational::from_integer(BigInt::from(n as u64))
            - num::pow(three_box, d) * BigRational::from_integer(BigInt::from(self.p.tor_order() * bad as u64))
            - BigRational::from_integer(BigInt::from(eta_size as u64));
        let lhs = BigRational::from_integer(BigInt::from((image_total as u64) << d));
        checks.push(Check::new("single_iteration.image_size", lhs >= rhs, false));
        Ok(Iteration {
            t,
            candidates: candidates.len(),
            m_size: m_mask.iter().filter(|&&b| b).count(),
            eta_size,
            rejections,
            image_total,
            eq_total,
            tiles,
            checks,
        })
    }

    /// Rounds `i = 1, 2, …` with `t_i = b_i / H_i`, while `t_i ≥ 2 t_E`.
    /// `delta = None` uses `max(|X∖X_E|/n, 1/n)`.
    pub fn tiling_algorithm(&mut self, delta: Option<BigRational>) -> Result<Tiling> {
        let n = self.x.n();
        let bad = self.abiding.iter().filter(|&&b| !b).count();
        let ratio = BigRational::new(BigInt::from(bad.max(1) as u64), BigInt::from(n as u64));
        let delta = match delta {
            Some(dl) if dl.is_zero() => ratio,
            Some(dl) if dl < ratio => {
                return Err(Error::Argument(format!("delta below |X \\ X_E|/n = {}", fmt_ratio(&ratio))))
            }
            Some(dl) => dl,
            None => ratio,
        };
        let schedule = Schedule::new(self.p, self.constants, &delta, n);
        let mut covered = vec![false; n];
        let mut rounds = Vec::new();
        let mut tiles = Vec::new();
        let mut stop = String::new();
        for i in 1.. {
            let b = n - covered.iter().filter(|&&c| c).count();
            if b == 0 {
                stop = "all points covered".into();
                break;
            }
            if !schedule.continues(i, b) {
                stop = format!("t_{i} < 2 t_E");
                break;
            }
            let t = schedule.floor_t(i, b);
            let iter = self.single_iteration(&covered, t)?;
            for tile in &iter.tiles {
                for &q in &tile.image {
                    covered[q] = true;
                }
            }
            rounds.push(RoundStats {
                round: i,
                b,
                t_approx: schedule.t_approx(i, b),
                t,
                tiles: iter.tiles.len(),
                image: iter.image_total,
                eq: iter.eq_total,
                candidates: iter.candidates,
                m_size: iter.m_size,
                eta_size: iter.eta_size,
                rejections: iter.rejections,
                checks: iter.checks,
            });
            tiles.extend(iter.tiles);
        }
        Ok(Tiling { delta: fmt_ratio(&delta), h_power_one: schedule.h_pow_d_1.to_string(), rounds, stop, tiles })
    }
}

#[derive(Clone, Debug)]
pub struct Iteration {
    pub t: i64,
    pub candidates: usize,
    pub m_size: usize,
    pub eta_size: usize,
    pub rejections: BTreeMap<String, usize>,
    pub image_total: usize,
    pub eq_total: usize,
    pub tiles: Vec<Tile>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub b: usize,
    pub t_approx: f64,
    pub t: i64,
    pub tiles: usize,
    pub image: usize,
    pub eq: usize,
    pub candidates: usize,
    pub m_size: usize,
    pub eta_size: usize,
    pub rejections: BTreeMap<String, usize>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug)]
pub struct Tiling {
    pub delta: String,
    /// `H_1^d`, exact.
    pub h_power_one: String,
    pub rounds: Vec<RoundStats>,
    pub stop: String,
    pub tiles: Vec<Tile>,
}

/// The schedule `H_i = 24 C_Box |Tor|^{1/d} δ^{1/d} n h^{i−1}`, compared
/// through `d`-th powers so every decision is exact.
pub struct Schedule {
    d: usize,
    two_t_e: BigRational,
    /// `H_1^d`.
    h_pow_d_1: BigRational,
    /// `h^d`.
    step: BigRational,
}

impl Schedule {
    pub fn new(p: &AbelianPresentation, c: &Constants, delta: &BigRational, n: usize) -> Schedule {
        let d = p.d;
        let base = BigRational::from_integer(BigInt::from(24 * n as u64)) * &c.c_box;
        let h_pow_d_1 = num::pow(base, d) * BigRational::from_integer(BigInt::from(p.tor_order())) * delta;
        Schedule { d, two_t_e: &c.t_e * BigRational::from_integer(BigInt::from(2)), h_pow_d_1, step: num::pow(c.h.clone(), d) }
    }

    /// `H_i^d`.
    pub fn h_pow_d(&self, i: usize) -> BigRational {
        &self.h_pow_d_1 * num::pow(self.step.clone(), i - 1)
    }

    fn b_pow(&self, b: usize) -> BigRational {
        BigRational::from_integer(num::pow(BigInt::from(b as u64), self.d))
    }

    /// `t_i ≥ 2 t_E`.
    pub fn continues(&self, i: usize, b: usize) -> bool {
        self.b_pow(b) >= num::pow(self.two_t_e.clone(), self.d) * self.h_pow_d(i)
    }

    /// `⌊t_i⌋`.
    pub fn floor_t(&self, i: usize, b: usize) -> i64 {
        let hp = self.h_pow_d(i);
        let bp = self.b_pow(b);
        let fits = |s: i64| BigRational::from_integer(num::pow(BigInt::from(s), self.d)) * &hp <= bp;
        let mut s = self.t_approx(i, b).floor().max(0.0) as i64;
        while s > 0 && !fits(s) {
            s -= 1;
        }
        while fits(s + 1) {
            s += 1;
        }
        s
    }

    pub fn t_approx(&self, i: usize, b: usize) -> f64 {
        let hp = self.h_pow_d(i).to_f64().unwrap_or(f64::INFINITY);
        b as f64 / hp.powf(1.0 / self.d as f64)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepairReport {
    pub n: usize,
    pub m: usize,
    pub constants: Constants,
    #[serde(with = "serde_ratio")]
    pub local_defect_before: Rational,
    #[serde(with = "serde_ratio")]
    pub distance: Rational,
    /// Distance of the all-identity repair.
    #[serde(with = "serde_ratio")]
    pub baseline_distance: Rational,
    pub eq_total: usize,
    pub covered: usize,
    pub tiles: usize,
    pub short_circuit: bool,
    pub delta: Option<String>,
    pub stop: Option<String>,
    pub rounds: Vec<RoundStats>,
    pub checks: Vec<Check>,
}

#[derive(Clone, Debug)]
pub struct RepairResult {
    pub psi: ActionSpace,
    pub report: RepairReport,
}

fn identity_perms(n: usize, m: usize) -> Vec<Vec<usize>> {
    vec![(0..n).collect(); m]
}

/// Tiles, then lets each tile image carry the action of its `Γ`-set and
/// fixes every uncovered point.
pub fn repair(
    phi: &ActionSpace,
    p: &AbelianPresentation,
    e: &EquationSet,
    constants: &Constants,
    delta: Option<BigRational>,
    budget: u64,
) -> Result<RepairResult> {
    let (n, m) = (phi.n(), phi.m());
    let defect = phi.local_defect(e)?;
    let baseline_distance = phi.distance(&ActionSpace::trivial(n, m))?;
    let mut report = RepairReport {
        n,
        m,
        constants: constants.clone(),
        local_defect_before: defect.local_defect,
        distance: Rational::zero(),
        baseline_distance,
        eq_total: n,
        covered: n,
        tiles: 0,
        short_circuit: true,
        delta: None,
        stop: None,
        rounds: Vec::new(),
        checks: Vec::new(),
    };
    if defect.local_defect.is_zero() {
        return Ok(RepairResult { psi: phi.clone(), report });
    }
    let mut engine = Engine::new(phi, p, e, constants, budget)?;
    let tiling = engine.tiling_algorithm(delta)?;
    let mut perms = identity_perms(n, m);
    let mut eq_total = 0;
    let mut covered = 0;
    for tile in &tiling.tiles {
        let y = &tile.tool_c.y;
        let f_c = &tile.tool_c.f_c;
        for (i, pt) in f_c.domain.iter().enumerate() {
            for (j, perm) in perms.iter_mut().enumerate() {
                let k = f_c.index_of(&y.act(pt, j, false)).expect("tile domain is all of Y");
                perm[tile.image[i]] = tile.image[k];
            }
        }
        eq_total += tile.eq_count;
        covered += tile.len();
    }
    let psi = ActionSpace::new(perms)?;
    if !psi.is_solution(e)? {
        return Err(Error::Precondition("assembled action is not an exact solution".into()));
    }
    let distance = phi.distance(&psi)?;
    let id: Vec<usize> = (0..n).collect();
    let mut checks = vec![
        Check::new("repair.exact_solution", true, true),
        Check::new("repair.distance_is_norm_s", norm_s(phi, &psi, &id)? == distance, true),
        Check::new(
            "repair.distance_vs_eq",
            distance * Rational::from_integer(n as i64) <= Rational::from_integer((m * (n - eq_total)) as i64),
            true,
        ),
        Check::new(
            "repair.defect_vs_distance",
            big(defect.local_defect) <= big(distance) * BigRational::from_integer(BigInt::from(e.total_length() as u64)),
            true,
        ),
    ];
    for r in &tiling.rounds {
        checks.extend(r.checks.iter().cloned());
    }
    for tile in &tiling.tiles {
        checks.extend(tile.checks.iter().cloned());
    }
    report.distance = distance;
    report.eq_total = eq_total;
    report.covered = covered;
    report.tiles = tiling.tiles.len();
    report.short_circuit = false;
    report.delta = Some(tiling.delta);
    report.stop = Some(tiling.stop);
    report.rounds = tiling.rounds;
    report.checks = crate::report::summarize(&checks);
    Ok(RepairResult { psi, report })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuotientReport {
    pub n: usize,
    pub m: usize,
    /// `|Z_{E2}|`.
    pub abiding: usize,
    pub orbits_kept: usize,
    pub orbits_reset: usize,
    #[serde(with = "serde_ratio")]
    pub distance: Rational,
    pub checks: Vec<Check>,
}

/// Keeps the orbits of an exact solution `z` on which every word of `e2`
/// acts trivially and resets every other orbit to the trivial action.
pub fn repair_via_quotient(
    z: &ActionSpace,
    e1: &EquationSet,
    e2: &EquationSet,
) -> Result<(ActionSpace, QuotientReport)> {
    if !z.is_solution(e1)? {
        return Err(Error::Precondition("input is not an exact solution of the base equations".into()));
    }
    let (n, m) = (z.n(), z.m());
    let mask = z.abiding_mask(e2)?;
    let abiding = mask.iter().filter(|&&b| b).count();
    let mut orbit = vec![usize::MAX; n];
    let mut perms = identity_perms(n, m);
    let (mut kept, mut reset) = (0, 0);
    let mut orbits_are_unions = true;
    for start in 0..n {
        if orbit[start] != usize::MAX {
            continue;
        }
        let id = kept + reset;
        orbit[start] = id;
        let mut members = vec![start];
        let mut k = 0;
        while k < members.len() {
            let q = members[k];
            k += 1;
            for j in 0..m {
                for inv in [false, true] {
                    let r = z.step(q, j, inv);
                    if orbit[r] == usize::MAX {
                        orbit[r] = id;
                        members.push(r);
                    }
                }
            }
        }
        let all = members.iter().all(|&q| mask[q]);
        orbits_are_unions &= all || members.iter().all(|&q| !mask[q]);
        if all {
            kept += 1;
            for &q in &members {
                for (j, perm) in perms.iter_mut().enumerate() {
                    perm[q] = z.step(q, j, false);
                }
            }
        } else {
            reset += 1;
        }
    }
    let psi = ActionSpace::new(perms)?;
    let both = EquationSet::custom(e1.words.iter().chain(&e2.words).cloned().collect())?;
    let distance = z.distance(&psi)?;
    let checks = vec![
        Check::new("quotient.exact_solution", psi.is_solution(&both)?, true),
        Check::new("quotient.abiding_is_union_of_orbits", orbits_are_unions, true),
        Check::new(
            "quotient.linear_bound",
            distance * Rational::from_integer(n as i64) <= Rational::from_integer((m * (n - abiding)) as i64),
            true,
        ),
    ];
    let report = QuotientReport { n, m, abiding, orbits_kept: kept, orbits_reset: reset, distance, checks };
    Ok((psi, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_space::tests::torus;
    use crate::config::ConstantOverrides;
    use crate::presentation::{build_presentation, commutator_equations, Word};
    use crate::rational::parse_big_rational;

    const B: u64 = 20_000_000;

    fn scaled(p: &AbelianPresentation, c_d: &str, c_box: &str, t_e: &str) -> Constants {
        let o = ConstantOverrides {
            c_d: Some(parse_big_rational(c_d).unwrap()),
            c_box: Some(parse_big_rational(c_box).unwrap()),
            t_e: Some(parse_big_rational(t_e).unwrap()),
            h: Some(parse_big_rational("2").unwrap()),
        };
        Constants::scaled(p, &o).unwrap()
    }

    #[test]
    fn tile_on_torus() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = commutator_equations(&p);
        let c = scaled(&p, "1", "1", "2");
        let x = torus(60, 60);
        let mut eng = Engine::new(&x, &p, &e, &c, B).unwrap();
        let tile = eng.single_tile(0, 4, true).unwrap();
        assert!(tile.basis.is_empty());
        assert_eq!(tile.len(), 64);
        // the wrap-around edges of Y = Z²/8Z² are not equivariant
        assert_eq!(tile.eq_count, 49);
        assert!(tile.checks.iter().filter(|k| !k.holds).all(|k| k.name == "tool_b.parallelotope_in_ball" && !k.binding));
        assert_eq!(eng.tile_basis(0, 4), eng.tile_basis(57, 4));
        assert!(eng.single_tile(0, 1, true).is_err());
    }

    #[test]
    fn tile_on_small_torus_wraps() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = commutator_equations(&p);
        let c = scaled(&p, "10", "1", "2");
        let x = torus(5, 7);
        let mut eng = Engine::new(&x, &p, &e, &c, B).unwrap();
        let tile = eng.single_tile(3, 3, true).unwrap();
        assert_eq!(Lattice::new(2, &tile.basis).unwrap(), Lattice::new(2, &[vec![5, 0], vec![0, 7]]).unwrap());
        let small = scaled(&p, "1", "1", "2");
        let mut eng = Engine::new(&x, &p, &e, &small, B).unwrap();
        assert!(eng.single_tile(3, 3, true).is_err());
        assert_eq!(tile.len(), 35);
        assert_eq!(tile.eq_count, 35);
    }

    #[test]
    fn eta_superset_examples() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = commutator_equations(&p);
        let c = scaled(&p, "1/2", "1", "1");
        let x = torus(6, 6);
        let eng = Engine::new(&x, &p, &e, &c, B).unwrap();
        assert!(eng.eta_superset(&vec![false; 36], 1).unwrap().iter().all(|&b| !b));
        let mut a = vec![false; 36];
        a[0] = true;
        let ball: Vec<usize> = (0..36).filter(|&q| eng.eta_superset(&a, 1).unwrap()[q]).collect();
        assert_eq!(ball, x.ball(0, 1));
    }

    #[test]
    fn schedule_exact() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let c = scaled(&p, "1", "1", "2");
        // δ = 3/n on a 32×32 torus: t_1 = √1024 / (24√3) < 1
        let n = 1024;
        let s = Schedule::new(&p, &c, &BigRational::new(3.into(), BigInt::from(n as u64)), n);
        assert!(!s.continues(1, n));
        assert_eq!(s.floor_t(1, n), 0);
        let c = scaled(&p, "1", "1/100", "2");
        let s = Schedule::new(&p, &c, &BigRational::new(1.into(), BigInt::from(n as u64)), n);
        // H_1 = 24/100·32 = 7.68, t_1 = 133.3
        assert_eq!(s.floor_t(1, n), 133);
        assert_eq!(s.floor_t(2, n), 66);
    }

    #[test]
    fn repair_short_circuits_solutions() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = commutator_equations(&p);
        let x = torus(4, 4);
        let r = repair(&x, &p, &e, &Constants::certified(&p), None, B).unwrap();
        assert_eq!(r.psi, x);
        assert!(r.report.short_circuit);
        assert!(r.report.distance.is_zero());
    }

    #[test]
    fn repair_perturbed_torus() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = commutator_equations(&p);
        let mut perms = torus(100, 100).perms();
        perms[0].swap(5, 5050);
        let phi = ActionSpace::new(perms).unwrap();
        let c = scaled(&p, "1", "1/4", "2");
        let r = repair(&phi, &p, &e, &c, None, B).unwrap();
        assert!(r.psi.is_solution(&e).unwrap());
        assert!(r.report.tiles > 0);
        assert!(r.report.distance < r.report.baseline_distance);
        assert!(r.report.checks.iter().filter(|k| k.binding).all(|k| k.holds), "{:?}", r.report.checks);
        let cert = repair(&phi, &p, &e, &Constants::certified(&p), None, B).unwrap();
        assert!(cert.report.rounds.is_empty());
        assert_eq!(cert.report.distance, cert.report.baseline_distance);
    }

    #[test]
    fn repair_with_torsion() {
        let p = build_presentation(2, 1, &[3]).unwrap();
        let e = commutator_equations(&p);
        // three 200-cycles for e_1, permuted cyclically by e_2
        let n = 600;
        let p0: Vec<usize> = (0..n).map(|q| (q / 200) * 200 + (q % 200 + 1) % 200).collect();
        let p1: Vec<usize> = (0..n).map(|q| (q + 200) % n).collect();
        let mut perms = vec![p0, p1];
        perms[0].swap(0, 1);
        let phi = ActionSpace::new(perms).unwrap();
        let c = scaled(&p, "1", "1/4", "2");
        let r = repair(&phi, &p, &e, &c, None, B).unwrap();
        assert!(r.psi.is_solution(&e).unwrap());
        assert!(r.report.tiles > 0, "{:?}", r.report.rounds);
    }

    #[test]
    fn quotient_repair_cycles() {
        let p = build_presentation(1, 1, &[]).unwrap();
        let e1 = commutator_equations(&p);
        let e2 = EquationSet::custom(vec![Word::power(0, 6)]).unwrap();
        // cycles of length 3, 6 and 4
        let mut perm = Vec::new();
        let mut base = 0;
        for len in [3usize, 6, 4] {
            perm.extend((0..len).map(|i| base + (i + 1) % len));
            base += len;
        }
        let z = ActionSpace::new(vec![perm]).unwrap();
        let (psi, rep) = repair_via_quotient(&z, &e1, &e2).unwrap();
        assert_eq!(rep.orbits_kept, 2);
        assert_eq!(rep.orbits_reset, 1);
        assert_eq!(rep.abiding, 9);
        assert!(rep.checks.iter().all(|k| k.holds));
        assert_eq!(psi.perm(0)[9..], [9, 10, 11, 12]);
        let (same, rep) = repair_via_quotient(&z, &e1, &EquationSet::custom(vec![Word::power(0, 12)]).unwrap()).unwrap();
        assert_eq!(same, z);
        assert!(rep.distance.is_zero());
    }
}
