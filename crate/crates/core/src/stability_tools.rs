//! Tools A, B and C: certified partial maps between action spaces and lattice
//! quotients `Z^m / H`.

use std::cell::RefCell;

use num::bigint::BigInt;
use num::rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action_space::{check_subgraph_iso, equivariance_points, f_map, ActionSpace, PartialMap};
use crate::error::{Error, Result};
use crate::lattice::{
    express, integer_kernel, norm1, reduced_basis, set_norm1, short_basis_in_window, short_vectors, Lattice,
    Parallelotope, Quotient, RankTracker,
};
use crate::presentation::{AbelianPresentation, Letter, Word};
use crate::rational::floor_mul;
use crate::report::Check;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowStatus {
    /// `⟨D⟩ ∩ B(R) = H ∩ B(R)` checked by enumerating `H ∩ B(R)`.
    Verified,
    /// Enumeration exceeded the budget; the construction guarantees it.
    CertifiedByConstruction,
}

#[derive(Clone, Debug)]
pub struct GoodBasis {
    pub d: Vec<Vec<i64>>,
    /// The scale `i` with `t_i = t (7d²)^i` at which the rank of short
    /// projected vectors stabilized.
    pub scale_index: usize,
    pub window_radius: i64,
    pub window: WindowStatus,
    pub checks: Vec<Check>,
}

fn pow_i128(b: i128, e: usize) -> Option<i128> {
    (0..e).try_fold(1i128, |acc, _| acc.checked_mul(b))
}

/// Independent lattice vectors realizing the L1 successive minima, with
/// their norms, in order.
fn l1_minima(lat: &Lattice, budget: u64) -> Result<Vec<(i64, Vec<i64>)>> {
    if lat.rank() == 0 {
        return Ok(Vec::new());
    }
    let b = reduced_basis(lat, budget)?;
    let bound = b.iter().map(|v| norm1(v)).max().unwrap();
    let mut vs: Vec<Vec<i64>> = short_vectors(lat.basis(), bound as i128 * bound as i128, budget)?
        .into_iter()
        .filter(|v| norm1(v) <= bound)
        .collect();
    vs.sort_by(|x, y| norm1(x).cmp(&norm1(y)).then_with(|| x.cmp(y)));
    let mut tr = RankTracker::default();
    let mut out = Vec::new();
    for v in vs {
        if tr.add(&v) {
            out.push((norm1(&v), v));
            if out.len() == lat.rank() {
                break;
            }
        }
    }
    if out.len() != lat.rank() {
        return Err(Error::Precondition("L1 minima enumeration did not reach full rank".into()));
    }
    Ok(out)
}

/// `H ∩ span_R(w)`.
fn saturate(h: &Lattice, w: &[Vec<i64>]) -> Result<Lattice> {
    let m = h.ambient();
    if w.is_empty() {
        return Ok(Lattice::zero(m));
    }
    let normals = integer_kernel(w, m)?;
    if normals.is_empty() {
        return Ok(h.clone());
    }
    // c·B·Nᵀ = 0 for the Hermite rows B of H
    let rows: Vec<Vec<i64>> = h
        .basis()
        .iter()
        .map(|b| normals.iter().map(|n| b.iter().zip(n).map(|(x, y)| x * y).sum()).collect())
        .collect();
    let relations = integer_kernel(&transpose(&rows, normals.len()), rows.len())?;
    let gens: Vec<Vec<i64>> = relations
        .iter()
        .map(|c| {
            (0..m).map(|j| c.iter().zip(h.basis()).map(|(ci, b)| ci * b[j]).sum()).collect()
        })
        .collect();
    Lattice::new(m, &gens)
}

fn transpose(rows: &[Vec<i64>], cols: usize) -> Vec<Vec<i64>> {
    (0..cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

/// A linearly independent `D ⊆ H` of short vectors with `K ≤ ⟨D⟩` that
/// agrees with `H` on the L1 ball of radius `2(‖D‖₁ + dt) + 1`.
///
/// Projects to the free coordinates, finds the first scale `t_i` where the
/// rank of short projected vectors stops growing, takes a short basis of the
/// saturated span there, lifts it through the torsion box, and appends a
/// short basis of `H` restricted to the torsion coordinates.
pub fn good_basis(h: &Lattice, t: i64, p: &AbelianPresentation, budget: u64) -> Result<GoodBasis> {
    let (m, d) = (p.m, p.d);
    if h.ambient() != m {
        return Err(Error::Argument("lattice rank does not match the presentation".into()));
    }
    if !p.k_generators().iter().all(|k| h.contains(k)) {
        return Err(Error::Precondition("K is not contained in H".into()));
    }
    if t < 1 {
        return Err(Error::Argument("t must be positive".into()));
    }
    let hbar = h.head_projection(d)?;
    let minima = l1_minima(&hbar, budget)?;
    let step = 7 * (d * d) as i128;
    let scale = |i: usize| pow_i128(step, i).and_then(|s| s.checked_mul(t as i128));
    let rank_at = |s: i128| minima.iter().filter(|(n, _)| *n as i128 <= s).count();
    let mut chosen = None;
    for i in 0..=d {
        let (a, b) = (scale(i).ok_or(Error::Overflow("scale"))?, scale(i + 1).ok_or(Error::Overflow("scale"))?);
        if rank_at(a) == rank_at(b) {
            chosen = Some((i, a));
            break;
        }
    }
    let (scale_index, ti) = chosen.expect("rank cannot grow d+1 times in Z^d");
    let ti = i64::try_from(ti).map_err(|_| Error::Overflow("scale"))?;
    let short: Vec<Vec<i64>> = minima.iter().take(rank_at(ti as i128)).map(|(_, v)| v.clone()).collect();
    let g = saturate(&hbar, &short)?;
    if g.rank() != short.len() {
        return Err(Error::Precondition("saturated span has the wrong rank".into()));
    }
    let dbar0 = short_basis_in_window(&g, ti, budget)?;

    // lift through H, landing in the torsion box
    let heads: Vec<Vec<i64>> = h.basis().iter().map(|r| r[..d].to_vec()).collect();
    let mut basis = Vec::with_capacity(h.rank());
    for hb in &dbar0 {
        let c = express(d, &heads, hb)?.ok_or_else(|| Error::Precondition("projection lost a vector".into()))?;
        let mut v = vec![0i64; m];
        for (ci, row) in c.iter().zip(h.basis()) {
            for j in 0..m {
                v[j] = ci
                    .checked_mul(row[j])
                    .and_then(|x| v[j].checked_add(x))
                    .ok_or(Error::Overflow("lift"))?;
            }
        }
        for j in d..m {
            v[j] = v[j].rem_euclid(p.betas[j - d] as i64);
        }
        basis.push(v);
    }
    if m > d {
        let tail = h.tail_intersection(d);
        for v in short_basis_in_window(&tail, p.beta_e as i64, budget)? {
            let mut w = vec![0i64; d];
            w.extend(v);
            basis.push(w);
        }
    }
    let span = Lattice::new(m, &basis)?;
    if span.rank() != basis.len() || !h.contains_lattice(&span) {
        return Err(Error::Precondition("good basis is not an independent subset of H".into()));
    }
    let mut checks = Vec::new();
    let k_ok = p.k_generators().iter().all(|k| span.contains(k));
    checks.push(Check::new("good_basis.k_in_span", k_ok, true));
    let norm = set_norm1(&basis);
    let limit = BigInt::from(2u32) * num::pow(BigInt::from(7u32), d) * num::pow(BigInt::from(d as u64), 2 * d + 2);
    let holds = BigInt::from(norm) <= limit * BigInt::from(t);
    checks.push(Check::new("good_basis.norm_bound", holds, BigInt::from(t) >= p.t_e));

    let radius = 2 * (norm + d as i64 * t) + 1;
    let window = match short_vectors(h.basis(), radius as i128 * radius as i128, budget.min(5_000_000)) {
        Ok(vs) => {
            let ok = vs.iter().filter(|v| norm1(v) <= radius).all(|v| span.contains(v));
            checks.push(Check::new("good_basis.window", ok, BigInt::from(t) >= p.t_e));
            WindowStatus::Verified
        }
        Err(Error::Budget(_)) => WindowStatus::CertifiedByConstruction,
        Err(e) => return Err(e),
    };
    Ok(GoodBasis { d: basis, scale_index, window_radius: radius, window, checks })
}

#[derive(Clone, Debug)]
pub struct ToolBResult {
    pub basis: GoodBasis,
    pub parallelotope: Parallelotope,
    pub points: Vec<Vec<i64>>,
    pub u: Quotient,
    pub v: Quotient,
    pub f_b: PartialMap<Vec<i64>, Vec<i64>>,
    pub checks: Vec<Check>,
}

/// `f_B = F_{P_t^D, u0, v0}` from `Z^m/⟨D⟩` into `Z^m/H`, with `D` from
/// [`good_basis`]. `binding` says whether `c_d` is the paper constant.
pub fn tool_b(
    h: &Lattice,
    t: i64,
    p: &AbelianPresentation,
    c_d: &BigRational,
    binding: bool,
    budget: u64,
) -> Result<ToolBResult> {
    let basis = good_basis(h, t, p, budget)?;
    let parallelotope = Parallelotope::new(p.m, &basis.d, t)?;
    let points = parallelotope.points(budget)?;
    let mut checks = basis.checks.clone();
    let radius = floor_mul(c_d, t)?;
    let inside = points.iter().all(|x| norm1(x) <= radius);
    checks.push(Check::new("tool_b.parallelotope_in_ball", inside, binding && BigInt::from(t) >= p.t_e));
    let u = Quotient::new(Lattice::new(p.m, &basis.d)?);
    let v = Quotient::new(h.clone());
    let f_b = f_map(&u, &u.zero(), &v, &v.zero(), &points)?;
    if !f_b.injective || !check_subgraph_iso(&u, &v, &f_b) {
        return Err(Error::Precondition("f_B is not a subgraph isomorphism".into()));
    }
    Ok(ToolBResult { basis, parallelotope, points, u, v, f_b, checks })
}

#[derive(Clone, Debug)]
pub struct ToolCResult {
    pub parallelotope: Parallelotope,
    pub points: Vec<Vec<i64>>,
    pub y: Quotient,
    pub v: Quotient,
    pub f_c: PartialMap<Vec<i64>, Vec<i64>>,
    pub y_size: u64,
    pub eq_count: usize,
    /// `(t̃, |B_V(Im f_C, t̃)|)`.
    pub growth: Vec<(i64, usize)>,
    pub checks: Vec<Check>,
}

/// Tool C for `H = ⟨D0⟩` with the given basis: `Y = Z^m/⟨D0 ∪ 2t·C(D0)⟩` and
/// `f_C = F_{P_t, y0, v0}`. Checks the equivariance bound and the ball growth
/// bound for each radius in `growth_radii`.
pub fn tool_c(m: usize, d0: &[Vec<i64>], t: i64, growth_radii: &[i64], budget: u64) -> Result<ToolCResult> {
    let parallelotope = Parallelotope::new(m, d0, t)?;
    let points = parallelotope.points(budget)?;
    let k = d0.len();
    let mut gens = d0.to_vec();
    for &i in &parallelotope.strong {
        let mut e = vec![0i64; m];
        e[i] = 2 * t;
        gens.push(e);
    }
    let y = Quotient::new(Lattice::new(m, &gens)?);
    let y_size = y.lattice.index().ok_or_else(|| Error::Precondition("Y is infinite".into()))?;
    let v = Quotient::new(Lattice::new(m, d0)?);
    let f_c = f_map(&y, &y.zero(), &v, &v.zero(), &points)?;
    let mut checks = Vec::new();
    let bijective_domain = f_c.injective && f_c.len() as u64 == y_size && points.len() as u64 == y_size;
    if !bijective_domain {
        return Err(Error::Precondition("f_C is not an injection defined on all of Y".into()));
    }
    let eq_count = equivariance_points(&y, &v, &f_c).len();
    let free = (m - k) as i128;
    let eq_ok = eq_count as i128 * t as i128 >= (t as i128 - free) * y_size as i128;
    checks.push(Check::new("tool_c.eq_bound", eq_ok, true));
    let mut growth = Vec::new();
    for &tt in growth_radii {
        let ball = v.ball_of_set(&f_c.image, tt as u64, budget as usize)?;
        let lhs = BigInt::from(ball.len()) * num::pow(BigInt::from(t), (m - k) as usize);
        let rhs = num::pow(BigInt::from(t + tt), (m - k) as usize) * BigInt::from(f_c.len());
        checks.push(Check::new("tool_c.ball_growth", lhs <= rhs, true));
        growth.push((tt, ball.len()));
    }
    Ok(ToolCResult { parallelotope, points, y, v, f_c, y_size, eq_count, growth, checks })
}

#[derive(Clone, Debug)]
pub struct ToolAResult {
    pub h: Lattice,
    pub stabilizer_radius: i64,
    pub r: i64,
    /// From `B_U(u_A, r)` (coset representatives) into `X`.
    pub f_a: PartialMap<Vec<i64>, usize>,
    pub checks: Vec<Check>,
}

/// `|{v ∈ Z^m : ‖v‖₁ ≤ r}| = Σ_k 2^k C(m,k) C(r,k)`.
pub fn l1_ball_size(m: usize, r: i64) -> Option<u64> {
    let mut total: u64 = 0;
    let (mut cm, mut cr, mut pow2): (u64, u64, u64) = (1, 1, 1);
    for k in 0..=m.min(r.max(0) as usize) {
        if k > 0 {
            cm = cm * (m - k + 1) as u64 / k as u64;
            cr = cr.checked_mul((r as u64) - k as u64 + 1)? / k as u64;
            pow2 *= 2;
        }
        total = total.checked_add(pow2.checked_mul(cm)?.checked_mul(cr)?)?;
    }
    Some(total)
}

thread_local! {
    static SCRATCH: RefCell<(Vec<u32>, Vec<u32>, u32)> = const { RefCell::new((Vec::new(), Vec::new(), 0)) };
}

/// True iff the given points are exactly `B_X(x0, r)`. Uses per-thread stamp
/// arrays so repeated calls cost `O(|ball|)`.
fn walk_covers_ball(x: &ActionSpace, x0: usize, r: i64, points: impl Iterator<Item = usize>) -> bool {
    SCRATCH.with(|cell| {
        let (image, dist, stamp) = &mut *cell.borrow_mut();
        if image.len() != x.n() || *stamp == u32::MAX {
            *image = vec![0; x.n()];
            *dist = vec![0; x.n()];
            *stamp = 0;
        }
        *stamp += 1;
        let s = *stamp;
        let mut distinct = 0usize;
        for q in points {
            if image[q] != s {
                image[q] = s;
                distinct += 1;
            }
        }
        // BFS over the ball; dist holds stamp for visited points
        let mut frontier = vec![x0];
        dist[x0] = s;
        let mut seen = 0usize;
        for level in 0..=r {
            let mut next = Vec::new();
            for &q in &frontier {
                if image[q] != s {
                    return false;
                }
                seen += 1;
                if level == r {
                    continue;
                }
                for j in 0..x.m() {
                    for inv in [false, true] {
                        let y = x.step(q, j, inv);
                        if dist[y] != s {
                            dist[y] = s;
                            next.push(y);
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        seen == distinct
    })
}

/// Scans `Box_{F_m}(radius) · x0 ⊆ X_E`.
pub fn box_inside_abiding(x: &ActionSpace, x0: usize, radius: i64, abiding: &[bool], budget: u64) -> Result<bool> {
    let side = (2 * radius + 1) as u64;
    if side.checked_pow(x.m() as u32).is_none_or(|v| v > budget) {
        return Err(Error::Budget(format!("box of radius {radius} exceeds {budget} points")));
    }
    let ranges = vec![(-radius, radius); x.m()];
    Ok(x.walk_box(x0, &ranges, &mut |_, q| abiding[q]))
}

/// Tool A: `H` is spanned by the sorted stabilizer vectors of `x0` of L1 norm
/// at most `max(2r+1, β_E)`, and `f_A = F_{B(r), u_A, x0}`. When `box_radius`
/// is given, `Box_{F_m}(box_radius)·x0 ⊆ X_E` is scanned first; otherwise the
/// caller vouches for it.
pub fn tool_a(
    x: &ActionSpace,
    x0: usize,
    r: i64,
    p: &AbelianPresentation,
    abiding: &[bool],
    box_radius: Option<i64>,
    budget: u64,
) -> Result<ToolAResult> {
    if let Some(b) = box_radius {
        if !box_inside_abiding(x, x0, b, abiding, budget)? {
            return Err(Error::Precondition("box around x0 leaves X_E".into()));
        }
    }
    let m = x.m();
    let stabilizer_radius = (2 * r + 1).max(if m > p.d { p.beta_e as i64 } else { 0 });
    if l1_ball_size(m, stabilizer_radius).is_none_or(|s| s > budget) {
        return Err(Error::Budget(format!("L1 ball of radius {stabilizer_radius} exceeds {budget} points")));
    }
    // the image of the sorted-lift walk must be the ball whatever H is
    let mut reached = Vec::new();
    x.walk_l1_ball(x0, r, &mut |_, q| reached.push(q));
    if !walk_covers_ball(x, x0, r, reached.into_iter()) {
        return Err(Error::Precondition("f_A is not a bijection onto the ball".into()));
    }
    let stab = x.stabilizer_vectors(x0, stabilizer_radius);
    let h = Lattice::new(m, &stab)?;
    let mut pairs = Vec::new();
    x.walk_l1_ball(x0, r, &mut |v, q| pairs.push((h.coset_rep(v), q)));
    let f_a = PartialMap::from_pairs(pairs)?;
    if !f_a.injective {
        return Err(Error::Precondition("f_A is not a bijection onto the ball".into()));
    }
    let u = Quotient::new(h.clone());
    if !check_subgraph_iso(&u, x, &f_a) {
        return Err(Error::Precondition("f_A is not a subgraph isomorphism".into()));
    }
    let k_ok = p.k_generators().iter().all(|k| h.contains(k));
    let checks = vec![Check::new("tool_a.k_in_h", k_ok, true)];
    Ok(ToolAResult { h, stabilizer_radius, r, f_a, checks })
}

/// Samples random words of length at most `radius` and checks `w·x0 = ŵ·x0`.
pub fn canonical_action_check(x: &ActionSpace, x0: usize, radius: usize, samples: usize, seed: u64) -> bool {
    if radius == 0 {
        return true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = x.m();
    (0..samples).all(|_| {
        let len = rng.gen_range(1..=radius);
        let w = Word::new((0..len).map(|_| Letter { gen: rng.gen_range(0..m), inv: rng.gen_bool(0.5) }));
        x.apply_word(&w, x0) == x.apply_vector(&w.abelianize(m), x0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_space::tests::torus;
    use crate::presentation::build_presentation;

    const B: u64 = 5_000_000;

    fn lat(rows: &[&[i64]]) -> Lattice {
        Lattice::new(rows[0].len(), &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn good_basis_examples() {
        let p2 = build_presentation(2, 2, &[]).unwrap();
        let g = good_basis(&Lattice::full(2), 2, &p2, B).unwrap();
        assert_eq!(g.d, vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(g.scale_index, 0);
        let p1 = build_presentation(1, 1, &[]).unwrap();
        let g = good_basis(&lat(&[&[5]]), 5, &p1, B).unwrap();
        assert_eq!(g.d, vec![vec![5]]);
        let g = good_basis(&lat(&[&[3, 0], &[0, 3]]), 3, &p2, B).unwrap();
        assert_eq!(set_norm1(&g.d), 6);
        assert_eq!(g.window, WindowStatus::Verified);
        assert!(g.checks.iter().all(|c| c.holds));
    }

    #[test]
    fn good_basis_with_torsion() {
        let p = build_presentation(2, 1, &[4]).unwrap();
        let h = lat(&[&[6, 1], &[0, 4]]);
        let g = good_basis(&h, 8, &p, B).unwrap();
        let span = Lattice::new(2, &g.d).unwrap();
        assert!(span.contains(&[0, 4]));
        assert!((0..4).contains(&g.d[0][1]));
        assert_eq!(g.d[1], vec![0, 4]);
        assert!(g.checks.iter().all(|c| c.holds), "{:?}", g.checks);
        assert!(good_basis(&lat(&[&[1, 0], &[0, 3]]), 8, &p, B).is_err());
    }

    #[test]
    fn tool_c_examples() {
        let c = tool_c(1, &[], 4, &[0, 1, 4], B).unwrap();
        assert_eq!(c.y_size, 8);
        assert_eq!(c.eq_count, 7);
        assert!(c.checks.iter().all(|k| k.holds));
        let c = tool_c(2, &[vec![1, 0]], 3, &[1, 3], B).unwrap();
        assert_eq!(c.y_size, 6);
        assert!(c.eq_count * 3 >= 2 * 6);
        let c = tool_c(2, &[vec![2, 1], vec![0, 3]], 5, &[1], B).unwrap();
        assert_eq!(c.eq_count as u64, c.y_size);
    }

    #[test]
    fn tool_b_on_full_lattice() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let c_d = BigRational::from_integer(p.c_d.clone());
        let b = tool_b(&Lattice::full(2), 2, &p, &c_d, true, B).unwrap();
        assert_eq!(b.points.len(), 1);
        let b = tool_b(&lat(&[&[7, 0], &[0, 7]]), 2, &p, &c_d, true, B).unwrap();
        assert!(b.f_b.injective);
    }

    #[test]
    fn tool_a_on_tori() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let x = torus(9, 9);
        let abiding = vec![true; x.n()];
        let a = tool_a(&x, 0, 3, &p, &abiding, Some(4), B).unwrap();
        assert_eq!(a.h, Lattice::zero(2));
        let a = tool_a(&x, 0, 4, &p, &abiding, None, B).unwrap();
        assert_eq!(a.h, lat(&[&[9, 0], &[0, 9]]));
        assert_eq!(a.f_a.len(), x.ball(0, 4).len());
    }

    #[test]
    fn l1_ball_sizes() {
        assert_eq!(l1_ball_size(2, 3), Some(25));
        assert_eq!(l1_ball_size(3, 1), Some(7));
        assert_eq!(l1_ball_size(1, 0), Some(1));
        assert_eq!(l1_ball_size(3, 4), Some(crate::presentation::l1_ball(3, 4).len() as u64));
    }

    #[test]
    fn canonical_action() {
        let x = torus(6, 7);
        assert!(canonical_action_check(&x, 3, 12, 200, 1));
        assert!(canonical_action_check(&x, 3, 0, 10, 1));
        let bad = ActionSpace::new(vec![vec![1, 0, 2], vec![0, 2, 1]]).unwrap();
        assert!(!canonical_action_check(&bad, 0, 4, 500, 7));
    }
}
