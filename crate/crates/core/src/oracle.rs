//! Brute-force oracles for tiny instances. They share nothing with the
//! repair pipeline beyond reading permutations off an [`ActionSpace`].

use itertools::Itertools;

use crate::action_space::ActionSpace;
use crate::error::{Error, Result};
use crate::presentation::{EquationSet, Word};
use crate::rational::Rational;
use crate::tiling_engine::Engine;

fn apply(perms: &[Vec<usize>], w: &Word, mut x: usize) -> usize {
    // right-to-left, inverses by search (n is tiny)
    for l in w.letters().iter().rev() {
        let p = &perms[l.gen];
        x = if l.inv { p.iter().position(|&v| v == x).expect("permutation") } else { p[x] };
    }
    x
}

fn is_solution(perms: &[Vec<usize>], e: &EquationSet) -> bool {
    let n = perms[0].len();
    e.words.iter().all(|w| (0..n).all(|x| apply(perms, w, x) == x))
}

fn mismatches(a: &[usize], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| **x != **y as usize).count()
}

/// `G_E(Φ)`: the least `d_n(Φ, Ψ)` over all `E`-solutions `Ψ` on the same
/// points, by enumerating every tuple of permutations.
pub fn oracle_g(phi: &ActionSpace, e: &EquationSet, budget: u64) -> Result<Rational> {
    let (n, m) = (phi.n(), phi.m());
    let fact: u64 = (1..=n as u64).product();
    if fact.checked_pow(m as u32).is_none_or(|c| c > budget) || n > 8 || m > 3 {
        return Err(Error::Budget(format!("oracle_G over ({n}!)^{m} tuples exceeds the budget")));
    }
    let all: Vec<Vec<usize>> = (0..n).permutations(n).collect();
    let cost: Vec<Vec<usize>> = (0..m).map(|j| all.iter().map(|p| mismatches(p, phi.perm(j))).collect()).collect();
    let mut best = usize::MAX;
    let mut chosen = vec![0usize; m];
    search(&all, &cost, e, 0, 0, &mut chosen, &mut best);
    Ok(Rational::new(best as i64, n as i64))
}

fn search(
    all: &[Vec<usize>],
    cost: &[Vec<usize>],
    e: &EquationSet,
    j: usize,
    acc: usize,
    chosen: &mut Vec<usize>,
    best: &mut usize,
) {
    if acc >= *best {
        return;
    }
    if j == chosen.len() {
        let perms: Vec<Vec<usize>> = chosen.iter().map(|&i| all[i].clone()).collect();
        if is_solution(&perms, e) {
            *best = acc;
        }
        return;
    }
    // cheapest first so the bound tightens early
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by_key(|&i| cost[j][i]);
    for i in order {
        chosen[j] = i;
        search(all, cost, e, j + 1, acc + cost[j][i], chosen, best);
    }
}

/// `d_S(X, Y) = min_f ‖f‖_S` over bijections `f: X → Y`, by branch and
/// bound on partial bijections.
pub fn oracle_ds(x: &ActionSpace, y: &ActionSpace) -> Result<Rational> {
    let n = x.n();
    if n != y.n() || x.m() != y.m() {
        return Err(Error::Argument("oracle_dS needs spaces of equal shape".into()));
    }
    if n > 8 {
        return Err(Error::Budget("oracle_dS is limited to 8 points".into()));
    }
    let xs: Vec<Vec<usize>> = x.perms();
    let ys: Vec<Vec<usize>> = y.perms();
    let mut f = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut best = usize::MAX;
    ds_search(&xs, &ys, 0, 0, &mut f, &mut used, &mut best);
    Ok(Rational::new(best as i64, n as i64))
}

/// Mismatched edges `p → s·p` with both endpoints among the first `k+1`
/// assigned points, counting only those involving point `k`.
fn new_mismatches(xs: &[Vec<usize>], ys: &[Vec<usize>], f: &[usize], k: usize) -> usize {
    let mut bad = 0;
    for (px, py) in xs.iter().zip(ys) {
        for p in 0..=k {
            let q = px[p];
            if q > k || (p != k && q != k) {
                continue;
            }
            if f[q] != py[f[p]] {
                bad += 1;
            }
        }
    }
    bad
}

fn ds_search(
    xs: &[Vec<usize>],
    ys: &[Vec<usize>],
    k: usize,
    acc: usize,
    f: &mut Vec<usize>,
    used: &mut Vec<bool>,
    best: &mut usize,
) {
    let n = f.len();
    if acc >= *best {
        return;
    }
    if k == n {
        *best = acc;
        return;
    }
    for v in 0..n {
        if used[v] {
            continue;
        }
        f[k] = v;
        used[v] = true;
        let extra = new_mismatches(xs, ys, f, k);
        ds_search(xs, ys, k + 1, acc + extra, f, used, best);
        used[v] = false;
    }
    f[k] = usize::MAX;
}

/// Exact `η_t(A)` for the tiles the engine builds: `A` together with every
/// anchor whose tile meets `A`.
pub fn oracle_eta(engine: &mut Engine, a: &[bool], t: i64) -> Result<Vec<bool>> {
    let n = engine.x.n();
    if n as u64 > engine.budget {
        return Err(Error::Budget("oracle_eta instance too large".into()));
    }
    let mut out = a.to_vec();
    for x0 in 0..n {
        if out[x0] {
            continue;
        }
        if let Ok(tile) = engine.single_tile(x0, t, true) {
            if tile.image.iter().any(|&q| a[q]) {
                out[x0] = true;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConstantOverrides, Constants};
    use crate::instance_gen::{make_xt, random, torus};
    use crate::presentation::{build_presentation, commutator_equations};
    use crate::rational::parse_big_rational;
    use num::Zero;

    #[test]
    fn global_defect_examples() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = commutator_equations(&p);
        assert!(oracle_g(&torus(&[2, 2]).unwrap(), &e, 1 << 20).unwrap().is_zero());
        let x2 = make_xt(2, 2).unwrap();
        let g = oracle_g(&x2, &e, 1 << 20).unwrap();
        assert!(g > Rational::zero());
        let l = x2.local_defect(&e).unwrap().local_defect;
        assert!(l <= g * Rational::from_integer(e.total_length() as i64));
        assert!(oracle_g(&random(9, 2, 0).unwrap(), &e, 1 << 20).is_err());
    }

    #[test]
    fn ds_examples() {
        let cyc = ActionSpace::new(vec![vec![1, 2, 0]]).unwrap();
        let triv = ActionSpace::trivial(3, 1);
        assert_eq!(oracle_ds(&cyc, &triv).unwrap(), Rational::from_integer(1));
        assert_eq!(oracle_ds(&triv, &cyc).unwrap(), Rational::from_integer(1));
        let relabeled = ActionSpace::new(vec![vec![2, 0, 1]]).unwrap();
        assert!(oracle_ds(&cyc, &relabeled).unwrap().is_zero());
        for seed in 0..10 {
            let a = random(5, 2, seed).unwrap();
            let b = random(5, 2, seed + 100).unwrap();
            assert_eq!(oracle_ds(&a, &b).unwrap(), oracle_ds(&b, &a).unwrap());
            // identity bijection is one candidate
            assert!(oracle_ds(&a, &b).unwrap() <= crate::action_space::norm_s(&a, &b, &[0, 1, 2, 3, 4]).unwrap());
        }
    }

    #[test]
    fn eta_inside_superset() {
        let p = build_presentation(2, 2, &[]).unwrap();
        let e = commutator_equations(&p);
        let o = ConstantOverrides {
            c_d: Some(parse_big_rational("1").unwrap()),
            c_box: Some(parse_big_rational("1").unwrap()),
            t_e: Some(parse_big_rational("2").unwrap()),
            h: None,
        };
        let c = Constants::scaled(&p, &o).unwrap();
        let x = torus(&[30, 30]).unwrap();
        let mut eng = Engine::new(&x, &p, &e, &c, 1 << 24).unwrap();
        let empty = vec![false; x.n()];
        assert_eq!(oracle_eta(&mut eng, &empty, 2).unwrap(), empty);
        let mut a = empty.clone();
        a[0] = true;
        let exact = oracle_eta(&mut eng, &a, 2).unwrap();
        let sup = eng.eta_superset(&a, 2).unwrap();
        assert!(exact.iter().zip(&sup).all(|(e, s)| !e || *s));
        // anchors whose [-2,2)² window contains the origin
        assert_eq!(exact.iter().filter(|&&b| b).count(), 16);
    }
}
