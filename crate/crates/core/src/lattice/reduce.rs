//! Successive minima, reduced bases, short bases in a window, and strongest
//! coordinates.

use itertools::Itertools;
use num::bigint::BigInt;
use num::integer::gcd;
use num::rational::BigRational;
use num::{ToPrimitive, Zero};

use super::hermite::{det, Lattice};
use crate::error::{Error, Result};

pub const MAX_REDUCTION_RANK: usize = 6;

pub fn norm2(v: &[i64]) -> i128 {
    v.iter().map(|&x| x as i128 * x as i128).sum()
}

pub fn norm1(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).sum()
}

/// `‖D‖₁ = Σ_{v∈D} ‖v‖₁`.
pub fn set_norm1(d: &[Vec<i64>]) -> i64 {
    d.iter().map(|v| norm1(v)).sum()
}

fn rat(x: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

fn dot(a: &[i64], b: &[i64]) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

/// Exact Gram–Schmidt data: squared lengths `B_i` and coefficients `μ_ij`.
fn gram_schmidt(b: &[Vec<i64>]) -> (Vec<BigRational>, Vec<Vec<BigRational>>) {
    let k = b.len();
    let mut bs: Vec<BigRational> = Vec::with_capacity(k);
    let mut mu = vec![vec![BigRational::zero(); k]; k];
    // r_ij = <b_i, b*_j> computed through the recursion on inner products
    for i in 0..k {
        for j in 0..i {
            let mut r = rat(dot(&b[i], &b[j]));
            for l in 0..j {
                r -= &mu[j][l] * &mu[i][l] * &bs[l];
            }
            mu[i][j] = r / &bs[j];
        }
        let mut bi = rat(dot(&b[i], &b[i]));
        for l in 0..i {
            bi -= &mu[i][l] * &mu[i][l] * &bs[l];
        }
        bs.push(bi);
    }
    (bs, mu)
}

fn round_rat(x: &BigRational) -> i64 {
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    (x + half).floor().to_integer().to_i64().expect("rounded coefficient fits")
}

/// Exact LLL reduction (δ = 3/4) of linearly independent integer vectors.
pub fn lll(basis: &[Vec<i64>]) -> Result<Vec<Vec<i64>>> {
    let mut b = basis.to_vec();
    let k = b.len();
    if k <= 1 {
        return Ok(b);
    }
    let delta = BigRational::new(BigInt::from(3), BigInt::from(4));
    let mut i = 1;
    let mut guard = 0u64;
    while i < k {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::Budget("LLL iteration limit".into()));
        }
        let (_, mu) = gram_schmidt(&b);
        let mut mu_row = mu[i].clone();
        for j in (0..i).rev() {
            let q = round_rat(&mu_row[j]);
            if q != 0 {
                for c in 0..b[i].len() {
                    b[i][c] = b[i][c]
                        .checked_sub(q.checked_mul(b[j][c]).ok_or(Error::Overflow("lll"))?)
                        .ok_or(Error::Overflow("lll"))?;
                }
                let qr = rat(q as i128);
                for l in 0..j {
                    let t = &qr * &mu[j][l];
                    mu_row[l] -= t;
                }
                mu_row[j] -= &qr;
            }
        }
        let (bs, mu) = gram_schmidt(&b);
        let lhs = bs[i].clone();
        let rhs = (&delta - &mu[i][i - 1] * &mu[i][i - 1]) * &bs[i - 1];
        if lhs >= rhs {
            i += 1;
        } else {
            b.swap(i, i - 1);
            i = (i - 1).max(1);
        }
    }
    Ok(b)
}

/// All nonzero `v` in the lattice spanned by `basis` with `‖v‖² ≤ bound2`,
/// sorted by squared norm, then lexicographically.
pub fn short_vectors(basis: &[Vec<i64>], bound2: i128, budget: u64) -> Result<Vec<Vec<i64>>> {
    let k = basis.len();
    if k == 0 || bound2 <= 0 {
        return Ok(Vec::new());
    }
    let b = lll(basis)?;
    let (bs, mu) = gram_schmidt(&b);
    let to_f = |x: &BigRational| x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap();
    let bsf: Vec<f64> = bs.iter().map(to_f).collect();
    let muf: Vec<Vec<f64>> = mu.iter().map(|r| r.iter().map(to_f).collect()).collect();
    let m = b[0].len();
    let start = bound2 as f64 * (1.0 + 1e-9) + 1e-6;
    let mut coeffs = vec![0i64; k];
    let mut out = Vec::new();
    let mut visited = 0u64;

    struct Ctx<'a> {
        b: &'a [Vec<i64>],
        bsf: &'a [f64],
        muf: &'a [Vec<f64>],
        m: usize,
        bound2: i128,
        budget: u64,
    }

    fn rec(
        cx: &Ctx,
        i: usize,
        remaining: f64,
        coeffs: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
        visited: &mut u64,
    ) -> Result<()> {
        let k = coeffs.len();
        let c: f64 = -(i + 1..k).map(|j| coeffs[j] as f64 * cx.muf[j][i]).sum::<f64>();
        let w = (remaining.max(0.0) / cx.bsf[i]).sqrt() + 1e-7;
        let lo = (c - w).ceil() as i64;
        let hi = (c + w).floor() as i64;
        for a in lo..=hi {
            *visited += 1;
            if *visited > cx.budget {
                return Err(Error::Budget(format!("lattice enumeration exceeded {} nodes", cx.budget)));
            }
            coeffs[i] = a;
            let dlt = a as f64 - c;
            let r2 = remaining - dlt * dlt * cx.bsf[i];
            if r2 < -1e-6 * (1.0 + remaining.abs()) {
                continue;
            }
            if i == 0 {
                let mut v = vec![0i64; cx.m];
                for (cf, row) in coeffs.iter().zip(cx.b) {
                    for t in 0..cx.m {
                        v[t] += cf * row[t];
                    }
                }
                let n2 = norm2(&v);
                if n2 > 0 && n2 <= cx.bound2 {
                    out.push(v);
                }
            } else {
                rec(cx, i - 1, r2.max(0.0), coeffs, out, visited)?;
            }
        }
        coeffs[i] = 0;
        Ok(())
    }

    let cx = Ctx { b: &b, bsf: &bsf, muf: &muf, m, bound2, budget };
    rec(&cx, k - 1, start, &mut coeffs, &mut out, &mut visited)?;
    out.sort_by(|x, y| norm2(x).cmp(&norm2(y)).then_with(|| x.cmp(y)));
    Ok(out)
}

/// Incremental linear-independence test over `Q` (fraction-free echelon).
#[derive(Default)]
pub struct RankTracker {
    rows: Vec<(usize, Vec<i128>)>,
}

impl RankTracker {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` if it is independent of the rows so far; reports whether it was.
    pub fn add(&mut self, v: &[i64]) -> bool {
        let mut w: Vec<i128> = v.iter().map(|&x| x as i128).collect();
        for (p, row) in &self.rows {
            if w[*p] != 0 {
                let a = row[*p];
                let b = w[*p];
                for c in 0..w.len() {
                    w[c] = a * w[c] - b * row[c];
                }
                let g = w.iter().fold(0i128, |g, &x| gcd(g, x));
                if g > 1 {
                    for x in w.iter_mut() {
                        *x /= g;
                    }
                }
            }
        }
        match w.iter().position(|&x| x != 0) {
            Some(p) => {
                self.rows.push((p, w));
                true
            }
            None => false,
        }
    }
}

/// `λ_1², …, λ_k²` of the lattice, by exhaustive enumeration inside the
/// radius of an LLL basis (which is `k` independent lattice vectors).
pub fn successive_minima_sq(lat: &Lattice, budget: u64) -> Result<Vec<i128>> {
    let k = lat.rank();
    if k == 0 {
        return Ok(Vec::new());
    }
    let b = lll(lat.basis())?;
    let r2 = b.iter().map(|v| norm2(v)).max().unwrap();
    let vecs = short_vectors(&b, r2, budget)?;
    let mut tr = RankTracker::default();
    let mut out = Vec::with_capacity(k);
    for v in &vecs {
        if tr.add(v) {
            out.push(norm2(v));
            if out.len() == k {
                break;
            }
        }
    }
    if out.len() != k {
        return Err(Error::Precondition("enumeration radius did not reach full rank".into()));
    }
    Ok(out)
}

/// True when `set` (lattice vectors) extends to a basis of `lat`: the gcd of
/// the maximal minors of their coordinate matrix is 1.
fn extends_to_basis(lat: &Lattice, set: &[Vec<i64>]) -> Result<bool> {
    let coords: Vec<Vec<i64>> = set
        .iter()
        .map(|v| lat.coordinates(v).ok_or_else(|| Error::Precondition("vector outside lattice".into())))
        .collect::<Result<_>>()?;
    let i = set.len();
    let k = lat.rank();
    let mut g: i128 = 0;
    for cols in (0..k).combinations(i) {
        let minor: Vec<Vec<i64>> = coords.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
        g = gcd(g, det(&minor)?);
        if g == 1 {
            return Ok(true);
        }
    }
    Ok(g == 1)
}

/// Greedy Minkowski reduction: `b_i` is the shortest lattice vector (then
/// lexicographically least, first nonzero coordinate positive) such that `b_1..b_i` extends to a basis. The
/// bound `4‖b_i‖² ≤ (i+3) λ_i²` is checked against independently enumerated
/// minima before returning.
pub fn reduced_basis(lat: &Lattice, budget: u64) -> Result<Vec<Vec<i64>>> {
    let k = lat.rank();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > MAX_REDUCTION_RANK {
        return Err(Error::Budget(format!("rank {k} exceeds reduction limit {MAX_REDUCTION_RANK}")));
    }
    let b = lll(lat.basis())?;
    let mut r2 = b.iter().map(|v| norm2(v)).max().unwrap();
    let chosen = loop {
        let vecs = short_vectors(&b, r2, budget)?;
        let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(k);
        for _ in 0..k {
            let mut found = None;
            for v in vecs.iter().filter(|v| v.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)) {
                let mut trial = chosen.clone();
                trial.push(v.clone());
                if extends_to_basis(lat, &trial)? {
                    found = Some(v.clone());
                    break;
                }
            }
            match found {
                Some(v) => chosen.push(v),
                None => break,
            }
        }
        if chosen.len() == k {
            break chosen;
        }
        r2 = r2.checked_mul(4).ok_or(Error::Overflow("enumeration radius"))?;
    };
    if Lattice::new(lat.ambient(), &chosen)? != *lat {
        return Err(Error::Precondition("reduced basis does not span the lattice".into()));
    }
    let minima = successive_minima_sq(lat, budget)?;
    if !lenstra_certificate(&chosen, &minima) {
        return Err(Error::Precondition("reduced basis failed the quality certificate".into()));
    }
    Ok(chosen)
}

/// `‖b_i‖₂ ≤ ½ √(i+3) λ_i` for all `i` (1-based), i.e. `4‖b_i‖² ≤ (i+3) λ_i²`.
pub fn lenstra_certificate(basis: &[Vec<i64>], minima_sq: &[i128]) -> bool {
    basis.len() == minima_sq.len()
        && basis
            .iter()
            .zip(minima_sq)
            .enumerate()
            .all(|(i, (b, &l))| 4 * norm2(b) <= (i as i128 + 4) * l)
}

/// A basis `D` of `lat` with `D ⊆ B^{L1}(l t)` and `‖D‖₁ ≤ l² t`, where `l`
/// is the ambient dimension. Requires `rank⟨H ∩ B^{L2}(t)⟩ = rank H`.
pub fn short_basis_in_window(lat: &Lattice, t: i64, budget: u64) -> Result<Vec<Vec<i64>>> {
    let k = lat.rank();
    if k == 0 {
        return Ok(Vec::new());
    }
    let minima = successive_minima_sq(lat, budget)?;
    let t2 = t as i128 * t as i128;
    if minima[k - 1] > t2 {
        return Err(Error::Precondition(format!(
            "lattice vectors of norm <= {t} do not reach full rank {k}"
        )));
    }
    let d = reduced_basis(lat, budget)?;
    let l = lat.ambient() as i64;
    if d.iter().any(|v| norm1(v) > l * t) || set_norm1(&d) > l * l * t {
        return Err(Error::Precondition("reduced basis outside the L1 window".into()));
    }
    Ok(d)
}

/// Strongest coordinates of an independent `D0` (columns of the `m × k`
/// matrix): the `m − k` rows whose removal maximizes the absolute value of
/// the remaining determinant; ties go to the lexicographically least index
/// set. 0-based, ascending.
pub fn strongest_coordinates(d0: &[Vec<i64>], m: usize) -> Result<Vec<usize>> {
    let k = d0.len();
    if k > m || d0.iter().any(|v| v.len() != m) {
        return Err(Error::Argument("D0 does not fit Z^m".into()));
    }
    let mut best: Option<(i128, Vec<usize>)> = None;
    for strike in (0..m).combinations(m - k) {
        let keep: Vec<usize> = (0..m).filter(|r| !strike.contains(r)).collect();
        let minor: Vec<Vec<i64>> = keep.iter().map(|&r| d0.iter().map(|v| v[r]).collect()).collect();
        let dv = det(&minor)?.abs();
        if best.as_ref().is_none_or(|(b, _)| dv > *b) {
            best = Some((dv, strike));
        }
    }
    let (dv, strike) = best.expect("at least one index set");
    if dv == 0 {
        return Err(Error::Precondition("D0 is not linearly independent".into()));
    }
    Ok(strike)
}
