//! Row-style Hermite normal form, membership and canonical coset representatives.

use crate::error::{Error, Result};

/// A sublattice `H ≤ Z^m`, stored as its Hermite normal form: rows in echelon
/// form with strictly increasing pivot columns, positive pivots, and entries
/// above each pivot reduced into `[0, pivot)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    m: usize,
    rows: Vec<Vec<i64>>,
    pivots: Vec<usize>,
}

fn ck(v: Option<i128>) -> Result<i128> {
    v.ok_or(Error::Overflow("hermite reduction"))
}

/// `rows[i] -= q * rows[j]`, same on the transform.
fn sub_row(rows: &mut [Vec<i128>], i: usize, j: usize, q: i128) -> Result<()> {
    if q == 0 {
        return Ok(());
    }
    for c in 0..rows[i].len() {
        let t = ck(q.checked_mul(rows[j][c]))?;
        rows[i][c] = ck(rows[i][c].checked_sub(t))?;
    }
    Ok(())
}

/// Echelon reduction of `gens` with a unimodular transform `u` such that
/// `u · gens = [hnf; 0]`. Returns (hnf rows, pivots, full transform).
fn hermite(m: usize, gens: &[Vec<i64>]) -> Result<(Vec<Vec<i128>>, Vec<usize>, Vec<Vec<i128>>)> {
    let g = gens.len();
    for v in gens {
        if v.len() != m {
            return Err(Error::Argument(format!("vector of length {} in Z^{m}", v.len())));
        }
    }
    let mut a: Vec<Vec<i128>> = gens.iter().map(|v| v.iter().map(|&x| x as i128).collect()).collect();
    let mut u: Vec<Vec<i128>> = (0..g).map(|i| (0..g).map(|j| (i == j) as i128).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..m {
        if r == g {
            break;
        }
        loop {
            let best = (r..g).filter(|&i| a[i][col] != 0).min_by_key(|&i| a[i][col].unsigned_abs());
            let Some(best) = best else { break };
            a.swap(r, best);
            u.swap(r, best);
            let mut done = true;
            for i in r + 1..g {
                if a[i][col] != 0 {
                    let q = a[i][col].div_euclid(a[r][col]);
                    sub_row(&mut a, i, r, q)?;
                    sub_row(&mut u, i, r, q)?;
                    if a[i][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[r][col] == 0 {
            continue;
        }
        if a[r][col] < 0 {
            for x in a[r].iter_mut() {
                *x = -*x;
            }
            for x in u[r].iter_mut() {
                *x = -*x;
            }
        }
        for i in 0..r {
            let q = a[i][col].div_euclid(a[r][col]);
            sub_row(&mut a, i, r, q)?;
            sub_row(&mut u, i, r, q)?;
        }
        pivots.push(col);
        r += 1;
    }
    Ok((a, pivots, u))
}

fn narrow(rows: &[Vec<i128>]) -> Result<Vec<Vec<i64>>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| i64::try_from(x).map_err(|_| Error::Overflow("lattice entry"))).collect())
        .collect()
}

impl Lattice {
    pub fn new(m: usize, gens: &[Vec<i64>]) -> Result<Lattice> {
        let (a, pivots, _) = hermite(m, gens)?;
        let rows = narrow(&a[..pivots.len()])?;
        Ok(Lattice { m, rows, pivots })
    }

    /// Also returns `u` with `basis()[i] = Σ_j u[i][j] gens[j]`, and a basis
    /// of the integer relations among `gens` (vectors `c` with `Σ c_j gens[j] = 0`).
    pub fn with_transform(m: usize, gens: &[Vec<i64>]) -> Result<(Lattice, Vec<Vec<i64>>, Vec<Vec<i64>>)> {
        let (a, pivots, u) = hermite(m, gens)?;
        let k = pivots.len();
        let rows = narrow(&a[..k])?;
        let coeffs = narrow(&u[..k])?;
        let relations = narrow(&u[k..])?;
        Ok((Lattice { m, rows, pivots }, coeffs, relations))
    }

    pub fn zero(m: usize) -> Lattice {
        Lattice { m, rows: Vec::new(), pivots: Vec::new() }
    }

    pub fn full(m: usize) -> Lattice {
        let rows = (0..m).map(|i| (0..m).map(|j| (i == j) as i64).collect()).collect();
        Lattice { m, rows, pivots: (0..m).collect() }
    }

    pub fn ambient(&self) -> usize {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Hermite basis rows.
    pub fn basis(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Canonical representative of `x + H`: each pivot coordinate reduced
    /// into `[0, pivot)` in turn.
    pub fn coset_rep(&self, x: &[i64]) -> Vec<i64> {
        let mut y = x.to_vec();
        self.reduce_in_place(&mut y);
        y
    }

    pub fn reduce_in_place(&self, y: &mut [i64]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let q = y[p].div_euclid(row[p]);
            if q != 0 {
                for c in p..self.m {
                    y[c] -= q * row[c];
                }
            }
        }
    }

    /// Coordinates over the Hermite basis, if `x ∈ H`.
    pub fn coordinates(&self, x: &[i64]) -> Option<Vec<i64>> {
        let mut y = x.to_vec();
        let mut c = Vec::with_capacity(self.rank());
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if y[p] % row[p] != 0 {
                return None;
            }
            let q = y[p] / row[p];
            for col in p..self.m {
                y[col] -= q * row[col];
            }
            c.push(q);
        }
        y.iter().all(|&v| v == 0).then_some(c)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.coordinates(x).is_some()
    }

    pub fn contains_lattice(&self, other: &Lattice) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }

    /// `[Z^m : H]` when `H` has full rank.
    pub fn index(&self) -> Option<u64> {
        (self.rank() == self.m).then(|| self.rows.iter().zip(&self.pivots).map(|(r, &p)| r[p] as u64).product())
    }

    /// The sublattice of vectors whose first `d` coordinates vanish, restricted
    /// to the last `m − d` coordinates.
    pub fn tail_intersection(&self, d: usize) -> Lattice {
        let rows: Vec<Vec<i64>> = self
            .rows
            .iter()
            .zip(&self.pivots)
            .filter(|(_, &p)| p >= d)
            .map(|(r, _)| r[d..].to_vec())
            .collect();
        let pivots = self.pivots.iter().filter(|&&p| p >= d).map(|p| p - d).collect();
        Lattice { m: self.m - d, rows, pivots }
    }

    /// Image under projection to the first `d` coordinates.
    pub fn head_projection(&self, d: usize) -> Result<Lattice> {
        let gens: Vec<Vec<i64>> = self.rows.iter().map(|r| r[..d].to_vec()).collect();
        Lattice::new(d, &gens)
    }
}

/// Integer coefficients `c` with `Σ c_j gens[j] = y`, if `y ∈ ⟨gens⟩`.
pub fn express(m: usize, gens: &[Vec<i64>], y: &[i64]) -> Result<Option<Vec<i64>>> {
    let (lat, u, _) = Lattice::with_transform(m, gens)?;
    let Some(coords) = lat.coordinates(y) else { return Ok(None) };
    let mut c = vec![0i64; gens.len()];
    for (a, row) in coords.iter().zip(&u) {
        for (cj, &uj) in c.iter_mut().zip(row) {
            *cj = a
                .checked_mul(uj)
                .and_then(|p| cj.checked_add(p))
                .ok_or(Error::Overflow("lattice coefficients"))?;
        }
    }
    Ok(Some(c))
}

/// A basis of the integer vectors `c` with `Σ_j c_j rows[i][j] = 0` for all `i`.
pub fn integer_kernel(rows: &[Vec<i64>], cols: usize) -> Result<Vec<Vec<i64>>> {
    let columns: Vec<Vec<i64>> = (0..cols).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let (_, _, relations) = Lattice::with_transform(rows.len(), &columns)?;
    Ok(relations)
}

/// Integer determinant by Bareiss elimination.
pub fn det(mat: &[Vec<i64>]) -> Result<i128> {
    let n = mat.len();
    if n == 0 {
        return Ok(1);
    }
    let mut a: Vec<Vec<i128>> = mat.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = ck(ck(a[i][j].checked_mul(a[k][k]))?.checked_sub(ck(a[i][k].checked_mul(a[k][j]))?))?;
                a[i][j] = v / prev;
            }
        }
        prev = a[k][k];
    }
    Ok(sign * a[n - 1][n - 1])
}

/// Adjugate `adj(M)` with `M · adj(M) = det(M) · I`.
pub fn adjugate(mat: &[Vec<i64>]) -> Result<Vec<Vec<i128>>> {
    let n = mat.len();
    let mut adj = vec![vec![0i128; n]; n];
    if n == 1 {
        adj[0][0] = 1;
        return Ok(adj);
    }
    for i in 0..n {
        for j in 0..n {
            let minor: Vec<Vec<i64>> = (0..n)
                .filter(|&r| r != i)
                .map(|r| (0..n).filter(|&c| c != j).map(|c| mat[r][c]).collect())
                .collect();
            let s = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[j][i] = s * det(&minor)?;
        }
    }
    Ok(adj)
}
