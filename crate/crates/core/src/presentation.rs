//! The fixed presentation `Γ = Z^m / K`, free-group words, sorted normal
//! forms, boxes and the derived constants.

use std::fmt;

use num::bigint::BigInt;
use num::{Integer, One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One letter `ê_gen^{±1}`; `gen` is 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub gen: usize,
    pub inv: bool,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        Letter { gen: self.gen, inv: !self.inv }
    }
}

/// A freely reduced word. `letters[0]` is the leftmost letter; words act on
/// points right to left, so the last letter is applied first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Word {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word { letters: out }
    }

    pub fn identity() -> Word {
        Word::default()
    }

    /// `ê_gen^a`.
    pub fn power(gen: usize, a: i64) -> Word {
        let l = Letter { gen, inv: a < 0 };
        Word { letters: vec![l; a.unsigned_abs() as usize] }
    }

    /// The sorted word `ê_1^{v_1} ⋯ ê_m^{v_m}`.
    pub fn sorted_lift(v: &[i64]) -> Word {
        let mut letters = Vec::new();
        for (i, &a) in v.iter().enumerate() {
            letters.extend(Word::power(i, a).letters);
        }
        Word { letters }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::new(self.letters.iter().chain(other.letters.iter()).copied())
    }

    /// `[x, y] = x y x⁻¹ y⁻¹`.
    pub fn commutator(x: &Word, y: &Word) -> Word {
        x.concat(y).concat(&x.inverse()).concat(&y.inverse())
    }

    /// Image in `Z^m` (signed letter counts).
    pub fn abelianize(&self, m: usize) -> Vec<i64> {
        let mut v = vec![0i64; m];
        for l in &self.letters {
            v[l.gen] += if l.inv { -1 } else { 1 };
        }
        v
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.gen).max()
    }

    /// True when the word already has the shape `ê_1^{a_1} ⋯ ê_m^{a_m}`.
    pub fn is_sorted(&self) -> bool {
        self.letters.windows(2).all(|w| w[0].gen < w[1].gen || w[0] == w[1])
    }

    /// Parses `"e1 e2 e1^-1 e2^-3"`; generators are 1-based in this notation.
    pub fn parse(s: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let bad = || Error::Argument(format!("bad letter {tok:?}"));
            let body = tok.strip_prefix('e').ok_or_else(bad)?;
            let (g, p) = match body.split_once('^') {
                Some((g, p)) => (g, p.parse::<i64>().map_err(|_| bad())?),
                None => (body, 1),
            };
            let g: usize = g.parse().map_err(|_| bad())?;
            if g == 0 {
                return Err(bad());
            }
            letters.extend(Word::power(g - 1, p).letters);
        }
        Ok(Word::new(letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let mut i = 0;
        let mut first = true;
        while i < self.letters.len() {
            let l = self.letters[i];
            let mut j = i;
            while j < self.letters.len() && self.letters[j] == l {
                j += 1;
            }
            let k = (j - i) as i64 * if l.inv { -1 } else { 1 };
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if k == 1 {
                write!(f, "e{}", l.gen + 1)?;
            } else {
                write!(f, "e{}^{}", l.gen + 1, k)?;
            }
            i = j;
        }
        Ok(())
    }
}

pub fn sorted_form(w: &Word, m: usize) -> Word {
    Word::sorted_lift(&w.abelianize(m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationSource {
    CommutatorsOnly,
    FullE,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationSet {
    pub words: Vec<Word>,
    pub source: EquationSource,
}

impl EquationSet {
    pub fn custom(words: Vec<Word>) -> Result<EquationSet> {
        let mut out: Vec<Word> = Vec::new();
        for w in words {
            let w = Word::new(w.letters);
            if w.is_empty() {
                return Err(Error::Argument("identity word in equation set".into()));
            }
            if !out.contains(&w) {
                out.push(w);
            }
        }
        Ok(EquationSet { words: out, source: EquationSource::Custom })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// `Σ_{w∈E} |w|`.
    pub fn total_length(&self) -> usize {
        self.words.iter().map(Word::len).sum()
    }
}

/// Realizes `Γ = Z^m / ⟨β_i e_i : d < i ≤ m⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbelianPresentation {
    pub m: usize,
    pub d: usize,
    pub betas: Vec<u64>,
    pub beta_e: u64,
    pub c_d: BigInt,
    pub t_e: BigInt,
    pub c_box: BigInt,
}

pub fn build_presentation(m: usize, d: usize, betas: &[u64]) -> Result<AbelianPresentation> {
    if m == 0 || d == 0 || d > m {
        return Err(Error::Presentation(format!("need 1 <= d <= m, got m={m}, d={d}")));
    }
    if betas.len() != m - d {
        return Err(Error::Presentation(format!(
            "expected {} torsion orders, got {}",
            m - d,
            betas.len()
        )));
    }
    if betas.iter().any(|&b| b < 2) {
        return Err(Error::Presentation("torsion orders must be >= 2".into()));
    }
    if betas.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Presentation("torsion orders must be nondecreasing".into()));
    }
    let beta_e = betas.last().copied().unwrap_or(1);
    let dd = BigInt::from(d as u64);
    let mm = BigInt::from(m as u64);
    let free_part = BigInt::from(3u32) * num::pow(BigInt::from(7u32), d) * num::pow(dd.clone(), 2 * d + 2);
    let c_d = free_part.max(BigInt::from(beta_e));
    // ceil((m-d) m β_E / d)
    let num_t = BigInt::from((m - d) as u64) * &mm * BigInt::from(beta_e);
    let t_e = num_t.div_ceil(&dd).max(BigInt::from(2u32));
    let c_box = BigInt::from(180u32) * num::pow(mm, 3) * &c_d;
    Ok(AbelianPresentation { m, d, betas: betas.to_vec(), beta_e, c_d, t_e, c_box })
}

impl AbelianPresentation {
    pub fn free(m: usize) -> AbelianPresentation {
        build_presentation(m, m, &[]).expect("free abelian presentation")
    }

    /// `β` for generator `i` (0-based); `None` for free directions.
    pub fn beta(&self, i: usize) -> Option<u64> {
        (i >= self.d).then(|| self.betas[i - self.d])
    }

    /// `|Tor(Γ)| = Π β_i`.
    pub fn tor_order(&self) -> u64 {
        self.betas.iter().product()
    }

    /// Generators of `K` as vectors.
    pub fn k_generators(&self) -> Vec<Vec<i64>> {
        (self.d..self.m)
            .map(|i| {
                let mut v = vec![0; self.m];
                v[i] = self.betas[i - self.d] as i64;
                v
            })
            .collect()
    }

    /// True when `v ∈ K`.
    pub fn in_k(&self, v: &[i64]) -> bool {
        v.iter().enumerate().all(|(i, &a)| match self.beta(i) {
            None => a == 0,
            Some(b) => a.rem_euclid(b as i64) == 0,
        })
    }

    /// The torsion box `T`: vectors with `0 ≤ α_i < β_i` in the torsion slots.
    pub fn torsion_box(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![0i64; self.m]];
        for i in self.d..self.m {
            let b = self.betas[i - self.d] as i64;
            let mut next = Vec::with_capacity(out.len() * b as usize);
            for v in &out {
                for a in 0..b {
                    let mut w = v.clone();
                    w[i] = a;
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    /// `h = 16 d C_d + 1` from the paper constants.
    pub fn h(&self) -> BigInt {
        BigInt::from(16u32) * BigInt::from(self.d as u64) * &self.c_d + BigInt::one()
    }
}

/// `E = E_0 ∪ {ê_i^{β_i}}`, with `E_0` the nontrivial commutators
/// `[ê_i^{ε1}, ê_j^{ε2}]` over ordered pairs `i ≠ j`.
pub fn build_e(p: &AbelianPresentation) -> EquationSet {
    let mut words = Vec::new();
    for i in 0..p.m {
        for j in 0..p.m {
            if i == j {
                continue;
            }
            for e1 in [1i64, -1] {
                for e2 in [1i64, -1] {
                    let w = Word::commutator(&Word::power(i, e1), &Word::power(j, e2));
                    if !w.is_empty() && !words.contains(&w) {
                        words.push(w);
                    }
                }
            }
        }
    }
    words.extend(torsion_relators(p));
    EquationSet { words, source: EquationSource::FullE }
}

/// `{[ê_i, ê_j] : i < j}` plus the torsion relators; presents the same group
/// with one commutator per unordered pair.
pub fn commutator_equations(p: &AbelianPresentation) -> EquationSet {
    let mut words = Vec::new();
    for i in 0..p.m {
        for j in i + 1..p.m {
            words.push(Word::commutator(&Word::power(i, 1), &Word::power(j, 1)));
        }
    }
    words.extend(torsion_relators(p));
    EquationSet { words, source: EquationSource::CommutatorsOnly }
}

fn torsion_relators(p: &AbelianPresentation) -> Vec<Word> {
    (p.d..p.m).map(|i| Word::power(i, p.betas[i - p.d] as i64)).collect()
}

/// Number of points of an L∞ box of radius `t` in `Z^k`, if it fits `limit`.
pub fn box_size(k: usize, t: u64, limit: u64) -> Result<u64> {
    let side = 2 * t + 1;
    let mut total: u64 = 1;
    for _ in 0..k {
        total = total.checked_mul(side).filter(|&x| x <= limit).ok_or_else(|| {
            Error::Budget(format!("box of radius {t} in dimension {k} exceeds {limit} points"))
        })?;
    }
    Ok(total)
}

/// `Box_{F_k}(t)`: sorted lifts of the L∞ ball, in lexicographic order of
/// exponent vectors.
pub fn box_words(k: usize, t: u64, limit: u64) -> Result<Vec<Word>> {
    box_size(k, t, limit)?;
    Ok(linf_ball(k, t as i64).iter().map(|v| Word::sorted_lift(v)).collect())
}

/// All integer vectors of `B^{L∞}(t)` in `Z^k`, lexicographically.
pub fn linf_ball(k: usize, t: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for v in &out {
            for a in -t..=t {
                let mut w: Vec<i64> = v.clone();
                w.push(a);
                next.push(w);
            }
        }
        out = next;
    }
    out
}

/// All integer vectors of `B^{L1}(r)` in `Z^k`, lexicographically.
pub fn l1_ball(k: usize, r: i64) -> Vec<Vec<i64>> {
    fn rec(k: usize, r: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for a in -r..=r {
            cur.push(a);
            rec(k, r - a.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, r, &mut Vec::new(), &mut out);
    out
}

/// Constants as JSON-friendly strings.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PresentationSpec {
    pub m: usize,
    pub d: usize,
    #[serde(default)]
    pub betas: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_scale: Option<crate::config::ConstantOverrides>,
}

impl PresentationSpec {
    pub fn build(&self) -> Result<AbelianPresentation> {
        build_presentation(self.m, self.d, &self.betas)
    }

    pub fn of(p: &AbelianPresentation) -> PresentationSpec {
        PresentationSpec { m: p.m, d: p.d, betas: p.betas.clone(), constant_scale: None }
    }
}

pub fn u64_of(b: &BigInt) -> Option<u64> {
    b.to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants_match_formulas() {
        let p = build_presentation(2, 2, &[]).unwrap();
        assert_eq!(p.beta_e, 1);
        assert_eq!(p.c_d, BigInt::from(9408));
        assert_eq!(p.t_e, BigInt::from(2));
        assert_eq!(p.c_box, BigInt::from(13547520));

        let p = build_presentation(1, 1, &[]).unwrap();
        assert_eq!(p.c_d, BigInt::from(21));
        assert_eq!(p.t_e, BigInt::from(2));

        let p = build_presentation(2, 1, &[4]).unwrap();
        assert_eq!(p.beta_e, 4);
        assert_eq!(p.t_e, BigInt::from(8));
    }

    #[test]
    fn constants_independent_oracle() {
        // recompute with plain u128 arithmetic for small d
        for (m, d, betas) in [(3usize, 2usize, vec![5u64]), (3, 1, vec![2, 3]), (4, 3, vec![100])] {
            let p = build_presentation(m, d, &betas).unwrap();
            let be = *betas.last().unwrap() as u128;
            let free = 3 * 7u128.pow(d as u32) * (d as u128).pow(2 * d as u32 + 2);
            let cd = free.max(be);
            let te = (((m - d) * m) as u128 * be).div_ceil(d as u128).max(2);
            assert_eq!(p.c_d, BigInt::from(cd));
            assert_eq!(p.t_e, BigInt::from(te));
            assert_eq!(p.c_box, BigInt::from(180 * (m as u128).pow(3) * cd));
        }
    }

    #[test]
    fn bad_presentations() {
        assert!(build_presentation(2, 3, &[]).is_err());
        assert!(build_presentation(2, 1, &[]).is_err());
        assert!(build_presentation(2, 1, &[1]).is_err());
        assert!(build_presentation(3, 1, &[4, 2]).is_err());
        assert!(build_presentation(0, 0, &[]).is_err());
    }

    #[test]
    fn e_sizes() {
        let e = build_e(&build_presentation(2, 2, &[]).unwrap());
        assert_eq!(e.len(), 8);
        assert!(e.words.iter().all(|w| w.len() == 4));
        assert!(build_e(&build_presentation(1, 1, &[]).unwrap()).is_empty());
        let p = build_presentation(2, 1, &[3]).unwrap();
        let e = build_e(&p);
        assert_eq!(e.len(), 9);
        assert!(e.words.contains(&Word::power(1, 3)));
        assert_eq!(commutator_equations(&build_presentation(3, 3, &[]).unwrap()).len(), 3);
    }

    #[test]
    fn sorted_forms() {
        let w = Word::parse("e2 e1 e2^-1").unwrap();
        assert_eq!(sorted_form(&w, 2), Word::parse("e1").unwrap());
        let c = Word::parse("e1 e2 e1^-1 e2^-1").unwrap();
        assert!(sorted_form(&c, 2).is_empty());
        let w = Word::parse("e1 e1").unwrap();
        assert_eq!(sorted_form(&w, 2), Word::power(0, 2));
        assert_eq!(Word::parse("e1 e1^-1").unwrap(), Word::identity());
    }

    #[test]
    fn boxes() {
        assert_eq!(box_words(2, 1, 1000).unwrap().len(), 9);
        assert_eq!(box_words(1, 0, 1000).unwrap(), vec![Word::identity()]);
        assert_eq!(box_words(3, 2, 1000).unwrap().len(), 125);
        assert!(box_words(3, 10, 100).is_err());
    }

    #[test]
    fn torsion_box_size() {
        let p = build_presentation(3, 1, &[2, 3]).unwrap();
        assert_eq!(p.torsion_box().len() as u64, p.tor_order());
        assert_eq!(p.tor_order(), 6);
    }

    fn arb_word(m: usize, len: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec((0..m, any::<bool>()), 0..len)
            .prop_map(|ls| Word::new(ls.into_iter().map(|(gen, inv)| Letter { gen, inv })))
    }

    proptest! {
        #[test]
        fn sorted_form_idempotent(w in arb_word(3, 20)) {
            let s = sorted_form(&w, 3);
            prop_assert_eq!(sorted_form(&s, 3), s.clone());
            prop_assert_eq!(s.abelianize(3), w.abelianize(3));
            prop_assert!(s.is_sorted());
        }

        #[test]
        fn sorted_words_lie_in_their_box(w in arb_word(3, 12)) {
            let s = sorted_form(&w, 3);
            let t = s.len() as u64;
            let b = box_words(3, t, 1 << 20).unwrap();
            prop_assert!(b.contains(&s));
        }

        #[test]
        fn e_abelianizes_into_k(m in 1usize..4, extra in 0usize..2, b0 in 2u64..5) {
            let d = m.saturating_sub(extra).max(1);
            let betas: Vec<u64> = (0..m - d).map(|i| b0 + i as u64).collect();
            let p = build_presentation(m, d, &betas).unwrap();
            for w in build_e(&p).words {
                prop_assert!(p.in_k(&w.abelianize(m)));
            }
        }
    }
}
