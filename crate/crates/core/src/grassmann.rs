//! Complexified Grassmann algebra on `q` generators.
//!
//! Every element is stored in the canonical form `Σ c_{I,J} ξ_I ξ_J^*` where
//! `ξ_I = ξ_{i_1} ⋯ ξ_{i_k}` for ascending `i_1 < ⋯ < i_k` and
//! `ξ_J^* = ξ̄_{j_l} ⋯ ξ̄_{j_1}` (descending). All `2q` generators anticommute.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::falling;

/// Largest generator count supported by the bitmask representation.
pub const MAX_GENERATORS: usize = 31;

/// A subset of `{1, …, q}`, stored as a bitmask (bit `k-1` marks element `k`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct SubsetIndex(u32);

impl SubsetIndex {
    pub const EMPTY: SubsetIndex = SubsetIndex(0);

    pub fn from_bits(bits: u32) -> Self {
        SubsetIndex(bits)
    }

    /// Builds a subset from 1-based elements, checking them against `q`.
    pub fn new(q: usize, elements: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &e in elements {
            if e == 0 || e > q || e > MAX_GENERATORS {
                return Err(Error::IndexOutOfRange { index: e, q });
            }
            bits |= 1 << (e - 1);
        }
        Ok(SubsetIndex(bits))
    }

    pub fn singleton(k: usize) -> Self {
        debug_assert!((1..=MAX_GENERATORS).contains(&k));
        SubsetIndex(1 << (k - 1))
    }

    pub fn full(q: usize) -> Self {
        debug_assert!(q <= MAX_GENERATORS);
        SubsetIndex(((1u64 << q) - 1) as u32)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, k: usize) -> bool {
        (1..=MAX_GENERATORS).contains(&k) && self.0 & (1 << (k - 1)) != 0
    }

    pub fn union(self, other: Self) -> Self {
        SubsetIndex(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        SubsetIndex(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        SubsetIndex(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Largest element, if any.
    pub fn max_element(self) -> Option<usize> {
        (self.0 != 0).then(|| 32 - self.0.leading_zeros() as usize)
    }

    /// Elements in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (1..=MAX_GENERATORS).filter(move |k| bits & (1 << (k - 1)) != 0)
    }

    pub fn elements(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `{1,…,q}` in the order (size ascending, then lexicographic
    /// on the ascending element lists).
    pub fn all(q: usize) -> Vec<SubsetIndex> {
        let mut v: Vec<_> = (0..1u32 << q).map(SubsetIndex).collect();
        v.sort_by(|a, b| a.size_lex_cmp(*b));
        v
    }

    /// All supersets of `self` inside `{1,…,q}`, in size-lex order.
    pub fn supersets(self, q: usize) -> Vec<SubsetIndex> {
        SubsetIndex::all(q)
            .into_iter()
            .filter(|k| self.is_subset_of(*k))
            .collect()
    }

    /// Total order by cardinality, then lexicographically on the ascending
    /// element list.
    pub fn size_lex_cmp(self, other: Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for SubsetIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SubsetIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size_lex_cmp(*other)
    }
}

impl fmt::Debug for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl From<SubsetIndex> for Vec<usize> {
    fn from(s: SubsetIndex) -> Self {
        s.elements()
    }
}

impl TryFrom<Vec<usize>> for SubsetIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SubsetIndex::new(MAX_GENERATORS, &v)
    }
}

/// Sign `ε` with `ξ_I ξ_J = ε ξ_{I∪J}`: zero when the sets meet, otherwise
/// `(-1)` to the number of pairs `(i, j) ∈ I × J` with `i > j`.
pub fn sign_eps(left: SubsetIndex, right: SubsetIndex) -> i8 {
    if !left.is_disjoint(right) {
        return 0;
    }
    let inversions: u32 = right
        .iter()
        .map(|j| (left.bits() >> j).count_ones())
        .sum();
    if inversions.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn parity(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Element of the complexified Grassmann algebra on `q` generators.
#[derive(Clone, Debug, PartialEq)]
pub struct GrassmannElement {
    q: usize,
    coeffs: BTreeMap<(SubsetIndex, SubsetIndex), Complex64>,
}

impl GrassmannElement {
    pub fn zero(q: usize) -> Self {
        assert!(q <= MAX_GENERATORS, "at most {MAX_GENERATORS} generators");
        GrassmannElement {
            q,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn scalar(q: usize, c: Complex64) -> Self {
        Self::monomial(q, SubsetIndex::EMPTY, SubsetIndex::EMPTY, c)
    }

    /// `c · ξ_I ξ_J^*`.
    pub fn monomial(q: usize, holo: SubsetIndex, anti: SubsetIndex, c: Complex64) -> Self {
        let mut e = Self::zero(q);
        assert!(
            holo.max_element().unwrap_or(0) <= q && anti.max_element().unwrap_or(0) <= q,
            "subset outside 1..={q}"
        );
        e.add_term(holo, anti, c);
        e
    }

    /// The generator `ξ_k`.
    pub fn generator(q: usize, k: usize) -> Self {
        Self::monomial(q, SubsetIndex::singleton(k), SubsetIndex::EMPTY, Complex64::ONE)
    }

    /// The conjugate generator `ξ̄_k`.
    pub fn conj_generator(q: usize, k: usize) -> Self {
        Self::monomial(q, SubsetIndex::EMPTY, SubsetIndex::singleton(k), Complex64::ONE)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn coeff(&self, holo: SubsetIndex, anti: SubsetIndex) -> Complex64 {
        self.coeffs
            .get(&(holo, anti))
            .copied()
            .unwrap_or(Complex64::ZERO)
    }

    /// Nonzero terms in canonical key order.
    pub fn terms(&self) -> impl Iterator<Item = (SubsetIndex, SubsetIndex, Complex64)> + '_ {
        self.coeffs.iter().map(|(&(i, j), &c)| (i, j, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, holo: SubsetIndex, anti: SubsetIndex, c: Complex64) {
        if c == Complex64::ZERO {
            return;
        }
        let slot = self.coeffs.entry((holo, anti)).or_insert(Complex64::ZERO);
        *slot += c;
        if *slot == Complex64::ZERO {
            self.coeffs.remove(&(holo, anti));
        }
    }

    fn check_q(&self, other: &Self) -> Result<()> {
        if self.q != other.q {
            return Err(Error::DimensionMismatch {
                left: self.q,
                right: other.q,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_q(other)?;
        let mut out = self.clone();
        for (i, j, c) in other.terms() {
            out.add_term(i, j, c);
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.q);
        for (i, j, c) in self.terms() {
            out.add_term(i, j, c * s);
        }
        out
    }

    /// Product in canonical form.
    ///
    /// `(ξ_I ξ_J^*)(ξ_K ξ_L^*) = (-1)^{|J||K|} ε(I,K) ε(L,J) ξ_{I∪K} ξ_{J∪L}^*`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_q(other)?;
        let mut out = Self::zero(self.q);
        for (i, j, a) in self.terms() {
            for (k, l, b) in other.terms() {
                let holo = sign_eps(i, k);
                let anti = sign_eps(l, j);
                if holo == 0 || anti == 0 {
                    continue;
                }
                let sign = parity(j.len() * k.len()) * f64::from(holo * anti);
                out.add_term(i.union(k), j.union(l), a * b * sign);
            }
        }
        Ok(out)
    }

    /// Involution `c ξ_I ξ_J^* ↦ c̄ ξ_J ξ_I^*`.
    pub fn star(&self) -> Self {
        let mut out = Self::zero(self.q);
        for (i, j, c) in self.terms() {
            out.add_term(j, i, c.conj());
        }
        out
    }

    /// Berezin integral: the coefficient normalised by `∫ ξ_Q^* ξ_Q = 1`.
    ///
    /// Since `ξ_Q^* ξ_Q = (-1)^q ξ_Q ξ_Q^*`, this is `(-1)^q` times the
    /// canonical top coefficient.
    pub fn berezin_top(&self) -> Complex64 {
        let top = SubsetIndex::full(self.q);
        self.coeff(top, top) * parity(self.q)
    }

    /// Substitutes `ξ_k ↦ a_k ξ_k`, `ξ̄_k ↦ b_k ξ̄_k` (used for linear odd
    /// changes of variables).
    pub fn rescale_generators(&self, holo: &[Complex64], anti: &[Complex64]) -> Self {
        let mut out = Self::zero(self.q);
        for (i, j, c) in self.terms() {
            let f: Complex64 = i.iter().map(|k| holo[k - 1]).product::<Complex64>()
                * j.iter().map(|k| anti[k - 1]).product::<Complex64>();
            out.add_term(i, j, c * f);
        }
        out
    }

    /// Largest coefficient modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<_> = self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|(i, j)| (self.coeff(i, j) - other.coeff(i, j)).norm())
            .fold(0.0, f64::max)
    }
}

/// Finite expansion of `(base − Σ_k c_k ξ_k ξ̄_k)^alpha`.
///
/// The pairs `ξ_k ξ̄_k` commute and square to zero, and their product over a
/// set `I` is `ξ_I ξ_I^*`, so the binomial series terminates:
/// `Σ_I alpha(alpha−1)⋯(alpha−|I|+1) (−1)^{|I|} base^{alpha−|I|} Π_{k∈I} c_k ξ_I ξ_I^*`.
pub fn expand_weight(
    q: usize,
    alpha: f64,
    base: Complex64,
    pairing: &[Complex64],
) -> Result<GrassmannElement> {
    if pairing.len() != q {
        return Err(Error::DimensionMismatch {
            left: q,
            right: pairing.len(),
        });
    }
    if base == Complex64::ZERO && (alpha.fract() != 0.0 || alpha < q as f64) {
        return Err(Error::Singular("zero base with a non-polynomial exponent".into()));
    }
    let mut out = GrassmannElement::zero(q);
    for set in SubsetIndex::all(q) {
        let m = set.len();
        let coupling: Complex64 = set.iter().map(|k| pairing[k - 1]).product();
        let power = if base == Complex64::ZERO {
            if alpha == m as f64 {
                Complex64::ONE
            } else {
                Complex64::ZERO
            }
        } else {
            base.powf(alpha - m as f64)
        };
        out.add_term(set, set, coupling * power * falling(alpha, m) * parity(m));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn eps_examples() {
        let s = |v: &[usize]| SubsetIndex::new(3, v).unwrap();
        assert_eq!(sign_eps(s(&[1]), s(&[2])), 1);
        assert_eq!(sign_eps(s(&[2]), s(&[1])), -1);
        assert_eq!(sign_eps(s(&[1, 3]), s(&[2])), -1);
        assert_eq!(sign_eps(s(&[1, 2]), s(&[2])), 0);
    }

    #[test]
    fn generators_square_to_zero() {
        let x = GrassmannElement::generator(2, 1);
        assert!(x.mul(&x).unwrap().is_zero());
        let y = GrassmannElement::generator(2, 2);
        let xy = x.mul(&y).unwrap();
        let full = SubsetIndex::full(2);
        assert_eq!(xy.coeff(full, SubsetIndex::EMPTY), c(1.0));
    }

    #[test]
    fn star_examples() {
        let s1 = SubsetIndex::singleton(1);
        let s2 = SubsetIndex::singleton(2);
        let a = GrassmannElement::monomial(2, s1, s2, c(1.0));
        assert_eq!(a.star().coeff(s2, s1), c(1.0));
        let b = GrassmannElement::monomial(1, s1, SubsetIndex::EMPTY, Complex64::I);
        assert_eq!(b.star().coeff(SubsetIndex::EMPTY, s1), -Complex64::I);
    }

    #[test]
    fn berezin_normalisation() {
        for q in 1..=3 {
            let top = SubsetIndex::full(q);
            let anti = GrassmannElement::monomial(q, SubsetIndex::EMPTY, top, c(1.0));
            let holo = GrassmannElement::monomial(q, top, SubsetIndex::EMPTY, c(1.0));
            assert_eq!(anti.mul(&holo).unwrap().berezin_top(), c(1.0));
            assert_eq!(GrassmannElement::scalar(q, c(1.0)).berezin_top(), c(0.0));
        }
    }

    #[test]
    fn weight_small_cases() {
        let s = Complex64::new(0.3, 0.1);
        let one = SubsetIndex::singleton(1);
        let w = expand_weight(1, 1.0, s, &[c(1.0)]).unwrap();
        assert!((w.coeff(SubsetIndex::EMPTY, SubsetIndex::EMPTY) - s).norm() < 1e-15);
        assert_eq!(w.coeff(one, one), c(-1.0));
        let w2 = expand_weight(1, 2.0, s, &[c(1.0)]).unwrap();
        assert!((w2.coeff(SubsetIndex::EMPTY, SubsetIndex::EMPTY) - s * s).norm() < 1e-15);
        assert!((w2.coeff(one, one) + s * 2.0).norm() < 1e-15);
    }

    #[test]
    fn mismatched_q_is_an_error() {
        let a = GrassmannElement::generator(1, 1);
        let b = GrassmannElement::generator(2, 1);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn subset_order_is_size_then_lex() {
        let all: Vec<Vec<usize>> = SubsetIndex::all(3).into_iter().map(|s| s.elements()).collect();
        assert_eq!(
            all,
            vec![
                vec![],
                vec![1],
                vec![2],
                vec![3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3],
                vec![1, 2, 3]
            ]
        );
    }
}
