use num_complex::Complex64;
use proptest::prelude::*;
use superbergman::grassmann::{sign_eps, GrassmannElement, SubsetIndex};

/// A letter of a Grassmann word: `(k, false)` is `ξ_k`, `(k, true)` is `ξ̄_k`.
type Letter = (usize, bool);

/// The word `ξ_I ξ_J^*`: holomorphic letters ascending, then the conjugates
/// descending (the involution reverses order).
fn word(holo: SubsetIndex, anti: SubsetIndex) -> Vec<Letter> {
    let mut w: Vec<Letter> = holo.iter().map(|k| (k, false)).collect();
    w.extend(anti.elements().into_iter().rev().map(|k| (k, true)));
    w
}

/// Position of a letter in the canonical order.
fn rank(q: usize, (k, bar): Letter) -> i64 {
    if bar {
        2 * q as i64 + 1 - k as i64
    } else {
        k as i64
    }
}

/// Reduces a word to canonical form by adjacent swaps; `None` if a letter repeats.
fn canonical(q: usize, mut w: Vec<Letter>) -> Option<(f64, SubsetIndex, SubsetIndex)> {
    let mut sign = 1.0;
    for i in 0..w.len() {
        for j in 0..w.len() - 1 - i {
            if rank(q, w[j]) > rank(q, w[j + 1]) {
                w.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if w.windows(2).any(|p| p[0] == p[1]) {
        return None;
    }
    let holo: Vec<usize> = w.iter().filter(|l| !l.1).map(|l| l.0).collect();
    let anti: Vec<usize> = w.iter().filter(|l| l.1).map(|l| l.0).collect();
    Some((sign, SubsetIndex::new(q, &holo).unwrap(), SubsetIndex::new(q, &anti).unwrap()))
}

fn monomials(q: usize) -> Vec<GrassmannElement> {
    let sets = SubsetIndex::all(q);
    sets.iter()
        .flat_map(|&i| sets.iter().map(move |&j| GrassmannElement::monomial(q, i, j, Complex64::ONE)))
        .collect()
}

fn single_term(e: &GrassmannElement) -> (SubsetIndex, SubsetIndex) {
    let (i, j, _) = e.terms().next().unwrap();
    (i, j)
}

#[test]
fn products_match_word_reordering_exhaustively() {
    for q in 0..=3 {
        for a in monomials(q) {
            for b in monomials(q) {
                let (i, j) = single_term(&a);
                let (k, l) = single_term(&b);
                let mut w = word(i, j);
                w.extend(word(k, l));
                let got = a.mul(&b).unwrap();
                match canonical(q, w) {
                    None => assert!(got.is_zero(), "q={q}: expected zero"),
                    Some((sign, holo, anti)) => {
                        let expected = GrassmannElement::monomial(q, holo, anti, Complex64::new(sign, 0.0));
                        assert_eq!(got, expected, "q={q}");
                    }
                }
            }
        }
    }
}

#[test]
fn associativity_is_exact_on_all_monomial_triples() {
    for q in 0..=3 {
        let basis = monomials(q);
        for a in &basis {
            for b in &basis {
                let ab = a.mul(b).unwrap();
                for c in &basis {
                    let left = ab.mul(c).unwrap();
                    let right = a.mul(&b.mul(c).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }
}

#[test]
fn star_is_an_involutive_anti_automorphism() {
    for q in 0..=3 {
        let basis = monomials(q);
        for a in &basis {
            assert_eq!(a.star().star(), *a);
            for b in &basis {
                let left = a.mul(b).unwrap().star();
                let right = b.star().mul(&a.star()).unwrap();
                assert_eq!(left, right);
            }
        }
    }
}

#[test]
fn sign_is_a_cocycle_with_integer_values() {
    for q in 0..=3 {
        let sets = SubsetIndex::all(q);
        for &i in &sets {
            for &j in &sets {
                let direct = sign_eps(i, j);
                let inversions = i.iter().flat_map(|a| j.iter().map(move |b| a > b)).filter(|&x| x).count();
                let expected = if !i.is_disjoint(j) { 0 } else if inversions % 2 == 0 { 1 } else { -1 };
                assert_eq!(direct, expected);
                for &k in &sets {
                    if !(i.is_disjoint(j) && j.is_disjoint(k) && i.is_disjoint(k)) {
                        continue;
                    }
                    let left = sign_eps(i, j) * sign_eps(i.union(j), k);
                    let right = sign_eps(j, k) * sign_eps(i, j.union(k));
                    assert_eq!(left, right);
                }
            }
        }
    }
}

fn element(q: usize) -> impl Strategy<Value = GrassmannElement> {
    let len = 1usize << (2 * q);
    proptest::collection::vec((-3i32..=3, -3i32..=3), len).prop_map(move |coeffs| {
        let sets = SubsetIndex::all(q);
        let mut out = GrassmannElement::zero(q);
        for (idx, (re, im)) in coeffs.into_iter().enumerate() {
            let (i, j) = (sets[idx / sets.len()], sets[idx % sets.len()]);
            let c = Complex64::new(re as f64, im as f64);
            out = out.add(&GrassmannElement::monomial(q, i, j, c)).unwrap();
        }
        out
    })
}

proptest! {
    // Small integer coefficients keep every product exact in floating point.
    #[test]
    fn laws_hold_for_integer_elements(
        (a, b, c) in (0usize..=3).prop_flat_map(|q| (element(q), element(q), element(q)))
    ) {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(ab.mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(ab.star(), b.star().mul(&a.star()).unwrap());
        let sum = a.add(&b).unwrap();
        prop_assert_eq!(sum.mul(&c).unwrap(), a.mul(&c).unwrap().add(&b.mul(&c).unwrap()).unwrap());
    }

    #[test]
    fn odd_generators_square_to_zero(q in 1usize..=6, k in 1usize..=6) {
        prop_assume!(k <= q);
        let x = GrassmannElement::generator(q, k);
        let y = GrassmannElement::conj_generator(q, k);
        prop_assert!(x.mul(&x).unwrap().is_zero());
        prop_assert!(y.mul(&y).unwrap().is_zero());
        prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap().scale(Complex64::new(-1.0, 0.0)));
    }
}
