use std::collections::BTreeMap;

use num_complex::Complex64;
use proptest::prelude::*;
use superbergman::bergman::{super_inner_product, WeightedSpaceSpec};
use superbergman::grassmann::SubsetIndex;
use superbergman::oracle::{
    assemble_super_toeplitz, bargmann_qe_adjoint, bargmann_qe_forward, basis, commutator_norm, diagonality_defect,
    sequence_norm_sq, BasisIndex, Convention, OracleOptions,
};
use superbergman::spectra::{build_table, SpectralOptions};
use superbergman::symbols::{BallStructure, BallSymbol, Coefficient, MasgCase, SuperSymbol, Term};

const EMPTY: SubsetIndex = SubsetIndex::EMPTY;

fn options(convention: Convention) -> OracleOptions {
    OracleOptions { convention, ..OracleOptions::default() }
}

fn radial(terms: &[(f64, u32)]) -> Coefficient {
    Coefficient::from_terms(terms.iter().map(|&(c, e)| Term::new(c, vec![e], 0.0)).collect())
}

#[test]
fn identity_symbol_gives_the_identity() {
    for (p, q, nu, n_max) in [(1usize, 1usize, 2.0, 16u32), (2, 1, 4.0, 8)] {
        let spec = WeightedSpaceSpec::ball(p, q, nu).unwrap();
        let one = SuperSymbol::one(MasgCase::QuasiElliptic, p, q).unwrap().to_ball();
        for convention in [Convention::Printed, Convention::Berezin] {
            let t = assemble_super_toeplitz(&one, &spec, n_max, &options(convention)).unwrap();
            assert!(t.identity_defect(n_max) <= 1e-10, "{convention:?} at p={p}");
        }
    }
}

#[test]
fn quasi_elliptic_symbol_is_diagonal_with_its_spectrum() {
    let (nu, n_max) = (2.0, 12);
    let spec = WeightedSpaceSpec::ball(1, 1, nu).unwrap();
    let symbol = SuperSymbol::new(MasgCase::QuasiElliptic, 1, 1)
        .unwrap()
        .with(EMPTY, radial(&[(1.0, 0), (1.0, 2)]))
        .unwrap()
        .with(SubsetIndex::singleton(1), radial(&[(0.5, 0), (1.0, 4)]))
        .unwrap();
    let t = assemble_super_toeplitz(&symbol.to_ball(), &spec, n_max, &OracleOptions::default()).unwrap();
    assert!(diagonality_defect(&t, n_max) <= 1e-8);
    let table = build_table(&symbol, nu, n_max, &[], &[], &SpectralOptions::default()).unwrap();
    for (k, index) in t.basis.iter().enumerate() {
        let expected = table.get(index.m, &index.n, None).unwrap().value.unwrap();
        assert!((t.data[(k, k)] - expected).norm() <= 1e-8, "{index:?}");
    }
}

#[test]
fn commutators_separate_invariant_from_noninvariant_pairs() {
    let spec = WeightedSpaceSpec::ball(1, 1, 2.0).unwrap();
    let n_max = 12;
    let build = |f: fn(&[Complex64]) -> Complex64, structure| {
        let symbol = BallSymbol::new(1, 1, structure).with(EMPTY, EMPTY, f);
        assemble_super_toeplitz(&symbol, &spec, n_max, &OracleOptions::default()).unwrap()
    };
    let re_z = build(|z| Complex64::new(z[0].re, 0.0), BallStructure::Generic);
    let abs_sq = build(|z| Complex64::new(z[0].norm_sqr(), 0.0), BallStructure::Radial);
    let quartic = build(|z| Complex64::new(z[0].norm_sqr().powi(2), 0.0), BallStructure::Radial);
    assert!(commutator_norm(&re_z, &abs_sq, 6).unwrap() >= 1e-3);
    assert!(commutator_norm(&quartic, &abs_sq, 6).unwrap() <= 1e-8);
    assert_eq!(commutator_norm(&re_z, &re_z, 6).unwrap(), 0.0);
}

fn sequence(p: usize, q: usize, n_max: u32) -> impl Strategy<Value = BTreeMap<BasisIndex, Complex64>> {
    let indices = basis(p, q, n_max);
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), indices.len()).prop_map(move |values| {
        indices.iter().cloned().zip(values.into_iter().map(|(a, b)| Complex64::new(a, b))).collect()
    })
}

fn sized_sequence() -> impl Strategy<Value = (WeightedSpaceSpec, BTreeMap<BasisIndex, Complex64>)> {
    prop_oneof![Just((1usize, 1usize, 2.0)), Just((2, 2, 3.5)), Just((3, 1, 4.0))].prop_flat_map(|(p, q, nu)| {
        (Just(WeightedSpaceSpec::ball(p, q, nu).unwrap()), sequence(p, q, 5))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bargmann_map_is_unitary_on_truncations((spec, c) in sized_sequence()) {
        let psi = bargmann_qe_adjoint(&spec, &c).unwrap();
        let back = bargmann_qe_forward(&spec, &psi).unwrap();
        for (index, value) in &c {
            prop_assert!((back[index] - value).norm() <= 1e-12);
        }
        let norm = super_inner_product(&spec, &psi, &psi).unwrap().re;
        let expected = sequence_norm_sq(&c);
        prop_assert!((norm - expected).abs() <= 1e-12 * expected);
    }
}
