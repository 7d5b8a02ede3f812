use num_complex::Complex64;
use proptest::prelude::*;
use superbergman::bergman::{
    monomial_norm_sq, reproduce_check, siegel_norm_sq_via_ball, super_inner_product, MultiIndex, SuperPolynomial,
    WeightedSpaceSpec,
};
use superbergman::domains::{measure_density, BallPoint, Domain};
use superbergman::grassmann::SubsetIndex;

/// Gauss-Legendre nodes and weights on `(0, 1)` by Newton iteration on `P_m`.
fn legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut derivative = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                derivative = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / derivative;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
            ((1.0 + x) / 2.0, w / 2.0)
        })
        .collect()
}

/// `∫_{B^p} Π|z_k|^{2 n_k} dμ_ν` for `p ∈ {1, 2}`, using `|z|² = 1 − u²` so
/// that the boundary factor becomes a power of `u`.
fn moment(nu: f64, n: &[u32]) -> f64 {
    let rule = legendre(48);
    let p = n.len();
    let mut total = 0.0;
    for &(u, wu) in &rule {
        let s_total = 1.0 - u * u;
        let outer = wu * 2.0 * u;
        let inner: Vec<(Vec<f64>, f64)> = match p {
            1 => vec![(vec![s_total], 1.0)],
            2 => rule.iter().map(|&(s, ws)| (vec![s_total * s, s_total * (1.0 - s)], ws * s_total)).collect(),
            _ => unreachable!("only p = 1, 2"),
        };
        for (t, w) in inner {
            let z: Vec<Complex64> = t.iter().map(|x| Complex64::new(x.sqrt(), 0.0)).collect();
            let density = measure_density(Domain::Ball, nu, &z).unwrap();
            let mono: f64 = t.iter().zip(n).map(|(x, &e)| x.powi(e as i32)).product();
            total += outer * w * density * mono;
        }
    }
    std::f64::consts::PI.powi(p as i32) * total
}

#[test]
fn weighted_measure_is_a_probability() {
    for (p, nu) in [(1usize, 2.0), (2, 3.5)] {
        let mass = moment(nu, &vec![0; p]);
        assert!((mass - 1.0).abs() <= 1e-8, "p={p} nu={nu}: mass {mass}");
    }
}

#[test]
fn monomial_norms_match_quadrature() {
    for (p, nu) in [(1usize, 2.0), (2, 3.5)] {
        for n in MultiIndex::up_to(p, 8) {
            let quad = moment(nu, &n.0);
            let exact = monomial_norm_sq(nu, &n).unwrap();
            assert!((quad - exact).abs() <= 1e-10, "p={p} n={:?}: {quad} vs {exact}", n.0);
        }
    }
}

#[test]
fn cayley_transform_preserves_norms_of_sample_polynomials() {
    let spec = WeightedSpaceSpec::ball(1, 1, 3.0).unwrap();
    let one = MultiIndex(vec![1]);
    let psi = SuperPolynomial::zero(1, 1)
        .with_term(SubsetIndex::EMPTY, MultiIndex(vec![0]), Complex64::new(0.5, 0.2))
        .unwrap()
        .with_term(SubsetIndex::EMPTY, one.clone(), Complex64::new(-0.3, 0.4))
        .unwrap()
        .with_term(SubsetIndex::singleton(1), one, Complex64::new(0.1, -0.7))
        .unwrap();
    let ball = super_inner_product(&spec, &psi, &psi).unwrap().re;
    let siegel = siegel_norm_sq_via_ball(&spec, &psi, 64, 64).unwrap();
    assert!((ball - siegel).abs() <= 1e-6 * ball, "{ball} vs {siegel}");
}

fn polynomial(p: usize, q: usize, degree: u32) -> impl Strategy<Value = SuperPolynomial> {
    let slots: Vec<(SubsetIndex, MultiIndex)> = SubsetIndex::all(q)
        .into_iter()
        .flat_map(|m| MultiIndex::up_to(p, degree).into_iter().map(move |n| (m, n)))
        .collect();
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), slots.len()).prop_map(move |c| {
        let mut out = SuperPolynomial::zero(p, q);
        for ((m, n), (re, im)) in slots.iter().zip(c) {
            out.add_term(*m, n.clone(), Complex64::new(re, im)).unwrap();
        }
        out
    })
}

fn point(p: usize) -> impl Strategy<Value = BallPoint> {
    proptest::collection::vec((-0.6f64..0.6, -0.6f64..0.6), p)
        .prop_map(move |v| {
            let shrink = 1.0 / (p as f64).sqrt();
            BallPoint::new(v.into_iter().map(|(a, b)| Complex64::new(a, b) * shrink).collect())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_reproduces_polynomials(psi in polynomial(1, 1, 4), z in point(1)) {
        let spec = WeightedSpaceSpec::ball(1, 1, 3.0).unwrap();
        prop_assert!(reproduce_check(&spec, &psi, &z).unwrap() <= 1e-10);
    }

    #[test]
    fn kernel_reproduces_in_two_variables(psi in polynomial(2, 2, 3), z in point(2)) {
        let spec = WeightedSpaceSpec::ball(2, 2, 3.5).unwrap();
        prop_assert!(reproduce_check(&spec, &psi, &z).unwrap() <= 1e-10);
    }

    #[test]
    fn inner_product_is_hermitian_and_positive(a in polynomial(2, 1, 3), b in polynomial(2, 1, 3)) {
        let spec = WeightedSpaceSpec::ball(2, 1, 3.0).unwrap();
        let ab = super_inner_product(&spec, &a, &b).unwrap();
        let ba = super_inner_product(&spec, &b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() <= 1e-12);
        let aa = super_inner_product(&spec, &a, &a).unwrap();
        prop_assert!(aa.re > 0.0 && aa.im.abs() <= 1e-14);
    }
}
