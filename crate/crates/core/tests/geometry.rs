use num_complex::Complex64;
use proptest::prelude::*;
use superbergman::domains::{
    berezinian, cayley, cayley_berezinian, cayley_inv, cayley_inv_berezinian, cayley_jacobian,
    pairing_transfer_residuals, BallPoint, SuperBallPoint,
};

/// Points of the ball of radius 0.9, drawn in a cube and radially shrunk.
fn ball_point(p: usize) -> impl Strategy<Value = BallPoint> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), p).prop_map(|v| {
        let z: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let scale = if norm > 0.9 { 0.9 / norm } else { 1.0 };
        BallPoint::new(z.into_iter().map(|c| c * scale).collect())
    })
}

fn odd(q: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)), q)
}

fn sized() -> impl Strategy<Value = (BallPoint, BallPoint, Vec<Complex64>, Vec<Complex64>)> {
    (1usize..=3, 0usize..=3).prop_flat_map(|(p, q)| (ball_point(p), ball_point(p), odd(q), odd(q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cayley_roundtrip((z, _, _, _) in sized()) {
        let back = cayley_inv(&cayley(&z).unwrap()).unwrap();
        for (a, b) in z.z.iter().zip(&back.z) {
            prop_assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn cayley_lands_in_the_siegel_domain((z, _, _, _) in sized()) {
        let w = cayley(&z).unwrap();
        prop_assert!(w.defect() > 0.0);
    }

    #[test]
    fn pairing_transfers_through_cayley((a, b, x, y) in sized()) {
        let a = SuperBallPoint { even: a, odd: x };
        let b = SuperBallPoint { even: b, odd: y };
        let (first, second) = pairing_transfer_residuals(&a, &b).unwrap();
        prop_assert!(first <= 1e-12, "first identity residual {first}");
        prop_assert!(second <= 1e-12, "second identity residual {second}");
    }

    #[test]
    fn corrected_berezinian_matches_the_jacobian((z, _, x, _) in sized()) {
        let q = x.len();
        let closed = cayley_berezinian(&z, q, false).unwrap();
        let assembled = berezinian(&cayley_jacobian(&z, q).unwrap()).unwrap();
        prop_assert!((closed - assembled).norm() <= 1e-12 * assembled.norm());
        let inverse = cayley_inv_berezinian(&cayley(&z).unwrap(), q, false).unwrap();
        prop_assert!((closed * inverse - 1.0).norm() <= 1e-12);
    }

    #[test]
    fn printed_berezinian_is_off_by_a_factor_of_i((z, _, x, _) in sized()) {
        let q = x.len();
        let printed = cayley_berezinian(&z, q, true).unwrap();
        let corrected = cayley_berezinian(&z, q, false).unwrap();
        prop_assert!((printed / corrected - Complex64::I).norm() <= 1e-12);
    }
}
