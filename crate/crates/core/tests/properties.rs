use approx::assert_relative_eq;
use npsense::geometry::FourierMode;
use npsense::gpt::orders;
use npsense::sensitivity::make_basis;
use npsense::{
    compute_gpt, gpt_jacobian, gpt_sensitivity, make_shape, perturb_curve, recover_hh, BasisKind, BoundaryCurve,
    PerturbationField, ShapeSpec,
};
use proptest::prelude::*;

fn fourier_curve() -> impl Strategy<Value = BoundaryCurve> {
    (0.6f64..1.4, prop::collection::vec((2u32..6, -0.06f64..0.06, -0.06f64..0.06), 1..3)).prop_map(|(r0, modes)| {
        let modes = modes.into_iter().map(|(m, c, s)| FourierMode { m, cos: c * r0, sin: s * r0 }).collect();
        make_shape(&ShapeSpec::FourierCurve { r0, modes }, 96).unwrap()
    })
}

fn field(curve: &BoundaryCurve, coeffs: &[f64]) -> PerturbationField {
    let c = coeffs.to_vec();
    PerturbationField::from_fn(curve, move |t| c.iter().enumerate().map(|(k, a)| a * ((k as f64) * t + 0.3 * k as f64).cos()).sum())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gauss_bonnet(curve in fourier_curve()) {
        let total: f64 = curve.curvature.iter().zip(&curve.weights).map(|(h, w)| h * w).sum();
        assert_relative_eq!(total, 2.0 * std::f64::consts::PI, epsilon = 1e-10);
    }

    #[test]
    fn zero_step_is_identity(curve in fourier_curve(), coeffs in prop::collection::vec(-1.0f64..1.0, 4)) {
        let moved = perturb_curve(&curve, &field(&curve, &coeffs), 0.0).unwrap();
        for (a, b) in moved.nodes.iter().zip(&curve.nodes) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn gpt_is_hermitian(curve in fourier_curve(), lambda in prop_oneof![0.6f64..4.0, -4.0f64..-0.6]) {
        let m = compute_gpt(&curve, lambda, 3).unwrap();
        for &a in &orders(3) {
            for &b in &orders(3) {
                prop_assert!((m.get(a, b) - m.get(b, a).conj()).norm() <= 1e-9 * m.frobenius());
            }
        }
    }

    #[test]
    fn jacobian_is_linear(
        curve in fourier_curve(),
        c1 in prop::collection::vec(-1.0f64..1.0, 5),
        c2 in prop::collection::vec(-1.0f64..1.0, 5),
        t in -2.0f64..2.0,
    ) {
        let jac = gpt_jacobian(&curve, 1.3, 3, make_basis(&curve, BasisKind::Fourier { max_mode: 2 })).unwrap();
        let (h1, h2) = (field(&curve, &c1), field(&curve, &c2));
        let lhs = jac.evaluate(&h1.add(&h2.scaled(t))).unwrap();
        let rhs = jac.evaluate(&h1).unwrap() + jac.evaluate(&h2).unwrap() * npsense::potentials::C64::new(t, 0.0);
        prop_assert!((&lhs - &rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn recovery_is_linear(curve in fourier_curve(), c1 in prop::collection::vec(-1.0f64..1.0, 4), c2 in prop::collection::vec(-1.0f64..1.0, 4)) {
        let (h1, h2) = (field(&curve, &c1), field(&curve, &c2));
        let m1 = gpt_sensitivity(&curve, 1.3, &h1, 4).unwrap();
        let m2 = gpt_sensitivity(&curve, 1.3, &h2, 4).unwrap();
        let sum = npsense::GptMatrix { entries: &m1.entries + &m2.entries, ..m1.clone() };
        let (r1, r2, rs) = (recover_hh(&curve, 1.3, &m1, 3).unwrap(), recover_hh(&curve, 1.3, &m2, 3).unwrap(), recover_hh(&curve, 1.3, &sum, 3).unwrap());
        for j in 0..curve.len() {
            prop_assert!((rs.h[j] - r1.h[j] - r2.h[j]).abs() <= 1e-10 * (1.0 + rs.h[j].abs()));
        }
    }
}
