use hkit_core::{compare_conditions, norm_l2, norm_l_a, norm_lstar, KernelSpec, MatrixFamily, QuadratureSpec, SquareMatrix};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.5..1.5f64, 0.5..1.5f64, 0.2..1.0f64).prop_map(|(a, b, w)| KernelSpec::indicator(vec![a, b], vec![a + w, b + w])),
        (0.8..1.5f64, 0.8..1.5f64, 0.05..0.1f64).prop_map(|(a, b, s)| KernelSpec::unit_gaussian(vec![a, b], s)),
        (0.8..1.5f64, 0.8..1.5f64, 0.2..0.5f64).prop_map(|(a, b, r)| KernelSpec::radial_bump(vec![a, b], r)),
    ]
}

fn family() -> impl Strategy<Value = MatrixFamily> {
    prop_oneof![
        (0.5..2.0f64).prop_map(|s| MatrixFamily::ScalarDilation { dim: 2, scale: s }),
        (0.5..2.0f64).prop_map(|s| MatrixFamily::Diagonal { dim: 2, scale: s }),
        (0.5..2.0f64, -1.0..1.0f64, 0.0..6.0f64, -1.0..1.0f64).prop_map(|(scale, p, angle, rate)| {
            MatrixFamily::RotationScale {
                dim: 2,
                scale,
                radial_power: p,
                angle,
                angle_rate: rate,
            }
        }),
        (-1.0..1.0f64, -0.5..0.5f64, 0.5..2.0f64).prop_map(|(shear, rate, squash)| MatrixFamily::Shear {
            dim: 2,
            shear,
            shear_rate: rate,
            squash,
        }),
    ]
}

fn q() -> QuadratureSpec {
    QuadratureSpec::default_for(2)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, rng_seed: RngSeed::Fixed(2024), ..ProptestConfig::default() })]

    #[test]
    fn scaling_the_kernel_scales_every_norm(phi in kernel(), a in family(), lambda in -3.0..3.0f64) {
        prop_assume!(lambda.abs() > 1e-3);
        let base = compare_conditions(&phi, &a, &q()).unwrap();
        let scaled = compare_conditions(&phi.scaled(lambda), &a, &q()).unwrap();
        for (s, b) in [(&scaled.l_a, &base.l_a), (&scaled.l_star, &base.l_star), (&scaled.l_2, &base.l_2)] {
            prop_assert!((s.value - lambda.abs() * b.value).abs() <= 1e-13 * s.value);
        }
    }

    #[test]
    fn refinement_changes_norms_below_rtol(phi in kernel(), a in family()) {
        let c = compare_conditions(&phi, &a, &q()).unwrap();
        for r in [&c.l_a, &c.l_star, &c.l_2] {
            prop_assert!(r.relative_change < 1e-3);
        }
        prop_assert!(c.l_2.identity_deviation.unwrap() <= 1e-8);
    }

    #[test]
    fn orthogonal_fields_give_kernel_mass(phi in kernel(), angle in 0.0..6.0f64, rate in -2.0..2.0f64) {
        let rot = MatrixFamily::RotationScale { dim: 2, scale: 1.0, radial_power: 0.0, angle, angle_rate: rate };
        let l2 = norm_l2(&phi, &rot, &q()).unwrap();
        prop_assert!((l2.value - l2.kernel_mass).abs() <= 1e-12 * l2.kernel_mass);
        // |cos| + |sin| has kinks where the angle crosses a multiple of pi/2
        let star = norm_lstar(&phi, &rot, &QuadratureSpec::gauss(128)).unwrap();
        prop_assert!(star.value >= l2.value * (1.0 - 1e-12));
    }

    #[test]
    fn diagonal_fields_have_equal_star_and_l2(phi in kernel(), s in 0.5..2.0f64) {
        let d = MatrixFamily::Diagonal { dim: 2, scale: s };
        let q = QuadratureSpec::gauss(64);
        let star = norm_lstar(&phi, &d, &q).unwrap().value;
        let two = norm_l2(&phi, &d, &q).unwrap().value;
        prop_assert!((star - two).abs() <= 1e-3 * two);
    }

    #[test]
    fn constant_matrices_factor_out(phi in kernel(), entries in prop::collection::vec(-2.0..2.0f64, 4)) {
        let m = SquareMatrix::new(2, entries).unwrap();
        prop_assume!(!m.is_singular());
        let a = MatrixFamily::constant(m.clone());
        let mass = norm_l2(&phi, &MatrixFamily::identity(2), &q()).unwrap().value;
        let la = norm_l_a(&phi, &a, &q()).unwrap().value;
        prop_assert!((la - mass / m.det().abs()).abs() <= 1e-10 * la);
        let star = norm_lstar(&phi, &a, &q()).unwrap().value;
        prop_assert!((star - mass * m.ell_norm().powi(2)).abs() <= 1e-10 * star);
    }
}

#[test]
fn one_dimensional_dilation_values() {
    let phi = KernelSpec::indicator(vec![1.0], vec![2.0]);
    let q = QuadratureSpec::gauss(64);
    let a = MatrixFamily::dilation(1);
    let c = compare_conditions(&phi, &a, &q).unwrap();
    for v in [c.l_a.value, c.l_star.value, c.l_2.value] {
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12);
    }
    let d = norm_l_a(&KernelSpec::indicator(vec![1.0, 1.0], vec![2.0, 2.0]), &MatrixFamily::diagonal(2), &q).unwrap();
    assert!((d.value - std::f64::consts::LN_2.powi(2)).abs() < 1e-12);
}
