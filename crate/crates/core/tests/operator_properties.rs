use hkit_core::{
    apply_hausdorff, verify_l1_bound, FunctionSpec, GridFunction, KernelSpec, MatrixFamily, QuadratureSpec, Region,
};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn random_grid(values: Vec<f64>) -> GridFunction {
    GridFunction::new(Region::cube(2, -3.0, 3.0).unwrap(), vec![16, 16], values).unwrap()
}

fn family() -> impl Strategy<Value = MatrixFamily> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(|s| MatrixFamily::ScalarDilation { dim: 2, scale: s }),
        (0.3..2.0f64, 0.0..6.0f64, -1.0..1.0f64).prop_map(|(scale, angle, rate)| MatrixFamily::RotationScale {
            dim: 2,
            scale,
            radial_power: 1.0,
            angle,
            angle_rate: rate,
        }),
        (-1.0..1.0f64, 0.5..2.0f64).prop_map(|(shear, squash)| MatrixFamily::Shear {
            dim: 2,
            shear,
            shear_rate: 0.3,
            squash,
        }),
    ]
}

fn phi() -> KernelSpec {
    KernelSpec::radial_bump(vec![1.0, 0.6], 0.4)
}

fn q() -> QuadratureSpec {
    QuadratureSpec::gauss(8)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, rng_seed: RngSeed::Fixed(11), ..ProptestConfig::default() })]

    #[test]
    fn operator_is_linear(
        a in family(),
        f in prop::collection::vec(-1.0..1.0f64, 256),
        g in prop::collection::vec(-1.0..1.0f64, 256),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let (f, g) = (random_grid(f), random_grid(g));
        let combined = apply_hausdorff(&phi(), &a, &f.linear_combination(alpha, &g, beta).unwrap(), &q()).unwrap().grid;
        let hf = apply_hausdorff(&phi(), &a, &f, &q()).unwrap().grid;
        let hg = apply_hausdorff(&phi(), &a, &g, &q()).unwrap().grid;
        let expected = hf.linear_combination(alpha, &hg, beta).unwrap();
        prop_assert!(combined.max_abs_diff(&expected).unwrap() <= 1e-12 * (1.0 + expected.max_abs()));
    }

    #[test]
    fn operator_preserves_positivity(a in family(), f in prop::collection::vec(0.0..1.0f64, 256)) {
        let out = apply_hausdorff(&phi(), &a, &random_grid(f), &q()).unwrap();
        prop_assert!(out.grid.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn disjoint_kernel_pieces_add(a in family(), f in prop::collection::vec(-1.0..1.0f64, 256), cut in 0.7..1.3f64) {
        let f = random_grid(f);
        let whole = phi();
        let left = whole.windowed(Region::new(vec![0.0, 0.0], vec![cut, 2.0]).unwrap());
        let right = whole.windowed(Region::new(vec![cut, 0.0], vec![2.0, 2.0]).unwrap());
        let all = apply_hausdorff(&whole, &a, &f, &q()).unwrap().grid;
        let l = apply_hausdorff(&left, &a, &f, &q()).unwrap().grid;
        let r = apply_hausdorff(&right, &a, &f, &q()).unwrap().grid;
        let sum = l.linear_combination(1.0, &r, 1.0).unwrap();
        prop_assert!(all.max_abs_diff(&sum).unwrap() <= 1e-13 * (1.0 + all.max_abs()));
    }

    #[test]
    fn l1_bound_holds_for_smooth_data(a in family(), cx in -0.5..0.5f64, width in 0.5..1.0f64) {
        let f = GridFunction::sample(
            &FunctionSpec::Gaussian { center: vec![cx, 0.0], width, amplitude: 1.0 },
            Region::cube(2, -4.0, 4.0).unwrap(),
            vec![96, 96],
        ).unwrap();
        let r = verify_l1_bound(&phi(), &a, &f, &QuadratureSpec::gauss(16), 0.05).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }
}

fn equality_case(res: usize, nodes: usize) -> f64 {
    let f = GridFunction::sample(
        &FunctionSpec::Indicator { lo: vec![0.0], hi: vec![1.0], value: 1.0 },
        Region::cube(1, -2.0, 2.0).unwrap(),
        vec![res],
    )
    .unwrap();
    verify_l1_bound(
        &KernelSpec::indicator(vec![1.0], vec![2.0]),
        &MatrixFamily::dilation(1),
        &f,
        &QuadratureSpec::gauss(nodes),
        0.05,
    )
    .unwrap()
    .ratio
}

#[test]
fn equality_ratio_settles_at_one() {
    let ratios: Vec<f64> = [(256, 16), (512, 32), (1024, 64), (2048, 128)]
        .iter()
        .map(|&(r, m)| equality_case(r, m))
        .collect();
    for w in ratios.windows(2) {
        assert!((w[1] - 1.0).abs() <= (w[0] - 1.0).abs(), "{ratios:?}");
    }
    assert!((ratios[3] - 1.0).abs() < 1e-5, "{ratios:?}");
}

#[test]
fn signed_data_stays_below_the_bound() {
    let f = GridFunction::sample(
        &FunctionSpec::PolyBump { center: vec![0.1], radius: 1.0, exponents: vec![1], amplitude: 1.0 },
        Region::cube(1, -4.0, 4.0).unwrap(),
        vec![2048],
    )
    .unwrap();
    let r = verify_l1_bound(
        &KernelSpec::unit_gaussian(vec![1.2], 0.2),
        &MatrixFamily::dilation(1),
        &f,
        &QuadratureSpec::gauss(64),
        0.0,
    )
    .unwrap();
    assert!(r.pass && r.ratio < 1.0, "{r:?}");
}
