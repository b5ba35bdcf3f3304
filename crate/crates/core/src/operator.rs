//! The Hausdorff operator `(H f)(x) = int Phi(u) f(x A(u)) du` on grids.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::grid::{GridFunction, MAX_GRID_DIM};
use crate::kernel::KernelSpec;
use crate::norms::norm_l_a;
use crate::quadrature::{pairwise_sum, QuadratureSpec};
use crate::report::VerificationReport;

/// Default margin for discretisation error in the L1 inequality.
pub const DEFAULT_L1_SLACK: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct HausdorffOutput {
    pub grid: GridFunction,
    /// Share of `sum_x sum_k w_k |Phi(u_k)|` whose image `x A(u_k)` left the box of `f`.
    pub out_of_box_fraction: f64,
    /// `sum_k w_k |Phi(u_k)|` on nodes whose matrix could not be evaluated.
    pub skipped_mass: f64,
    pub active_nodes: usize,
}

struct Node {
    coefficient: f64,
    matrix: Vec<f64>,
}

fn collect_nodes(phi: &KernelSpec, a: &MatrixFamily, q: &QuadratureSpec) -> Result<(Vec<Node>, f64)> {
    let region = q.truncation.clone().unwrap_or_else(|| phi.support());
    let nodes = q.nodes(&region);
    let n = phi.dim();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    let mut u = vec![0.0; n];
    for k in 0..nodes.len() {
        let w = nodes.node(k, &mut u);
        let coefficient = w * phi.eval(&u);
        if coefficient == 0.0 {
            continue;
        }
        match a.matrix_at(&u) {
            Ok(m) => out.push(Node {
                coefficient,
                matrix: m.entries().to_vec(),
            }),
            Err(Error::SingularMatrix { .. }) => skipped.push(coefficient.abs()),
            Err(e) => return Err(e),
        }
    }
    Ok((out, pairwise_sum(&skipped)))
}

/// `(H f)(x) = sum_k w_k Phi(u_k) f(x A(u_k))` at every cell centre of `f`'s grid.
pub fn apply_hausdorff(
    phi: &KernelSpec,
    a: &MatrixFamily,
    f: &GridFunction,
    q: &QuadratureSpec,
) -> Result<HausdorffOutput> {
    phi.validate()?;
    a.validate()?;
    q.validate()?;
    let n = f.dim();
    for found in [phi.dim(), a.dim()] {
        if found != n {
            return Err(Error::DimensionMismatch { expected: n, found });
        }
    }
    if n > MAX_GRID_DIM {
        return Err(Error::InvalidInput(format!("at most {MAX_GRID_DIM} dimensions supported")));
    }
    let (nodes, skipped_mass) = collect_nodes(phi, a, q)?;
    let node_mass: f64 = pairwise_sum(&nodes.iter().map(|k| k.coefficient.abs()).collect::<Vec<_>>());

    let per_point: Vec<(f64, f64)> = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let x = f.point(i);
            let mut image = [0.0; MAX_GRID_DIM];
            let mut value = 0.0;
            let mut lost = 0.0;
            for node in &nodes {
                for (j, y) in image.iter_mut().enumerate().take(n) {
                    *y = (0..n).map(|r| x[r] * node.matrix[r * n + j]).sum();
                }
                let y = &image[..n];
                if f.contains(y) {
                    value += node.coefficient * f.eval_interp(y);
                } else {
                    lost += node.coefficient.abs();
                }
            }
            (value, lost)
        })
        .collect();

    let values = per_point.iter().map(|p| p.0).collect();
    let lost = pairwise_sum(&per_point.iter().map(|p| p.1).collect::<Vec<_>>());
    let total = node_mass * f.len() as f64;
    Ok(HausdorffOutput {
        grid: f.with_values(values)?,
        out_of_box_fraction: if total > 0.0 { lost / total } else { 0.0 },
        skipped_mass,
        active_nodes: nodes.len(),
    })
}

/// `||H f||_1 <= ||Phi||_{L_A} ||f||_1`, accepted up to `slack`.
pub fn verify_l1_bound(
    phi: &KernelSpec,
    a: &MatrixFamily,
    f: &GridFunction,
    q: &QuadratureSpec,
    slack: f64,
) -> Result<VerificationReport> {
    if !(slack.is_finite() && slack >= 0.0) {
        return Err(Error::InvalidInput("slack must be non-negative".into()));
    }
    let image = apply_hausdorff(phi, a, f, q)?;
    let norm = norm_l_a(phi, a, q)?;
    let f_l1 = f.l1_norm();
    let lhs = image.grid.l1_norm();
    Ok(VerificationReport::upper_bound(lhs, norm.value * f_l1, slack)
        .with("norm_l_a", norm.value)
        .with("l1_f", f_l1)
        .with("l1_hf", lhs)
        .with("quadrature_relative_change", norm.relative_change)
        .with("out_of_box_fraction", image.out_of_box_fraction)
        .with("skipped_mass_ratio", norm.skipped_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FunctionSpec;
    use crate::linalg::SquareMatrix;
    use crate::quadrature::Region;

    fn chi01(res: usize) -> GridFunction {
        GridFunction::sample(
            &FunctionSpec::Indicator {
                lo: vec![0.0],
                hi: vec![1.0],
                value: 1.0,
            },
            Region::cube(1, -2.0, 2.0).unwrap(),
            vec![res],
        )
        .unwrap()
    }

    #[test]
    fn identity_field_averages_to_f() {
        let f = GridFunction::sample(
            &FunctionSpec::Gaussian {
                center: vec![0.2, -0.1],
                width: 1.0,
                amplitude: 1.0,
            },
            Region::cube(2, -5.0, 5.0).unwrap(),
            vec![32, 32],
        )
        .unwrap();
        let phi = KernelSpec::unit_gaussian(vec![0.0, 0.0], 0.5);
        let out = apply_hausdorff(&phi, &MatrixFamily::identity(2), &f, &QuadratureSpec::gauss(32)).unwrap();
        assert!(out.grid.max_abs_diff(&f).unwrap() < 1e-9 * f.max_abs());
        assert_eq!(out.out_of_box_fraction, 0.0);
    }

    #[test]
    fn dilation_of_indicator_matches_closed_form() {
        // H f(x) = |{u in (1,2): x u < 1}| for x > 0
        let f = chi01(1024);
        let phi = KernelSpec::indicator(vec![1.0], vec![2.0]);
        let out = apply_hausdorff(&phi, &MatrixFamily::dilation(1), &f, &QuadratureSpec::gauss(64)).unwrap();
        let exact = |x: f64| {
            if x <= 0.0 || x >= 1.0 {
                0.0
            } else if x <= 0.5 {
                1.0
            } else {
                1.0 / x - 1.0
            }
        };
        let mut err = 0.0;
        for i in 0..out.grid.len() {
            let x = out.grid.point(i)[0];
            err += (out.grid.values()[i] - exact(x)).abs() * out.grid.cell_volume();
        }
        assert!(err < 5e-3, "L1 error {err}");
        assert!((out.grid.l1_norm() - std::f64::consts::LN_2).abs() < 7e-3);
    }

    #[test]
    fn narrow_kernel_acts_as_fixed_dilation() {
        let f = GridFunction::sample(
            &FunctionSpec::Gaussian {
                center: vec![0.0],
                width: 1.0,
                amplitude: 1.0,
            },
            Region::cube(1, -6.0, 6.0).unwrap(),
            vec![1024],
        )
        .unwrap();
        let phi = KernelSpec::unit_gaussian(vec![2.0], 1e-3);
        let out = apply_hausdorff(&phi, &MatrixFamily::dilation(1), &f, &QuadratureSpec::gauss(32)).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..out.grid.len() {
            let x = out.grid.point(i)[0];
            worst = worst.max((out.grid.values()[i] - (-4.0 * x * x).exp()).abs());
        }
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn linear_in_f_and_additive_in_kernel() {
        let region = Region::cube(2, -3.0, 3.0).unwrap();
        let f = GridFunction::sample(
            &FunctionSpec::Gaussian {
                center: vec![0.5, 0.0],
                width: 0.8,
                amplitude: 1.0,
            },
            region.clone(),
            vec![16, 16],
        )
        .unwrap();
        let g = GridFunction::sample(
            &FunctionSpec::LaplacianGaussian {
                center: vec![0.0, 0.3],
                width: 0.6,
                amplitude: 2.0,
            },
            region,
            vec![16, 16],
        )
        .unwrap();
        let phi = KernelSpec::indicator(vec![0.5, -1.0], vec![1.5, 1.0]);
        let a = MatrixFamily::RotationScale {
            dim: 2,
            scale: 1.0,
            radial_power: 1.0,
            angle: 0.0,
            angle_rate: 1.0,
        };
        let q = QuadratureSpec::gauss(8);
        let h = |f: &GridFunction, phi: &KernelSpec, q: &QuadratureSpec| apply_hausdorff(phi, &a, f, q).unwrap().grid;
        let combo = f.linear_combination(2.0, &g, -0.5).unwrap();
        let lhs = h(&combo, &phi, &q);
        let rhs = h(&f, &phi, &q).linear_combination(2.0, &h(&g, &phi, &q), -0.5).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);

        let q = q.with_truncation(phi.support());
        let left = phi.windowed(Region::new(vec![0.5, -1.0], vec![1.0, 1.1]).unwrap());
        let right = phi.windowed(Region::new(vec![1.0, -1.0], vec![1.6, 1.1]).unwrap());
        let whole = h(&f, &phi, &q);
        let parts = h(&f, &left, &q).linear_combination(1.0, &h(&f, &right, &q), 1.0).unwrap();
        assert!(whole.max_abs_diff(&parts).unwrap() < 1e-13);
    }

    #[test]
    fn positivity() {
        let f = chi01(128);
        let phi = KernelSpec::radial_bump(vec![1.5], 0.4);
        let out = apply_hausdorff(&phi, &MatrixFamily::dilation(1), &f, &QuadratureSpec::gauss(16)).unwrap();
        assert!(out.grid.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn l1_bound_examples() {
        let f = chi01(1024);
        let phi = KernelSpec::indicator(vec![1.0], vec![2.0]);
        let r = verify_l1_bound(&phi, &MatrixFamily::dilation(1), &f, &QuadratureSpec::gauss(64), DEFAULT_L1_SLACK)
            .unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.rhs - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((r.ratio - 1.0).abs() < 0.01);

        // identity averaging with a kernel of mass 1/2
        let g = GridFunction::sample(
            &FunctionSpec::Gaussian {
                center: vec![0.0],
                width: 1.0,
                amplitude: 1.0,
            },
            Region::cube(1, -6.0, 6.0).unwrap(),
            vec![256],
        )
        .unwrap();
        let half = KernelSpec::unit_gaussian(vec![0.0], 1.0).scaled(0.5);
        let r = verify_l1_bound(&half, &MatrixFamily::identity(1), &g, &QuadratureSpec::gauss(32), 0.0).unwrap();
        assert!(r.pass);
        assert!((r.ratio - 1.0).abs() < 1e-10);
        assert!((r.lhs - 0.5 * g.l1_norm()).abs() < 1e-10);
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let f = chi01(16);
        let phi = KernelSpec::indicator(vec![1.0, 1.0], vec![2.0, 2.0]);
        assert!(matches!(
            apply_hausdorff(&phi, &MatrixFamily::diagonal(2), &f, &QuadratureSpec::gauss(4)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(verify_l1_bound(
            &KernelSpec::indicator(vec![1.0], vec![2.0]),
            &MatrixFamily::constant(SquareMatrix::identity(1)),
            &f,
            &QuadratureSpec::gauss(4),
            -1.0
        )
        .is_err());
    }
}
