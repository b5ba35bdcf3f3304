//! Kernel-weighted integrability conditions.
//!
//! Three weights are integrated against `|Phi(u)|` over the quadrature box:
//!
//! * `L_A`:   `|det A(u)^-1|`, the change-of-variables Jacobian;
//! * `L*_B`:  `ell_norm(B(u))^n`;
//! * `L2_B`:  `spectral_norm(B(u))^n`.
//!
//! The last two are normally evaluated with `B = A^-1` (see
//! [`MatrixFamily::inverted`]). Every integral is computed twice, at the
//! requested node count and at the refined one, and the refined value is
//! reported together with the relative change between the two.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::MatrixFamily;
use crate::kernel::KernelSpec;
use crate::quadrature::{pairwise_sum, QuadratureSpec, Region};

/// Largest accepted relative change of a norm under one refinement step.
pub const RTOL_QUAD: f64 = 1e-3;
/// Largest accepted share of `int |Phi|` sitting on singular nodes.
pub const MAX_SKIPPED_RATIO: f64 = 1e-6;
/// Node-level agreement between `||A^-1||_2^2` and `1 / l1(A^T)`.
pub const TOL_NODE_IDENTITY: f64 = 1e-8;
/// Number of nodes at which the L2 weight is cross-checked.
const IDENTITY_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `int |Phi| |det A^-1|`.
    LA,
    /// `int |Phi| ||B||_ell^n`.
    LStar,
    /// `int |Phi| ||B||_2^n`.
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub condition: Condition,
    pub value: f64,
    pub coarse_value: f64,
    pub relative_change: f64,
    pub nodes_per_axis: usize,
    /// `int |Phi|` over the quadrature box.
    pub kernel_mass: f64,
    /// `int |Phi|` over nodes where the matrix field is singular.
    pub skipped_mass: f64,
    pub skipped_ratio: f64,
    pub truncation_tail_bound: f64,
    /// Largest node-level deviation of the spectral identity (L2 only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionComparison {
    pub l_a: NormReport,
    pub l_star: NormReport,
    pub l_2: NormReport,
    pub ratio_l2_over_lstar: f64,
    pub ratio_la_over_l2: f64,
    pub smallest: Condition,
}

#[derive(Default, Clone, Copy)]
struct NodeSum {
    value: f64,
    mass: f64,
    skipped: f64,
    deviation: f64,
}

struct Pass {
    value: f64,
    mass: f64,
    skipped: f64,
    deviation: f64,
    worst_node: Vec<f64>,
}

fn check_inputs(phi: &KernelSpec, family: &MatrixFamily, q: &QuadratureSpec) -> Result<Region> {
    phi.validate()?;
    family.validate()?;
    q.validate()?;
    if phi.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.dim(),
            found: family.dim(),
        });
    }
    let support = phi.support();
    match &q.truncation {
        Some(t) => {
            if t.dim() != phi.dim() {
                return Err(Error::DimensionMismatch {
                    expected: phi.dim(),
                    found: t.dim(),
                });
            }
            if !t.contains_region(&support) {
                return Err(Error::InvalidInput(
                    "quadrature truncation box must contain the kernel support".into(),
                ));
            }
            Ok(t.clone())
        }
        None => Ok(support),
    }
}

/// Integrates `|Phi(u)| * weight(u)` on one tensor grid. `check`, when set,
/// returns a node-level deviation evaluated on a subsample of nodes.
fn run_pass<W, C>(
    phi: &KernelSpec,
    family: &MatrixFamily,
    q: &QuadratureSpec,
    region: &Region,
    weight: &W,
    check: Option<&C>,
) -> Result<Pass>
where
    W: Fn(&[f64]) -> Result<f64> + Sync,
    C: Fn(&[f64]) -> Result<f64> + Sync,
{
    let nodes = q.nodes(region);
    let n = phi.dim();
    let stride = (nodes.len() / IDENTITY_SAMPLES).max(1);
    let per_node: Vec<NodeSum> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let mut u = vec![0.0; n];
            let w = nodes.node(k, &mut u);
            let mass = w * phi.eval(&u).abs();
            if mass == 0.0 {
                return Ok(NodeSum::default());
            }
            if family.singular_at(&u) {
                return Ok(NodeSum {
                    mass,
                    skipped: mass,
                    ..NodeSum::default()
                });
            }
            let deviation = match check {
                Some(c) if k % stride == 0 => c(&u)?,
                _ => 0.0,
            };
            Ok(NodeSum {
                value: mass * weight(&u)?,
                mass,
                skipped: 0.0,
                deviation,
            })
        })
        .collect::<Result<_>>()?;

    let column = |f: fn(&NodeSum) -> f64| pairwise_sum(&per_node.iter().map(f).collect::<Vec<_>>());
    let (worst, deviation) = per_node
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |(bk, bd), (k, s)| if s.deviation > bd { (k, s.deviation) } else { (bk, bd) });
    let mut worst_node = vec![0.0; n];
    nodes.node(worst, &mut worst_node);
    Ok(Pass {
        value: column(|s| s.value),
        mass: column(|s| s.mass),
        skipped: column(|s| s.skipped),
        deviation,
        worst_node,
    })
}

fn weighted_norm<W, C>(
    condition: Condition,
    phi: &KernelSpec,
    family: &MatrixFamily,
    q: &QuadratureSpec,
    weight: W,
    check: Option<C>,
) -> Result<NormReport>
where
    W: Fn(&[f64]) -> Result<f64> + Sync,
    C: Fn(&[f64]) -> Result<f64> + Sync,
{
    let region = check_inputs(phi, family, q)?;
    let coarse = run_pass(phi, family, q, &region, &weight, None::<&C>)?;
    let refined_spec = q.refined();
    let fine = run_pass(phi, family, &refined_spec, &region, &weight, check.as_ref())?;

    if check.is_some() && fine.deviation > TOL_NODE_IDENTITY {
        return Err(Error::SpectralIdentityViolated {
            node: fine.worst_node,
            deviation: fine.deviation,
        });
    }
    let relative_change = relative_change(fine.value, coarse.value);
    if !fine.value.is_finite() || relative_change > q.rtol {
        return Err(Error::QuadratureDiverged {
            relative_change,
            rtol: q.rtol,
        });
    }
    let skipped_ratio = if fine.mass > 0.0 { fine.skipped / fine.mass } else { 0.0 };
    if skipped_ratio > MAX_SKIPPED_RATIO {
        return Err(Error::TooMuchSkippedMass {
            ratio: skipped_ratio,
            limit: MAX_SKIPPED_RATIO,
        });
    }
    Ok(NormReport {
        condition,
        value: fine.value,
        coarse_value: coarse.value,
        relative_change,
        nodes_per_axis: refined_spec.nodes_per_axis,
        kernel_mass: fine.mass,
        skipped_mass: fine.skipped,
        skipped_ratio,
        truncation_tail_bound: phi.truncation_tail_bound(),
        identity_deviation: check.is_some().then_some(fine.deviation),
    })
}

fn relative_change(fine: f64, coarse: f64) -> f64 {
    let scale = fine.abs().max(coarse.abs());
    if scale == 0.0 {
        0.0
    } else {
        (fine - coarse).abs() / scale
    }
}

type NoCheck = fn(&[f64]) -> Result<f64>;

/// `int |Phi(u)| |det A(u)^-1| du`.
pub fn norm_l_a(phi: &KernelSpec, a: &MatrixFamily, q: &QuadratureSpec) -> Result<NormReport> {
    let weight = |u: &[f64]| Ok(1.0 / a.det_at(u)?.abs());
    weighted_norm(Condition::LA, phi, a, q, weight, None::<NoCheck>)
}

/// `int |Phi(u)| ell_norm(B(u))^n du`.
pub fn norm_lstar(phi: &KernelSpec, b: &MatrixFamily, q: &QuadratureSpec) -> Result<NormReport> {
    let n = b.dim() as i32;
    let weight = |u: &[f64]| Ok(b.matrix_at(u)?.ell_norm().powi(n));
    weighted_norm(Condition::LStar, phi, b, q, weight, None::<NoCheck>)
}

/// `int |Phi(u)| ||B(u)||_2^n du`, cross-checked at sampled nodes against
/// `l1(A^T)^(-n/2)` with `A = B^-1`.
pub fn norm_l2(phi: &KernelSpec, b: &MatrixFamily, q: &QuadratureSpec) -> Result<NormReport> {
    let n = b.dim() as i32;
    let weight = |u: &[f64]| Ok(b.matrix_at(u)?.spectral_norm()?.powi(n));
    let check = |u: &[f64]| {
        let lhs = b.matrix_at(u)?.spectral_norm()?.powi(n);
        let l1 = b.inverse_at(u)?.transpose().min_eigenvalue_gram()?;
        let rhs = l1.powf(-0.5 * f64::from(n));
        Ok(relative_change(lhs, rhs))
    };
    weighted_norm(Condition::L2, phi, b, q, weight, Some(check))
}

/// The three conditions for the operator built on `A`, with `L*` and `L2`
/// evaluated on `A^-1`.
pub fn compare_conditions(phi: &KernelSpec, a: &MatrixFamily, q: &QuadratureSpec) -> Result<ConditionComparison> {
    let b = a.inverted();
    let l_a = norm_l_a(phi, a, q)?;
    let l_star = norm_lstar(phi, &b, q)?;
    let l_2 = norm_l2(phi, &b, q)?;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::NAN };
    let smallest = [(Condition::LA, l_a.value), (Condition::LStar, l_star.value), (Condition::L2, l_2.value)]
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(c, _)| c)
        .unwrap_or(Condition::LA);
    Ok(ConditionComparison {
        ratio_l2_over_lstar: ratio(l_2.value, l_star.value),
        ratio_la_over_l2: ratio(l_a.value, l_2.value),
        smallest,
        l_a,
        l_star,
        l_2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SquareMatrix;

    const LN2: f64 = std::f64::consts::LN_2;

    fn close(a: f64, b: f64, rtol: f64) -> bool {
        (a - b).abs() <= rtol * b.abs().max(1e-300)
    }

    fn unit_interval() -> KernelSpec {
        KernelSpec::indicator(vec![1.0], vec![2.0])
    }

    fn unit_square() -> KernelSpec {
        KernelSpec::indicator(vec![1.0, 1.0], vec![2.0, 2.0])
    }

    #[test]
    fn l_a_examples() {
        let q = QuadratureSpec::gauss(64);
        let r = norm_l_a(&unit_interval(), &MatrixFamily::dilation(1), &q).unwrap();
        assert!(close(r.value, LN2, 1e-12), "{r:?}");
        assert_eq!(r.condition, Condition::LA);

        let r = norm_l_a(&unit_square(), &MatrixFamily::diagonal(2), &q).unwrap();
        assert!(close(r.value, LN2 * LN2, 1e-12));

        for c in [0.5, 3.0] {
            let phi = KernelSpec::unit_gaussian(vec![0.0, 0.0], 0.3);
            let a = MatrixFamily::constant(SquareMatrix::scalar(2, c));
            let r = norm_l_a(&phi, &a, &q).unwrap();
            assert!(close(r.value, c.powi(-2), 1e-10));
        }
    }

    #[test]
    fn lstar_examples() {
        let q = QuadratureSpec::gauss(64);
        let b = MatrixFamily::dilation(1).inverted();
        let r = norm_lstar(&unit_interval(), &b, &q).unwrap();
        assert!(close(r.value, LN2, 1e-12));

        let phi = KernelSpec::unit_gaussian(vec![0.0, 0.0], 1.0);
        let r = norm_lstar(&phi, &MatrixFamily::constant(SquareMatrix::scalar(2, -1.5)), &q).unwrap();
        assert!(close(r.value, 2.25, 1e-10));

        // int max(1/u1, 1/u2)^2 = 2 int_1^2 (2 - t) / t^2 dt; kink on the diagonal
        let r = norm_lstar(&unit_square(), &MatrixFamily::diagonal(2).inverted(), &q).unwrap();
        assert!(close(r.value, 2.0 - 2.0 * LN2, 1e-3), "{r:?}");
    }

    #[test]
    fn l2_examples() {
        let q = QuadratureSpec::gauss(64);
        let r = norm_l2(&unit_interval(), &MatrixFamily::dilation(1).inverted(), &q).unwrap();
        assert!(close(r.value, LN2, 1e-12));
        assert!(r.identity_deviation.unwrap() < 1e-12);

        let r = norm_l2(&unit_square(), &MatrixFamily::diagonal(2).inverted(), &q).unwrap();
        assert!(close(r.value, 2.0 - 2.0 * LN2, 1e-3));

        let phi = KernelSpec::unit_gaussian(vec![0.5, -0.5], 0.4);
        let b = MatrixFamily::RotationScale {
            dim: 2,
            scale: 1.7,
            radial_power: 0.0,
            angle: 0.2,
            angle_rate: 2.0,
        };
        let r = norm_l2(&phi, &b, &q).unwrap();
        assert!(close(r.value, 1.7 * 1.7, 1e-10));
    }

    #[test]
    fn comparison_diagonal_and_rotation() {
        let q = QuadratureSpec::gauss(64);
        let cmp = compare_conditions(&unit_square(), &MatrixFamily::diagonal(2), &q).unwrap();
        assert!(close(cmp.ratio_l2_over_lstar, 1.0, 1e-12));
        assert_eq!(cmp.smallest, Condition::LA);

        let phi = KernelSpec::unit_gaussian(vec![0.0, 0.0], 1.0);
        let cmp = compare_conditions(&phi, &MatrixFamily::rotation_scale(2, 2.0, 0.6), &q).unwrap();
        assert!(cmp.l_2.value < cmp.l_star.value);
        let c = 0.6_f64.cos() + 0.6_f64.sin();
        assert!(close(cmp.ratio_l2_over_lstar, 1.0 / (c * c), 1e-10));
    }

    #[test]
    fn shear_family_can_invert_the_comparison() {
        // A^-1 = [[1, 1], [0, 0.1]] at every node
        let a = MatrixFamily::Shear {
            dim: 2,
            shear: -10.0,
            shear_rate: 0.0,
            squash: 10.0,
        };
        let cmp = compare_conditions(&KernelSpec::unit_gaussian(vec![0.0, 0.0], 1.0), &a, &QuadratureSpec::gauss(32))
            .unwrap();
        assert!(cmp.l_2.value > cmp.l_star.value, "{cmp:?}");
    }

    #[test]
    fn singular_nodes_are_skipped_and_reported() {
        // odd node count puts a node exactly on u = 0 where A(u) = 0
        let phi = KernelSpec::indicator(vec![-1.0], vec![1.0]);
        let q = QuadratureSpec::gauss(33);
        let err = norm_l_a(&phi, &MatrixFamily::dilation(1), &q).unwrap_err();
        assert!(matches!(err, Error::TooMuchSkippedMass { .. } | Error::QuadratureDiverged { .. }));
    }

    #[test]
    fn singular_field_everywhere() {
        let b = MatrixFamily::constant(SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap());
        let err = norm_lstar(&unit_square(), &b, &QuadratureSpec::gauss(8)).unwrap_err();
        assert!(matches!(err, Error::TooMuchSkippedMass { .. }), "{err:?}");
        let r = norm_l_a(&unit_square(), &MatrixFamily::diagonal(2), &QuadratureSpec::gauss(8)).unwrap();
        assert_eq!(r.skipped_mass, 0.0);
        assert!(close(r.kernel_mass, 1.0, 1e-14));
    }

    #[test]
    fn divergent_weight_is_reported() {
        let phi = KernelSpec::indicator(vec![-1.0], vec![1.0]);
        let err = norm_l_a(&phi, &MatrixFamily::dilation(1), &QuadratureSpec::gauss(16)).unwrap_err();
        assert!(matches!(err, Error::QuadratureDiverged { .. }), "{err:?}");
    }

    #[test]
    fn truncation_must_cover_support() {
        let q = QuadratureSpec::gauss(16).with_truncation(Region::cube(1, 1.0, 1.5).unwrap());
        assert!(norm_l_a(&unit_interval(), &MatrixFamily::dilation(1), &q).is_err());
        let q = QuadratureSpec::gauss(16).with_truncation(Region::cube(2, 0.0, 3.0).unwrap());
        assert!(matches!(
            norm_l_a(&unit_interval(), &MatrixFamily::dilation(1), &q),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn scaling_the_kernel_scales_every_norm() {
        let q = QuadratureSpec::gauss(32);
        let phi = KernelSpec::radial_bump(vec![1.5, 1.5], 0.5);
        let a = MatrixFamily::RotationScale {
            dim: 2,
            scale: 1.0,
            radial_power: 1.0,
            angle: 0.1,
            angle_rate: 0.7,
        };
        let base = compare_conditions(&phi, &a, &q).unwrap();
        let scaled = compare_conditions(&phi.scaled(-2.0), &a, &q).unwrap();
        assert_eq!(scaled.l_a.value, 2.0 * base.l_a.value);
        assert_eq!(scaled.l_star.value, 2.0 * base.l_star.value);
        assert_eq!(scaled.l_2.value, 2.0 * base.l_2.value);
    }
}
