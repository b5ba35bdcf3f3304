//! `(1, inf, 0)`-atoms: supported in a ball, bounded by the reciprocal ball
//! volume, mean zero.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::linalg::SquareMatrix;
use crate::quadrature::{pairwise_sum, Region};
use crate::report::VerificationReport;

/// Relative slack on the ellipsoid bound for roundoff.
const CONTAINMENT_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomProfile {
    /// `sign(x_1 - c_1) / |B|` on the ball.
    SignSplit,
    /// Positive on the inner half-radius ball, negative on the outer shell.
    ShellDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub center: Vec<f64>,
    pub radius: f64,
    pub profile: AtomProfile,
}

/// Volume of the Euclidean ball of radius `r` in `R^n`.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    unit_ball_volume(n) * r.powi(n as i32)
}

/// `pi^{n/2} / Gamma(n/2 + 1)` via `V_n = 2 pi / n * V_{n-2}`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

impl Atom {
    pub fn new(center: Vec<f64>, radius: f64, profile: AtomProfile) -> Self {
        Self {
            center,
            radius,
            profile,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn ball_volume(&self) -> f64 {
        ball_volume(self.dim(), self.radius)
    }

    pub fn validate(&self) -> Result<()> {
        if self.center.is_empty() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("atom centre must be a finite point".into()));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::InvalidInput("atom radius must be positive".into()));
        }
        Ok(())
    }

    /// Continuum profile, with the shell weights solved from the zero-mean
    /// constraint on exact volumes.
    pub fn continuum_value(&self, x: &[f64]) -> f64 {
        let d = distance(x, &self.center);
        if d > self.radius {
            return 0.0;
        }
        let top = 1.0 / self.ball_volume();
        match self.profile {
            AtomProfile::SignSplit => top * sign(x[0] - self.center[0]),
            AtomProfile::ShellDifference => {
                let shell = top / (2f64.powi(self.dim() as i32) - 1.0);
                if d < 0.5 * self.radius {
                    top
                } else {
                    -shell
                }
            }
        }
    }

    /// Bound on `||a(. + h) - a||_1 / |h|`: jump size times jump-surface area,
    /// summed over the profile's discontinuities.
    pub fn lipschitz_bound(&self) -> f64 {
        let n = self.dim();
        let r = self.radius;
        match self.profile {
            AtomProfile::SignSplit => {
                (n as f64 + 2.0 * unit_ball_volume(n - 1) / unit_ball_volume(n)) / r
            }
            AtomProfile::ShellDifference => 3.0 * n as f64 / (r * (2f64.powi(n as i32) - 1.0)),
        }
    }

    /// Sampling tolerance `2 * h * L` for a grid with largest spacing `h`.
    pub fn sampling_tolerance(&self, spacing: f64) -> f64 {
        2.0 * spacing * self.lipschitz_bound()
    }

    fn ball_inside(&self, region: &Region) -> bool {
        self.center
            .iter()
            .zip(region.lo.iter().zip(&region.hi))
            .all(|(c, (lo, hi))| c - self.radius >= *lo && c + self.radius <= *hi)
    }
}

fn distance(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Samples an atom at cell centres. The positive and negative levels are
/// balanced on the sampled cell counts so that the Riemann mean vanishes, and
/// the larger level equals `1 / |B(x0, r)|`.
pub fn make_atom(atom: &Atom, region: Region, resolution: Vec<usize>) -> Result<GridFunction> {
    atom.validate()?;
    region.validate()?;
    if region.dim() != atom.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            found: atom.dim(),
        });
    }
    if !atom.ball_inside(&region) {
        return Err(Error::BallOutsideBox {
            center: atom.center.clone(),
            radius: atom.radius,
        });
    }
    let template = GridFunction::zeros(region, resolution)?;
    // +1 / -1 / 0 labels first, then levels from the counts
    let labels: Vec<f64> = (0..template.len())
        .map(|i| {
            let x = template.point(i);
            let d = distance(&x, &atom.center);
            if d > atom.radius {
                return 0.0;
            }
            match atom.profile {
                AtomProfile::SignSplit => sign(x[0] - atom.center[0]),
                AtomProfile::ShellDifference => {
                    if d < 0.5 * atom.radius {
                        1.0
                    } else {
                        -1.0
                    }
                }
            }
        })
        .collect();
    let positive = labels.iter().filter(|v| **v > 0.0).count() as f64;
    let negative = labels.iter().filter(|v| **v < 0.0).count() as f64;
    if positive == 0.0 || negative == 0.0 {
        return Err(Error::InvalidInput(
            "grid too coarse to resolve the atom: one sign has no cells".into(),
        ));
    }
    let top = 1.0 / atom.ball_volume();
    let (pos_level, neg_level) = if positive >= negative {
        (top * negative / positive, top)
    } else {
        (top, top * positive / negative)
    };
    let values = labels
        .iter()
        .map(|l| {
            if *l > 0.0 {
                pos_level
            } else if *l < 0.0 {
                -neg_level
            } else {
                0.0
            }
        })
        .collect();
    template.with_values(values)
}

/// Outcome of the three atom conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomCheck {
    /// `int_{|x - x0| > r} |g| <= tol`.
    pub support: VerificationReport,
    /// `max |g| <= (1 + tol) / |B(x0, r)|`.
    pub sup: VerificationReport,
    /// `|int g| <= tol`.
    pub mean: VerificationReport,
}

impl AtomCheck {
    pub fn pass(&self) -> bool {
        self.support.pass && self.sup.pass && self.mean.pass
    }
}

pub fn check_atom(g: &GridFunction, center: &[f64], radius: f64, tol: f64) -> Result<AtomCheck> {
    if center.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: center.len(),
        });
    }
    let vol = g.cell_volume();
    let outside: Vec<f64> = (0..g.len())
        .filter_map(|i| {
            let v = g.values()[i];
            (v != 0.0 && distance(&g.point(i), center) > radius * (1.0 + 1e-12)).then_some(v.abs())
        })
        .collect();
    let leakage = pairwise_sum(&outside) * vol;
    let ball = ball_volume(g.dim(), radius);
    Ok(AtomCheck {
        support: VerificationReport::upper_bound(leakage, tol, 0.0),
        sup: VerificationReport::upper_bound(g.max_abs(), 1.0 / ball, tol).with("ball_volume", ball),
        mean: VerificationReport::upper_bound(g.integral().abs(), tol, 0.0),
    })
}

#[derive(Debug, Clone)]
pub struct TransformedAtom {
    pub grid: GridFunction,
    pub center: Vec<f64>,
    pub radius: f64,
    /// Least eigenvalue of `A A^T`.
    pub l1: f64,
}

/// `g(x) = l1^{n/2} a(x A)` with `l1` the least eigenvalue of `A A^T`.
///
/// The image is an atom for the ball centred at `x0 A^-1` of radius
/// `r / sqrt(l1)`. It is sampled on a box framed around that ball the way the
/// input box frames the original one, at the same resolution.
pub fn transform_atom(a: &GridFunction, atom: &Atom, matrix: &SquareMatrix) -> Result<TransformedAtom> {
    let n = a.dim();
    if matrix.dim() != n || atom.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: matrix.dim(),
        });
    }
    let inverse = matrix.inverse()?;
    let l1 = matrix.transpose().min_eigenvalue_gram()?;
    if l1 <= 0.0 {
        return Err(Error::SingularMatrix {
            det: matrix.det(),
            threshold: 0.0,
        });
    }
    let center = inverse.row_mul(&atom.center);
    let radius = atom.radius / l1.sqrt();
    let region = a.region();
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for axis in 0..n {
        let reach = (atom.center[axis] - region.lo[axis]).max(region.hi[axis] - atom.center[axis]);
        let half = reach / atom.radius * radius;
        lo.push(center[axis] - half);
        hi.push(center[axis] + half);
    }
    let factor = l1.powf(0.5 * n as f64);
    let grid = GridFunction::from_fn(Region::new(lo, hi)?, a.resolution().to_vec(), |x| {
        factor * a.eval_interp(&matrix.row_mul(x))
    })?;
    Ok(TransformedAtom {
        grid,
        center,
        radius,
        l1,
    })
}

impl TransformedAtom {
    /// Checks the image with tolerance `2 * h * L`, where `h` is the largest
    /// output spacing and `L` the profile bound at the transformed radius.
    pub fn check(&self, profile: AtomProfile) -> Result<AtomCheck> {
        let image = Atom::new(self.center.clone(), self.radius, profile);
        let h = self.grid.spacing().iter().cloned().fold(0.0, f64::max);
        check_atom(&self.grid, &self.center, self.radius, image.sampling_tolerance(h))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidReport {
    /// `max |x| <= r / sqrt(l1)` over the samples.
    pub containment: VerificationReport,
    pub bound: f64,
    pub max_norm: f64,
    pub violations: usize,
    pub attained_ratio: f64,
    pub tightness_threshold: f64,
    pub tight: bool,
}

impl EllipsoidReport {
    pub fn pass(&self) -> bool {
        self.containment.pass && self.violations == 0 && self.tight
    }
}

/// Samples the ellipsoid `{x : |x A| <= r}` by mapping uniform points of the
/// ball of radius `r` through `A^-1`, and checks that every image lies in the
/// ball of radius `r / sqrt(l1)`, `l1` the least eigenvalue of `A A^T`.
pub fn verify_ellipsoid_containment(
    matrix: &SquareMatrix,
    radius: f64,
    num_samples: usize,
    seed: u64,
) -> Result<EllipsoidReport> {
    if !(radius.is_finite() && radius > 0.0) || num_samples == 0 {
        return Err(Error::InvalidInput("radius must be positive and num_samples at least 1".into()));
    }
    let n = matrix.dim();
    let inverse = matrix.inverse()?;
    let l1 = matrix.transpose().min_eigenvalue_gram()?;
    let bound = radius / l1.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new(0.0_f64, 1.0).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut max_norm = 0.0_f64;
    let mut violations = 0;
    let mut direction = vec![0.0; n];
    for _ in 0..num_samples {
        let mut norm = 0.0;
        while norm == 0.0 {
            for d in direction.iter_mut() {
                *d = StandardNormal.sample(&mut rng);
            }
            norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        let rho = radius * unit.sample(&mut rng).powf(1.0 / n as f64) / norm;
        let y: Vec<f64> = direction.iter().map(|d| d * rho).collect();
        let x = inverse.row_mul(&y);
        let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if len > bound * (1.0 + CONTAINMENT_SLACK) {
            violations += 1;
        }
        max_norm = max_norm.max(len);
    }
    let tightness_threshold = 1.0 - 10.0 / (num_samples as f64).sqrt();
    let attained_ratio = max_norm / bound;
    Ok(EllipsoidReport {
        containment: VerificationReport::upper_bound(max_norm, bound, CONTAINMENT_SLACK)
            .with("l1", l1)
            .with("violations", violations as f64),
        bound,
        max_norm,
        violations,
        attained_ratio,
        tightness_threshold,
        tight: attained_ratio >= tightness_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(atom: &Atom, half_width: f64, res: usize) -> GridFunction {
        let n = atom.dim();
        let region = Region::new(
            atom.center.iter().map(|c| c - half_width).collect(),
            atom.center.iter().map(|c| c + half_width).collect(),
        )
        .unwrap();
        make_atom(atom, region, vec![res; n]).unwrap()
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!((ball_volume(2, 2.0) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn sign_split_examples() {
        let atom = Atom::new(vec![0.0], 1.0, AtomProfile::SignSplit);
        let g = sampled(&atom, 2.0, 256);
        assert_eq!(g.max_abs(), 0.5);
        assert_eq!(g.eval_interp(&[0.5]), 0.5);
        assert_eq!(g.eval_interp(&[-0.5]), -0.5);
        assert!(g.integral().abs() < 1e-15);
        assert!(check_atom(&g, &atom.center, 1.0, 1e-12).unwrap().pass());

        let atom = Atom::new(vec![0.3, -0.2], 1.0, AtomProfile::SignSplit);
        let g = sampled(&atom, 2.0, 128);
        assert!((g.max_abs() - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(check_atom(&g, &atom.center, 1.0, 1e-12).unwrap().pass());
    }

    #[test]
    fn shell_difference_has_zero_mean() {
        for n in 1..=2 {
            let atom = Atom::new(vec![0.1; n], 1.0, AtomProfile::ShellDifference);
            let g = sampled(&atom, 1.5, 96);
            assert!(g.integral().abs() < 1e-14, "n={n}");
            let c = check_atom(&g, &atom.center, 1.0, 1e-12).unwrap();
            assert!(c.pass(), "{c:?}");
        }
    }

    #[test]
    fn continuum_shell_weights_balance() {
        for n in 1..=3 {
            let atom = Atom::new(vec![0.0; n], 2.0, AtomProfile::ShellDifference);
            let inner = ball_volume(n, 1.0) * atom.continuum_value(&vec![0.0; n]);
            let mut p = vec![0.0; n];
            p[0] = 1.5;
            let outer = (ball_volume(n, 2.0) - ball_volume(n, 1.0)) * atom.continuum_value(&p);
            assert!((inner + outer).abs() < 1e-15);
        }
    }

    #[test]
    fn check_atom_failures() {
        let region = Region::cube(1, -2.0, 2.0).unwrap();
        let flat = GridFunction::from_fn(region, vec![256], |x| if x[0].abs() < 1.0 { 0.5 } else { 0.0 }).unwrap();
        let c = check_atom(&flat, &[0.0], 1.0, 1e-6).unwrap();
        assert!(c.support.pass && c.sup.pass);
        assert!(!c.mean.pass);
        assert!((c.mean.lhs - 1.0).abs() < 1e-12);

        let atom = Atom::new(vec![0.0], 1.0, AtomProfile::SignSplit);
        let doubled = sampled(&atom, 2.0, 256).scale(2.0);
        let c = check_atom(&doubled, &[0.0], 1.0, 1e-6).unwrap();
        assert!(!c.sup.pass && c.mean.pass && c.support.pass);

        let c = check_atom(&sampled(&atom, 2.0, 256), &[0.0], 0.5, 1e-6).unwrap();
        assert!(!c.support.pass);
    }

    #[test]
    fn ball_outside_box() {
        let atom = Atom::new(vec![1.5], 1.0, AtomProfile::SignSplit);
        let err = make_atom(&atom, Region::cube(1, -2.0, 2.0).unwrap(), vec![64]).unwrap_err();
        assert!(matches!(err, Error::BallOutsideBox { .. }));
        assert!(make_atom(&atom, Region::cube(1, -4.0, 4.0).unwrap(), vec![2]).is_err());
    }

    #[test]
    fn transform_identity_is_noop() {
        let atom = Atom::new(vec![0.2, 0.0], 1.0, AtomProfile::ShellDifference);
        let a = sampled(&atom, 2.0, 64);
        let t = transform_atom(&a, &atom, &SquareMatrix::identity(2)).unwrap();
        assert!(t.grid.max_abs_diff(&a).unwrap() < 1e-12);
        assert_eq!(t.radius, 1.0);
    }

    #[test]
    fn transform_by_scalar_two() {
        let atom = Atom::new(vec![0.0], 1.0, AtomProfile::SignSplit);
        let a = sampled(&atom, 2.0, 256);
        let t = transform_atom(&a, &atom, &SquareMatrix::scalar(1, 2.0)).unwrap();
        assert!((t.l1 - 4.0).abs() < 1e-15);
        assert!((t.radius - 0.5).abs() < 1e-15);
        assert!((t.grid.max_abs() - 1.0).abs() < 1e-12);
        assert!(t.check(AtomProfile::SignSplit).unwrap().pass());
        assert!((t.grid.eval_interp(&[0.25]) - 2.0 * a.eval_interp(&[0.5])).abs() < 1e-12);
    }

    #[test]
    fn transform_by_rotation_keeps_radius() {
        let atom = Atom::new(vec![0.0, 0.0], 1.0, AtomProfile::SignSplit);
        let a = sampled(&atom, 2.0, 128);
        let t = transform_atom(&a, &atom, &SquareMatrix::rotation(2, 0.7)).unwrap();
        assert!((t.l1 - 1.0).abs() < 1e-14);
        assert!((t.radius - 1.0).abs() < 1e-14);
        assert!(t.grid.max_abs() <= a.max_abs() * (1.0 + 1e-12));
        assert!(t.check(AtomProfile::SignSplit).unwrap().pass());
    }

    #[test]
    fn transform_rejects_singular() {
        let atom = Atom::new(vec![0.0, 0.0], 1.0, AtomProfile::SignSplit);
        let a = sampled(&atom, 2.0, 16);
        let singular = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(transform_atom(&a, &atom, &singular), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn ellipsoid_examples() {
        let r = verify_ellipsoid_containment(&SquareMatrix::identity(2), 1.0, 10_000, 7).unwrap();
        assert!(r.pass(), "{r:?}");
        assert_eq!(r.bound, 1.0);

        let r = verify_ellipsoid_containment(&SquareMatrix::diag(&[2.0, 3.0]), 1.0, 10_000, 7).unwrap();
        assert!((r.bound - 0.5).abs() < 1e-15);
        assert!(r.pass() && r.attained_ratio > 0.99, "{r:?}");

        let shear = SquareMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let r = verify_ellipsoid_containment(&shear, 1.0, 10_000, 7).unwrap();
        assert!((r.bound - (1.0 + 5.0_f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(r.pass());
    }
}
