//! Matrix fields `u -> A(u)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SquareMatrix, TOL_DET};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MatrixFamily {
    /// `scale * u` in one dimension, `scale * |u| * I` in higher dimensions.
    ScalarDilation {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `diag(scale * u_1, ..., scale * u_n)`.
    Diagonal {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `rho(u) R(theta(u))` with `rho = scale * |u|^radial_power` and
    /// `theta = angle + angle_rate * u_1`; the rotation acts on the first two
    /// axes and the remaining axes are scaled by `rho`.
    RotationScale {
        dim: usize,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        radial_power: f64,
        #[serde(default)]
        angle: f64,
        #[serde(default)]
        angle_rate: f64,
    },
    /// Identity with `a_12 = shear + shear_rate * u_1` and `a_22 = squash`.
    Shear {
        dim: usize,
        #[serde(default)]
        shear: f64,
        #[serde(default)]
        shear_rate: f64,
        #[serde(default = "one")]
        squash: f64,
    },
    /// The same matrix for every `u`.
    Constant { matrix: SquareMatrix },
    /// Piecewise constant on a uniform partition of a box; row-major cells.
    /// Outside the box the nearest cell is used.
    Tabulated {
        lo: Vec<f64>,
        hi: Vec<f64>,
        cells: Vec<usize>,
        matrices: Vec<SquareMatrix>,
    },
    /// Pointwise inverse `A(u)^-1` of another family.
    Inverse { of: Box<MatrixFamily> },
}

impl MatrixFamily {
    pub fn constant(matrix: SquareMatrix) -> Self {
        MatrixFamily::Constant { matrix }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(SquareMatrix::identity(n))
    }

    pub fn dilation(dim: usize) -> Self {
        MatrixFamily::ScalarDilation { dim, scale: 1.0 }
    }

    pub fn diagonal(dim: usize) -> Self {
        MatrixFamily::Diagonal { dim, scale: 1.0 }
    }

    pub fn rotation_scale(dim: usize, scale: f64, angle: f64) -> Self {
        MatrixFamily::RotationScale {
            dim,
            scale,
            radial_power: 0.0,
            angle,
            angle_rate: 0.0,
        }
    }

    /// `B(u) = A(u)^-1`; inverting twice returns the original family.
    pub fn inverted(&self) -> Self {
        match self {
            MatrixFamily::Inverse { of } => (**of).clone(),
            other => MatrixFamily::Inverse {
                of: Box::new(other.clone()),
            },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MatrixFamily::ScalarDilation { dim, .. }
            | MatrixFamily::Diagonal { dim, .. }
            | MatrixFamily::RotationScale { dim, .. }
            | MatrixFamily::Shear { dim, .. } => *dim,
            MatrixFamily::Constant { matrix } => matrix.dim(),
            MatrixFamily::Tabulated { matrices, .. } => matrices.first().map_or(0, SquareMatrix::dim),
            MatrixFamily::Inverse { of } => of.dim(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidInput("matrix family dimension must be at least 1".into()));
        }
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("{name} must be finite")))
            }
        };
        match self {
            MatrixFamily::ScalarDilation { scale, .. } | MatrixFamily::Diagonal { scale, .. } => {
                finite("scale", *scale)
            }
            MatrixFamily::RotationScale {
                scale,
                radial_power,
                angle,
                angle_rate,
                ..
            } => {
                if n < 2 {
                    return Err(Error::InvalidInput("rotation-scale needs dim >= 2".into()));
                }
                finite("scale", *scale)?;
                finite("radial_power", *radial_power)?;
                finite("angle", *angle)?;
                finite("angle_rate", *angle_rate)
            }
            MatrixFamily::Shear {
                shear,
                shear_rate,
                squash,
                ..
            } => {
                if n < 2 {
                    return Err(Error::InvalidInput("shear needs dim >= 2".into()));
                }
                finite("shear", *shear)?;
                finite("shear_rate", *shear_rate)?;
                finite("squash", *squash)
            }
            MatrixFamily::Constant { .. } => Ok(()),
            MatrixFamily::Tabulated {
                lo,
                hi,
                cells,
                matrices,
            } => {
                if lo.len() != n || hi.len() != n || cells.len() != n {
                    return Err(Error::InvalidInput(
                        "tabulated family: lo, hi and cells must have one entry per dimension".into(),
                    ));
                }
                if cells.iter().any(|c| *c == 0) || lo.iter().zip(hi).any(|(l, h)| h <= l) {
                    return Err(Error::InvalidInput("tabulated family: degenerate table".into()));
                }
                let expected: usize = cells.iter().product();
                if matrices.len() != expected || matrices.iter().any(|m| m.dim() != n) {
                    return Err(Error::InvalidInput(format!(
                        "tabulated family: expected {expected} matrices of dimension {n}"
                    )));
                }
                Ok(())
            }
            MatrixFamily::Inverse { of } => of.validate(),
        }
    }

    pub fn analytic_inverse_available(&self) -> bool {
        !matches!(self, MatrixFamily::Constant { .. } | MatrixFamily::Tabulated { .. })
    }

    pub fn analytic_det_available(&self) -> bool {
        match self {
            MatrixFamily::Constant { .. } | MatrixFamily::Tabulated { .. } => false,
            MatrixFamily::Inverse { of } => of.analytic_det_available(),
            _ => true,
        }
    }

    fn check_point(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// `A(u)`.
    pub fn matrix_at(&self, u: &[f64]) -> Result<SquareMatrix> {
        self.check_point(u)?;
        let n = self.dim();
        let m = match self {
            MatrixFamily::ScalarDilation { scale, .. } => SquareMatrix::scalar(n, scale * radial(u)),
            MatrixFamily::Diagonal { scale, .. } => {
                SquareMatrix::diag(&u.iter().map(|x| scale * x).collect::<Vec<_>>())
            }
            MatrixFamily::RotationScale { .. } => {
                let (rho, theta) = self.rotation_parameters(u);
                SquareMatrix::rotation(n, theta).scale(rho)
            }
            MatrixFamily::Shear { squash, .. } => {
                let mut m = SquareMatrix::identity(n);
                m.set(0, 1, self.shear_at(u));
                m.set(1, 1, *squash);
                m
            }
            MatrixFamily::Constant { matrix } => matrix.clone(),
            MatrixFamily::Tabulated { .. } => self.table_lookup(u).clone(),
            MatrixFamily::Inverse { of } => of.inverse_at(u)?,
        };
        if m.entries().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("matrix family produced non-finite entries at {u:?}")));
        }
        Ok(m)
    }

    /// Closed-form `A(u)^-1` when the family provides one and `A(u)` is invertible.
    pub fn analytic_inverse_at(&self, u: &[f64]) -> Option<SquareMatrix> {
        let n = self.dim();
        match self {
            MatrixFamily::ScalarDilation { scale, .. } => {
                let rho = scale * radial(u);
                (rho != 0.0).then(|| SquareMatrix::scalar(n, 1.0 / rho))
            }
            MatrixFamily::Diagonal { scale, .. } => {
                let d: Vec<f64> = u.iter().map(|x| scale * x).collect();
                d.iter()
                    .all(|v| *v != 0.0)
                    .then(|| SquareMatrix::diag(&d.iter().map(|v| 1.0 / v).collect::<Vec<_>>()))
            }
            MatrixFamily::RotationScale { .. } => {
                let (rho, theta) = self.rotation_parameters(u);
                (rho != 0.0).then(|| SquareMatrix::rotation(n, -theta).scale(1.0 / rho))
            }
            MatrixFamily::Shear { squash, .. } => {
                if *squash == 0.0 {
                    return None;
                }
                let mut m = SquareMatrix::identity(n);
                m.set(0, 1, -self.shear_at(u) / squash);
                m.set(1, 1, 1.0 / squash);
                Some(m)
            }
            MatrixFamily::Constant { .. } | MatrixFamily::Tabulated { .. } => None,
            MatrixFamily::Inverse { of } => of.matrix_at(u).ok(),
        }
    }

    pub fn analytic_det_at(&self, u: &[f64]) -> Option<f64> {
        let n = self.dim() as i32;
        match self {
            MatrixFamily::ScalarDilation { scale, .. } => Some((scale * radial(u)).powi(n)),
            MatrixFamily::Diagonal { scale, .. } => Some(u.iter().map(|x| scale * x).product()),
            MatrixFamily::RotationScale { .. } => Some(self.rotation_parameters(u).0.powi(n)),
            MatrixFamily::Shear { squash, .. } => Some(*squash),
            MatrixFamily::Constant { .. } | MatrixFamily::Tabulated { .. } => None,
            MatrixFamily::Inverse { of } => of.analytic_det_at(u).map(|d| 1.0 / d),
        }
    }

    pub fn inverse_at(&self, u: &[f64]) -> Result<SquareMatrix> {
        self.check_point(u)?;
        match self.analytic_inverse_at(u) {
            Some(inv) => Ok(inv),
            None => self.matrix_at(u)?.inverse(),
        }
    }

    pub fn det_at(&self, u: &[f64]) -> Result<f64> {
        self.check_point(u)?;
        match self.analytic_det_at(u) {
            Some(d) => Ok(d),
            None => Ok(self.matrix_at(u)?.det()),
        }
    }

    /// Whether `A(u)` falls below the relative singularity threshold. For an
    /// inverse family this tests the underlying matrix.
    pub fn singular_at(&self, u: &[f64]) -> bool {
        if let MatrixFamily::Inverse { of } = self {
            return of.singular_at(u);
        }
        let Ok(m) = self.matrix_at(u) else {
            return true;
        };
        let scale = m.max_abs();
        if scale == 0.0 {
            return true;
        }
        let det = match self.analytic_det_at(u) {
            Some(d) => d,
            None => m.det(),
        };
        det.abs() < TOL_DET * scale.powi(m.dim() as i32)
    }

    fn rotation_parameters(&self, u: &[f64]) -> (f64, f64) {
        match self {
            MatrixFamily::RotationScale {
                scale,
                radial_power,
                angle,
                angle_rate,
                ..
            } => {
                let r = u.iter().map(|x| x * x).sum::<f64>().sqrt();
                let rho = if *radial_power == 0.0 { *scale } else { scale * r.powf(*radial_power) };
                (rho, angle + angle_rate * u[0])
            }
            _ => unreachable!("rotation parameters requested for a non-rotation family"),
        }
    }

    fn shear_at(&self, u: &[f64]) -> f64 {
        match self {
            MatrixFamily::Shear { shear, shear_rate, .. } => shear + shear_rate * u[0],
            _ => unreachable!("shear requested for a non-shear family"),
        }
    }

    fn table_lookup(&self, u: &[f64]) -> &SquareMatrix {
        match self {
            MatrixFamily::Tabulated {
                lo,
                hi,
                cells,
                matrices,
            } => {
                let mut index = 0;
                for axis in 0..cells.len() {
                    let t = (u[axis] - lo[axis]) / (hi[axis] - lo[axis]) * cells[axis] as f64;
                    let i = (t.floor().max(0.0) as usize).min(cells[axis] - 1);
                    index = index * cells[axis] + i;
                }
                &matrices[index]
            }
            _ => unreachable!("table lookup on a non-tabulated family"),
        }
    }
}

/// `u` itself in one dimension, `|u|` otherwise.
fn radial(u: &[f64]) -> f64 {
    if u.len() == 1 {
        u[0]
    } else {
        u.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}
