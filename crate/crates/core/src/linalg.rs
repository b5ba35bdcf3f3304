//! Dense matrix calculus for small dimensions.
//!
//! Everything here works on [`SquareMatrix`], a row-major `n x n` real matrix
//! with finite entries. The operations are the ones needed to evaluate the
//! kernel conditions of a Hausdorff operator: the column-sum (`ell`) norm,
//! the spectral norm, the least eigenvalue of a Gram matrix, and the
//! determinant and inverse used to change variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::VerificationReport;

/// Relative asymmetry accepted by [`SquareMatrix::symmetric_eigenvalues`].
pub const TOL_SYM: f64 = 1e-12;
/// Jacobi stops once the largest off-diagonal entry is below `TOL_EIG * ||S||_F`.
pub const TOL_EIG: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 50;
/// A matrix is treated as singular when `|det| < TOL_DET * max|entry|^n`.
pub const TOL_DET: f64 = 1e-12;
/// Agreement required between the three routes to the least Gram eigenvalue.
pub const TOL_SPECTRAL_IDENTITY: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SquareMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for SquareMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SquareMatrix> for Vec<Vec<f64>> {
    fn from(m: SquareMatrix) -> Self {
        m.rows()
    }
}

/// Spectrum of a symmetric matrix, sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub eigenvalues: Vec<f64>,
    pub sweeps_used: usize,
    /// Largest off-diagonal magnitude when the iteration stopped.
    pub residual: f64,
}

impl EigenReport {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
    scale: f64,
}

impl Lu {
    pub fn det(&self) -> f64 {
        let mut det = self.sign;
        for i in 0..self.n {
            det *= self.lu[i * self.n + i];
        }
        det
    }

    pub fn singular_threshold(&self) -> f64 {
        TOL_DET * self.scale.powi(self.n as i32)
    }

    pub fn is_singular(&self) -> bool {
        self.scale == 0.0 || self.det().abs() < self.singular_threshold()
    }

    /// Solves `A x = b` in place.
    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = y[i];
            for k in 0..i {
                acc -= self.lu[i * n + k] * y[k];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in i + 1..n {
                acc -= self.lu[i * n + k] * y[k];
            }
            y[i] = acc / self.lu[i * n + i];
        }
        b.copy_from_slice(&y);
    }
}

impl SquareMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be at least 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, found {}",
                n * n,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("matrix rows must all have length n".into()));
        }
        Self::new(n, rows.concat())
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.entries[i * n + i] = c;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, &v) in values.iter().enumerate() {
            m.entries[i * n + i] = v;
        }
        m
    }

    /// Plane rotation by `theta` acting on the first two coordinates.
    pub fn rotation(n: usize, theta: f64) -> Self {
        let mut m = Self::identity(n);
        if n >= 2 {
            let (s, c) = theta.sin_cos();
            m.entries[0] = c;
            m.entries[1] = s;
            m.entries[n] = -s;
            m.entries[n + 1] = c;
        }
        m
    }

    /// Builds a matrix without validating finiteness; callers guarantee it.
    pub(crate) fn from_raw(n: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.n + j] = value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut t = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.entries[j * n + i] = self.entries[i * n + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, other.n, "matmul dimension mismatch");
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                for j in 0..n {
                    out.entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_raw(self.n, self.entries.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "add dimension mismatch");
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Self::from_raw(self.n, entries)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// `B^T B`; exactly symmetric in floating point.
    pub fn gram(&self) -> Self {
        let n = self.n;
        let mut g = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += self.entries[k * n + i] * self.entries[k * n + j];
                }
                g.entries[i * n + j] = acc;
                g.entries[j * n + i] = acc;
            }
        }
        g
    }

    pub fn symmetrized(&self) -> Self {
        let n = self.n;
        let mut s = self.clone();
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (self.entries[i * n + j] + self.entries[j * n + i]);
                s.entries[i * n + j] = v;
                s.entries[j * n + i] = v;
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Row vector times matrix, `x A`.
    pub fn row_mul(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.row_mul_into(x, &mut out);
        out
    }

    #[inline]
    pub fn row_mul_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &xi) in x.iter().enumerate().take(n) {
            let row = &self.entries[i * n..(i + 1) * n];
            for (o, a) in out.iter_mut().zip(row) {
                *o += xi * a;
            }
        }
    }

    /// Matrix times column vector, `A x`.
    pub fn col_mul(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Operator norm induced by the vector 1-norm: the largest column sum of
    /// absolute values.
    pub fn ell_norm(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.entries[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.entries[i * n + j] - self.entries[j * n + i]).abs());
            }
        }
        worst
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
    pub fn symmetric_eigenvalues(&self) -> Result<EigenReport> {
        let tolerance = TOL_SYM * self.max_abs();
        let asymmetry = self.asymmetry();
        if asymmetry > tolerance {
            return Err(Error::NotSymmetric { asymmetry, tolerance });
        }
        jacobi(self.symmetrized())
    }

    /// `||B||_2`, the square root of the largest eigenvalue of `B^T B`.
    pub fn spectral_norm(&self) -> Result<f64> {
        let eig = self.gram().symmetric_eigenvalues()?;
        Ok(eig.max().max(0.0).sqrt())
    }

    /// Least eigenvalue of `B^T B`, clamped at zero.
    pub fn min_eigenvalue_gram(&self) -> Result<f64> {
        let eig = self.gram().symmetric_eigenvalues()?;
        Ok(eig.min().max(0.0))
    }

    pub fn lu(&self) -> Lu {
        let n = self.n;
        let mut lu = self.entries.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&a, &b| lu[a * n + col].abs().total_cmp(&lu[b * n + col].abs()))
                .unwrap_or(col);
            if pivot != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot * n + j);
                }
                perm.swap(col, pivot);
                sign = -sign;
            }
            let diag = lu[col * n + col];
            if diag == 0.0 {
                continue;
            }
            for row in col + 1..n {
                let factor = lu[row * n + col] / diag;
                lu[row * n + col] = factor;
                for j in col + 1..n {
                    lu[row * n + j] -= factor * lu[col * n + j];
                }
            }
        }
        Lu {
            n,
            lu,
            perm,
            sign,
            scale: self.max_abs(),
        }
    }

    pub fn det(&self) -> f64 {
        self.lu().det()
    }

    pub fn is_singular(&self) -> bool {
        self.lu().is_singular()
    }

    pub fn inverse(&self) -> Result<Self> {
        let lu = self.lu();
        if lu.is_singular() {
            return Err(Error::SingularMatrix {
                det: lu.det(),
                threshold: lu.singular_threshold(),
            });
        }
        let n = self.n;
        let mut inv = Self::zeros(n);
        let mut column = vec![0.0; n];
        for j in 0..n {
            column.iter_mut().enumerate().for_each(|(i, v)| *v = f64::from(u8::from(i == j)));
            lu.solve_in_place(&mut column);
            for i in 0..n {
                inv.entries[i * n + j] = column[i];
            }
        }
        Ok(inv)
    }

    /// Compares three routes to the least eigenvalue `l1` of `B^T B`:
    /// the Jacobi spectrum of the Gram matrix, `1 / ||B^-1||_2^2`, and the
    /// reciprocal of the largest eigenvalue of `(B^T B)^-1`.
    pub fn verify_spectral_identity(&self) -> Result<VerificationReport> {
        let inverse = self.inverse()?;
        let via_gram = self.min_eigenvalue_gram()?;
        let via_inverse_norm = 1.0 / inverse.spectral_norm()?.powi(2);
        let gram_inverse = self.gram().inverse()?.symmetrized();
        let via_gram_inverse = 1.0 / gram_inverse.symmetric_eigenvalues()?.max();

        let values = [via_gram, via_inverse_norm, via_gram_inverse];
        let mut deviation = 0.0_f64;
        for i in 0..3 {
            for j in i + 1..3 {
                let scale = values[i].abs().max(values[j].abs());
                if scale > 0.0 {
                    deviation = deviation.max((values[i] - values[j]).abs() / scale);
                }
            }
        }
        let report = VerificationReport::upper_bound(deviation, TOL_SPECTRAL_IDENTITY, 0.0)
            .with("min_eigenvalue_gram", via_gram)
            .with("inverse_spectral_norm_reciprocal_sq", via_inverse_norm)
            .with("gram_inverse_max_eigenvalue_reciprocal", via_gram_inverse)
            .with("spectral_exceeds_ell", f64::from(u8::from(self.spectral_norm()? > self.ell_norm())));
        Ok(report)
    }
}

fn jacobi(mut s: SquareMatrix) -> Result<EigenReport> {
    let n = s.n;
    let tol = TOL_EIG * s.frobenius_norm();
    let off_diagonal = |m: &SquareMatrix| {
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max(m.entries[i * n + j].abs());
            }
        }
        worst
    };

    let mut sweeps = 0;
    let mut residual = off_diagonal(&s);
    while residual > tol && sweeps < MAX_SWEEPS {
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut s, p, q);
            }
        }
        sweeps += 1;
        residual = off_diagonal(&s);
    }
    if residual > tol {
        return Err(Error::NoConvergence { sweeps, residual });
    }

    let mut eigenvalues: Vec<f64> = (0..n).map(|i| s.entries[i * n + i]).collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(EigenReport {
        eigenvalues,
        sweeps_used: sweeps,
        residual,
    })
}

/// Annihilates `s[p][q]` with one plane rotation.
fn rotate(s: &mut SquareMatrix, p: usize, q: usize) {
    let n = s.n;
    let apq = s.entries[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = s.entries[p * n + p];
    let aqq = s.entries[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let sn = t * c;

    s.entries[p * n + p] = app - t * apq;
    s.entries[q * n + q] = aqq + t * apq;
    s.entries[p * n + q] = 0.0;
    s.entries[q * n + p] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = s.entries[r * n + p];
        let arq = s.entries[r * n + q];
        let new_rp = c * arp - sn * arq;
        let new_rq = sn * arp + c * arq;
        s.entries[r * n + p] = new_rp;
        s.entries[p * n + r] = new_rp;
        s.entries[r * n + q] = new_rq;
        s.entries[q * n + r] = new_rq;
    }
}
