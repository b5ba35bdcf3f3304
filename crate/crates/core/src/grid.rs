//! Functions sampled at the cell centres of a uniform box grid.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::Atom;
use crate::quadrature::{pairwise_sum, Region};

/// Highest grid dimension supported by the interpolation kernels.
pub const MAX_GRID_DIM: usize = 6;

fn one() -> f64 {
    1.0
}

/// Built-in analytic functions that can be sampled onto a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// `amplitude * exp(-|x - center|^2 / width^2)`.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `value` on the half-open box `[lo, hi)`.
    Indicator {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "one")]
        value: f64,
    },
    /// A sampled `(1, inf, 0)`-atom.
    Atom(Atom),
    /// `amplitude * prod_i (x_i - c_i)^{k_i} * exp(1 - 1/(1 - |x - c|^2 / radius^2))`.
    PolyBump {
        center: Vec<f64>,
        radius: f64,
        exponents: Vec<u32>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude * (1 - 2|y|^2 / n) exp(-|y|^2)` with `y = (x - center) / width`;
    /// radial with zero mean in every dimension.
    LaplacianGaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

impl FunctionSpec {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let dist2 = |c: &[f64]| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        match self {
            FunctionSpec::Zero => 0.0,
            FunctionSpec::Constant { value } => *value,
            FunctionSpec::Gaussian {
                center,
                width,
                amplitude,
            } => amplitude * (-dist2(center) / (width * width)).exp(),
            FunctionSpec::Indicator { lo, hi, value } => {
                let inside = x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= *l && *v < *h);
                if inside {
                    *value
                } else {
                    0.0
                }
            }
            FunctionSpec::Atom(atom) => atom.continuum_value(x),
            FunctionSpec::PolyBump {
                center,
                radius,
                exponents,
                amplitude,
            } => {
                let rho2 = dist2(center) / (radius * radius);
                if rho2 >= 1.0 {
                    return 0.0;
                }
                let poly: f64 = x
                    .iter()
                    .zip(center)
                    .zip(exponents)
                    .map(|((v, c), k)| (v - c).powi(*k as i32))
                    .product();
                amplitude * poly * (1.0 - 1.0 / (1.0 - rho2)).exp()
            }
            FunctionSpec::LaplacianGaussian {
                center,
                width,
                amplitude,
            } => {
                let y2 = dist2(center) / (width * width);
                amplitude * (1.0 - 2.0 * y2 / x.len() as f64) * (-y2).exp()
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            FunctionSpec::Zero | FunctionSpec::Constant { .. } => None,
            FunctionSpec::Gaussian { center, .. }
            | FunctionSpec::PolyBump { center, .. }
            | FunctionSpec::LaplacianGaussian { center, .. } => Some(center.len()),
            FunctionSpec::Indicator { lo, .. } => Some(lo.len()),
            FunctionSpec::Atom(atom) => Some(atom.dim()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    region: Region,
    resolution: Vec<usize>,
    spacing: Vec<f64>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(region: Region, resolution: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        region.validate()?;
        let n = region.dim();
        if n > MAX_GRID_DIM {
            return Err(Error::InvalidInput(format!(
                "grids support at most {MAX_GRID_DIM} dimensions, got {n}"
            )));
        }
        if resolution.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: resolution.len(),
            });
        }
        if resolution.iter().any(|r| *r == 0) {
            return Err(Error::InvalidInput("grid resolution must be positive on every axis".into()));
        }
        let expected: usize = resolution.iter().product();
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "grid expects {expected} values, found {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid values must be finite".into()));
        }
        let spacing = region
            .lo
            .iter()
            .zip(&region.hi)
            .zip(&resolution)
            .map(|((lo, hi), r)| (hi - lo) / *r as f64)
            .collect();
        Ok(Self {
            region,
            resolution,
            spacing,
            values,
        })
    }

    pub fn zeros(region: Region, resolution: Vec<usize>) -> Result<Self> {
        let len = resolution.iter().product();
        Self::new(region, resolution, vec![0.0; len])
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn<F>(region: Region, resolution: Vec<usize>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let template = Self::zeros(region, resolution)?;
        let values = (0..template.len())
            .into_par_iter()
            .map(|i| f(&template.point(i)))
            .collect();
        template.with_values(values)
    }

    pub fn sample(spec: &FunctionSpec, region: Region, resolution: Vec<usize>) -> Result<Self> {
        if let Some(d) = spec.dim() {
            if d != region.dim() {
                return Err(Error::DimensionMismatch {
                    expected: region.dim(),
                    found: d,
                });
            }
        }
        match spec {
            FunctionSpec::Atom(atom) => crate::hardy::make_atom(atom, region, resolution),
            other => Self::from_fn(region, resolution, |x| other.eval(x)),
        }
    }

    /// Same geometry, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.region.clone(), self.resolution.clone(), values)
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.region == other.region && self.resolution == other.resolution
    }

    /// Multi-index of the flat (row-major) index `i`.
    pub fn multi_index(&self, mut i: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            idx[axis] = i % self.resolution[axis];
            i /= self.resolution[axis];
        }
        idx
    }

    /// Cell centre of the flat index `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.multi_index(i)
            .iter()
            .enumerate()
            .map(|(axis, k)| self.region.lo[axis] + (*k as f64 + 0.5) * self.spacing[axis])
            .collect()
    }

    /// Multilinear interpolation between cell centres; constant extension
    /// between the outermost centres and the box faces; zero outside the box.
    pub fn eval_interp(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut base = [0usize; MAX_GRID_DIM];
        let mut frac = [0.0f64; MAX_GRID_DIM];
        for axis in 0..n {
            let lo = self.region.lo[axis];
            let hi = self.region.hi[axis];
            let v = x[axis];
            if !(v >= lo && v <= hi) {
                return 0.0;
            }
            let res = self.resolution[axis];
            if res == 1 {
                continue;
            }
            let t = ((v - lo) / self.spacing[axis] - 0.5).clamp(0.0, (res - 1) as f64);
            let i = (t.floor() as usize).min(res - 2);
            base[axis] = i;
            frac[axis] = t - i as f64;
        }

        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut weight = 1.0;
            let mut flat = 0;
            for axis in 0..n {
                let res = self.resolution[axis];
                let upper = (corner >> axis) & 1 == 1;
                let (i, w) = if res == 1 {
                    if upper {
                        (0, 0.0)
                    } else {
                        (0, 1.0)
                    }
                } else if upper {
                    (base[axis] + 1, frac[axis])
                } else {
                    (base[axis], 1.0 - frac[axis])
                };
                weight *= w;
                flat = flat * res + i;
            }
            if weight != 0.0 {
                acc += weight * self.values[flat];
            }
        }
        acc
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.region.lo.iter().zip(&self.region.hi))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Midpoint Riemann sum of `|f|`.
    pub fn l1_norm(&self) -> f64 {
        pairwise_sum(&self.values.iter().map(|v| v.abs()).collect::<Vec<_>>()) * self.cell_volume()
    }

    pub fn l2_norm_squared(&self) -> f64 {
        pairwise_sum(&self.values.iter().map(|v| v * v).collect::<Vec<_>>()) * self.cell_volume()
    }

    /// Midpoint Riemann sum of `f`.
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.cell_volume()
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|v| f(*v)).collect(),
            ..self.clone()
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// `alpha * self + beta * other` on a shared grid.
    pub fn linear_combination(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if !self.same_geometry(other) {
            return Err(Error::InvalidInput("grid geometries differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        self.with_values(values)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if !self.same_geometry(other) {
            return Err(Error::InvalidInput("grid geometries differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Resamples onto the same box with `factor` times the resolution.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let resolution = self.resolution.iter().map(|r| r * factor).collect();
        Self::from_fn(self.region.clone(), resolution, |x| self.eval_interp(x))
    }

    /// Embeds the grid, zero padded, in a box `factor` times larger around
    /// the same centre with identical spacing.
    pub fn zero_padded(&self, factor: usize) -> Result<Self> {
        if factor < 1 {
            return Err(Error::InvalidInput("padding factor must be at least 1".into()));
        }
        let n = self.dim();
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        let mut resolution = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n);
        for axis in 0..n {
            let res = self.resolution[axis];
            let extra = res * (factor - 1);
            let before = extra / 2;
            lo.push(self.region.lo[axis] - before as f64 * self.spacing[axis]);
            hi.push(self.region.hi[axis] + (extra - before) as f64 * self.spacing[axis]);
            resolution.push(res * factor);
            offset.push(before);
        }
        let mut out = Self::zeros(Region::new(lo, hi)?, resolution)?;
        for i in 0..self.len() {
            let idx = self.multi_index(i);
            let mut flat = 0;
            for axis in 0..n {
                flat = flat * out.resolution[axis] + idx[axis] + offset[axis];
            }
            out.values[flat] = self.values[i];
        }
        Ok(out)
    }

    /// Text serialisation: `dim`, `lo`, `hi` and `resolution` header lines,
    /// a `values` marker, then one value per line in row-major order.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::with_capacity(self.len() * 24 + 128);
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        let _ = writeln!(s, "dim,{}", self.dim());
        let _ = writeln!(s, "lo,{}", join(&self.region.lo));
        let _ = writeln!(s, "hi,{}", join(&self.region.hi));
        let res: Vec<String> = self.resolution.iter().map(usize::to_string).collect();
        let _ = writeln!(s, "resolution,{}", res.join(","));
        s.push_str("values\n");
        for v in &self.values {
            let _ = writeln!(s, "{v:e}");
        }
        s
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut header = |key: &str| -> Result<Vec<String>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing `{key}` header line")))?;
            let mut fields = line.split(',').map(|f| f.trim().to_string());
            match fields.next() {
                Some(k) if k == key => Ok(fields.collect()),
                _ => Err(Error::Parse(format!("expected `{key}` header, found `{line}`"))),
            }
        };
        let parse_f64 = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));

        let dim_field = header("dim")?;
        let dim = parse_usize(dim_field.first().map(String::as_str).unwrap_or(""))?;
        let lo = header("lo")?.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
        let hi = header("hi")?.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
        let resolution = header("resolution")?
            .iter()
            .map(|s| parse_usize(s))
            .collect::<Result<Vec<_>>>()?;
        header("values")?;
        if lo.len() != dim || hi.len() != dim || resolution.len() != dim {
            return Err(Error::Parse(format!("header lengths disagree with dim = {dim}")));
        }
        let values = lines.map(parse_f64).collect::<Result<Vec<_>>>()?;
        Self::new(Region::new(lo, hi)?, resolution, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}
