//! Tensor-product quadrature on axis-aligned boxes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lo_0, hi_0] x ... x [lo_{n-1}, hi_{n-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let region = Self { lo, hi };
        region.validate()?;
        Ok(region)
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::InvalidInput("region bounds must be non-empty and of equal length".into()));
        }
        for (axis, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || hi <= lo {
                return Err(Error::InvalidInput(format!(
                    "region axis {axis} is degenerate: [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(lo, hi)| hi - lo).product()
    }

    /// Half-open membership `lo <= x < hi` on every axis.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| *v >= *lo && *v < *hi)
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a <= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a >= b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    GaussLegendre,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rule: Rule,
    pub nodes_per_axis: usize,
    /// Node-count multiplier used for the convergence check.
    #[serde(default = "default_refinement")]
    pub refinement_factor: usize,
    /// Integration box; defaults to the kernel's declared support.
    #[serde(default)]
    pub truncation: Option<Region>,
    /// Largest accepted relative change under refinement.
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

fn default_refinement() -> usize {
    2
}

fn default_rtol() -> f64 {
    1e-3
}

impl QuadratureSpec {
    pub fn gauss(nodes_per_axis: usize) -> Self {
        Self {
            rule: Rule::GaussLegendre,
            nodes_per_axis,
            refinement_factor: 2,
            truncation: None,
            rtol: default_rtol(),
        }
    }

    /// Gauss-Legendre with 64 nodes per axis up to two dimensions, 32 beyond.
    pub fn default_for(n: usize) -> Self {
        Self::gauss(if n <= 2 { 64 } else { 32 })
    }

    pub fn with_truncation(mut self, region: Region) -> Self {
        self.truncation = Some(region);
        self
    }

    pub fn refined(&self) -> Self {
        Self {
            nodes_per_axis: self.nodes_per_axis * self.refinement_factor,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_axis < 2 {
            return Err(Error::InvalidInput("quadrature needs at least 2 nodes per axis".into()));
        }
        if self.refinement_factor < 2 {
            return Err(Error::InvalidInput("refinement factor must be at least 2".into()));
        }
        if !(self.rtol.is_finite() && self.rtol > 0.0) {
            return Err(Error::InvalidInput("quadrature rtol must be positive".into()));
        }
        if let Some(t) = &self.truncation {
            t.validate()?;
        }
        Ok(())
    }

    /// One-dimensional nodes and weights on `[-1, 1]`.
    pub fn reference_rule(&self) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            Rule::GaussLegendre => gauss_legendre(self.nodes_per_axis),
            Rule::Midpoint => midpoint(self.nodes_per_axis),
        }
    }

    pub fn nodes(&self, region: &Region) -> TensorNodes {
        TensorNodes::new(region, &self.reference_rule())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_m`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_m(x), P_m'(x))` by the three-term recurrence.
fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn midpoint(m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 / m as f64;
    let nodes = (0..m).map(|i| -1.0 + (i as f64 + 0.5) * h).collect();
    (nodes, vec![h; m])
}

/// Tensor grid of quadrature nodes over a box, enumerated in row-major order.
#[derive(Debug, Clone)]
pub struct TensorNodes {
    axes: Vec<(Vec<f64>, Vec<f64>)>,
    len: usize,
}

impl TensorNodes {
    pub fn new(region: &Region, reference: &(Vec<f64>, Vec<f64>)) -> Self {
        let axes: Vec<_> = region
            .lo
            .iter()
            .zip(&region.hi)
            .map(|(&lo, &hi)| {
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                let x: Vec<f64> = reference.0.iter().map(|t| mid + half * t).collect();
                let w = reference.1.iter().map(|w| half * w).collect();
                (x, w)
            })
            .collect();
        let len = axes.iter().map(|(x, _)| x.len()).product();
        Self { axes, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Node `k` written into `point`; returns its weight.
    pub fn node(&self, mut k: usize, point: &mut [f64]) -> f64 {
        let mut weight = 1.0;
        for (axis, (x, w)) in self.axes.iter().enumerate().rev() {
            let i = k % x.len();
            k /= x.len();
            point[axis] = x[i];
            weight *= w[i];
        }
        weight
    }
}

/// Pairwise (cascade) summation in a fixed order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 16;
    if values.len() <= BLOCK {
        return values.iter().fold(0.0, |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
