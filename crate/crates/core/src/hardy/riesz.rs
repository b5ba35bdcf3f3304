//! Riesz transforms as Fourier multipliers on the periodised grid.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::quadrature::pairwise_sum;

/// Largest accepted imaginary residue relative to the real output.
pub const MAX_IMAGINARY_RESIDUE: f64 = 1e-10;

/// Frequency lattice of a grid: `xi_p = 2 pi k / L_p` with `k` the signed
/// index. The Nyquist index has no sign, so its component is taken as 0;
/// this keeps every multiplier conjugate symmetric and the output real.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    resolution: Vec<usize>,
    frequencies: Vec<Vec<f64>>,
}

impl SpectralGrid {
    pub fn for_grid(f: &GridFunction) -> Result<Self> {
        let region = f.region();
        let mut frequencies = Vec::with_capacity(f.dim());
        for (axis, &res) in f.resolution().iter().enumerate() {
            if !res.is_power_of_two() {
                return Err(Error::NonPowerOfTwo { axis, resolution: res });
            }
            let length = region.hi[axis] - region.lo[axis];
            frequencies.push(
                (0..res)
                    .map(|k| {
                        if 2 * k == res {
                            0.0
                        } else if 2 * k < res {
                            2.0 * PI * k as f64 / length
                        } else {
                            -2.0 * PI * (res - k) as f64 / length
                        }
                    })
                    .collect(),
            );
        }
        Ok(Self {
            resolution: f.resolution().to_vec(),
            frequencies,
        })
    }

    pub fn dim(&self) -> usize {
        self.resolution.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frequency vector of the flat (row-major) mode index.
    pub fn xi(&self, mut flat: usize) -> Vec<f64> {
        let mut xi = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let res = self.resolution[axis];
            xi[axis] = self.frequencies[axis][flat % res];
            flat /= res;
        }
        xi
    }

    /// `m_p(xi) = -i xi_p / |xi|` for `p` in `1..=n`, and 0 at `xi = 0`.
    pub fn multiplier(&self, p: usize, flat: usize) -> Complex<f64> {
        let xi = self.xi(flat);
        let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            Complex::new(0.0, 0.0)
        } else {
            Complex::new(0.0, -xi[p - 1] / norm)
        }
    }

    pub fn multipliers(&self, p: usize) -> Vec<Complex<f64>> {
        (0..self.len()).map(|k| self.multiplier(p, k)).collect()
    }
}

/// Forward (or inverse) unnormalised DFT along every axis in turn.
fn transform_nd(data: &mut [Complex<f64>], resolution: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    let total = data.len();
    for (axis, &res) in resolution.iter().enumerate() {
        if res == 1 {
            continue;
        }
        let plan: Arc<dyn Fft<f64>> = if inverse {
            planner.plan_fft_inverse(res)
        } else {
            planner.plan_fft_forward(res)
        };
        let stride: usize = resolution[axis + 1..].iter().product();
        let lines = total / res;
        let line_start = |line: usize| (line / stride) * stride * res + line % stride;
        let mut buffers: Vec<Vec<Complex<f64>>> = (0..lines)
            .map(|line| {
                let start = line_start(line);
                (0..res).map(|j| data[start + j * stride]).collect()
            })
            .collect();
        buffers.par_iter_mut().for_each(|buf| plan.process(buf));
        for (line, buf) in buffers.iter().enumerate() {
            let start = line_start(line);
            for (j, v) in buf.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
    }
}

/// Spectrum of a grid function, shared by all Riesz transforms of it.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: SpectralGrid,
    coefficients: Vec<Complex<f64>>,
}

#[derive(Debug, Clone)]
pub struct RieszOutput {
    pub grid: GridFunction,
    /// `||Im||_2 / ||Re||_2` before the imaginary part was discarded.
    pub imaginary_residue: f64,
}

impl Spectrum {
    pub fn new(f: &GridFunction) -> Result<Self> {
        let grid = SpectralGrid::for_grid(f)?;
        let mut coefficients: Vec<Complex<f64>> = f.values().iter().map(|v| Complex::new(*v, 0.0)).collect();
        transform_nd(&mut coefficients, f.resolution(), false);
        Ok(Self { grid, coefficients })
    }

    pub fn spectral_grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// `R_p f` for `p` in `1..=n`; `R_0 f` is `f` itself and is not built here.
    pub fn riesz(&self, f: &GridFunction, p: usize) -> Result<RieszOutput> {
        let n = self.grid.dim();
        if p == 0 || p > n {
            return Err(Error::InvalidInput(format!("Riesz index {p} outside 1..={n}")));
        }
        let mut data: Vec<Complex<f64>> = self
            .coefficients
            .par_iter()
            .enumerate()
            .map(|(k, c)| c * self.grid.multiplier(p, k))
            .collect();
        transform_nd(&mut data, &self.grid.resolution, true);
        let scale = 1.0 / data.len() as f64;
        let real: Vec<f64> = data.iter().map(|c| c.re * scale).collect();
        let imag_sq: Vec<f64> = data.iter().map(|c| (c.im * scale).powi(2)).collect();
        let real_sq: Vec<f64> = real.iter().map(|v| v * v).collect();
        let re_norm = pairwise_sum(&real_sq).sqrt();
        let im_norm = pairwise_sum(&imag_sq).sqrt();
        let imaginary_residue = if re_norm > 0.0 {
            im_norm / re_norm
        } else if im_norm > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if imaginary_residue > MAX_IMAGINARY_RESIDUE && im_norm > 1e-300 {
            return Err(Error::InvalidInput(format!(
                "Riesz transform left an imaginary residue of {imaginary_residue:e}"
            )));
        }
        Ok(RieszOutput {
            grid: f.with_values(real)?,
            imaginary_residue,
        })
    }
}

/// `R_p f` with `p` in `1..=n`, the grid taken as one period of a torus.
pub fn riesz_transform(f: &GridFunction, p: usize) -> Result<GridFunction> {
    Ok(Spectrum::new(f)?.riesz(f, p)?.grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Surrogate {
    /// `sum_{p=0}^{n} ||R_p f||_1`.
    pub value: f64,
    /// `||R_p f||_1` for `p = 0..=n`.
    pub terms: Vec<f64>,
    pub integral: f64,
    pub mean: f64,
    pub imaginary_residue: f64,
}

pub fn h1_surrogate(f: &GridFunction) -> Result<H1Surrogate> {
    let spectrum = Spectrum::new(f)?;
    let mut terms = vec![f.l1_norm()];
    let mut residue = 0.0_f64;
    for p in 1..=f.dim() {
        let out = spectrum.riesz(f, p)?;
        residue = residue.max(out.imaginary_residue);
        terms.push(out.grid.l1_norm());
    }
    Ok(H1Surrogate {
        value: pairwise_sum(&terms),
        terms,
        integral: f.integral(),
        mean: f.mean(),
        imaginary_residue: residue,
    })
}

pub fn h1_surrogate_norm(f: &GridFunction) -> Result<f64> {
    Ok(h1_surrogate(f)?.value)
}

/// Relative change of the surrogate when the box is doubled per axis with
/// zero padding; a measure of the periodisation error.
pub fn wraparound_estimate(f: &GridFunction) -> Result<f64> {
    let base = h1_surrogate_norm(f)?;
    let padded = h1_surrogate_norm(&f.zero_padded(2)?)?;
    Ok(if padded > 0.0 { (base - padded).abs() / padded } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FunctionSpec;
    use crate::quadrature::Region;

    fn line(lo: f64, hi: f64) -> Region {
        Region::new(vec![lo], vec![hi]).unwrap()
    }

    #[test]
    fn multiplier_bounds() {
        let f = GridFunction::zeros(Region::new(vec![0.0, 0.0], vec![1.0, 3.0]).unwrap(), vec![8, 16]).unwrap();
        let s = SpectralGrid::for_grid(&f).unwrap();
        for k in 0..s.len() {
            let total: f64 = (1..=2).map(|p| s.multiplier(p, k).norm_sqr()).sum();
            for p in 1..=2 {
                assert!(s.multiplier(p, k).norm() <= 1.0);
            }
            let xi = s.xi(k);
            if xi.iter().any(|v| *v != 0.0) {
                assert!((total - 1.0).abs() < 1e-15);
            } else {
                assert_eq!(total, 0.0);
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let f = GridFunction::zeros(line(0.0, 1.0), vec![12]).unwrap();
        assert_eq!(
            riesz_transform(&f, 1).unwrap_err(),
            Error::NonPowerOfTwo { axis: 0, resolution: 12 }
        );
        let f = GridFunction::zeros(line(0.0, 1.0), vec![16]).unwrap();
        assert!(riesz_transform(&f, 0).is_err());
        assert!(riesz_transform(&f, 2).is_err());
    }

    #[test]
    fn cosine_goes_to_sine() {
        let length = 3.0;
        for k in [1, 3, 7] {
            let w = 2.0 * PI * k as f64 / length;
            let f = GridFunction::from_fn(line(0.0, length), vec![64], |x| (w * x[0]).cos()).unwrap();
            let r = riesz_transform(&f, 1).unwrap();
            let expected = GridFunction::from_fn(line(0.0, length), vec![64], |x| (w * x[0]).sin()).unwrap();
            assert!(r.max_abs_diff(&expected).unwrap() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn radial_parity() {
        let f = GridFunction::sample(
            &FunctionSpec::Gaussian {
                center: vec![0.0, 0.0],
                width: 1.0,
                amplitude: 1.0,
            },
            Region::cube(2, -8.0, 8.0).unwrap(),
            vec![64, 64],
        )
        .unwrap();
        let r = riesz_transform(&f, 1).unwrap();
        let m = 64;
        let mut worst: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = r.values()[i * m + j];
                worst = worst.max((v + r.values()[(m - 1 - i) * m + j]).abs());
                worst = worst.max((v - r.values()[i * m + (m - 1 - j)]).abs());
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn surrogate_basics() {
        let z = GridFunction::zeros(Region::cube(2, -1.0, 1.0).unwrap(), vec![8, 8]).unwrap();
        assert_eq!(h1_surrogate_norm(&z).unwrap(), 0.0);

        let f = GridFunction::sample(
            &FunctionSpec::LaplacianGaussian {
                center: vec![0.3],
                width: 1.0,
                amplitude: 1.0,
            },
            line(-16.0, 16.0),
            vec![256],
        )
        .unwrap();
        let s = h1_surrogate(&f).unwrap();
        assert!(s.value >= f.l1_norm());
        assert_eq!(s.terms.len(), 2);
        assert!(s.imaginary_residue < 1e-14);
        let scaled = h1_surrogate_norm(&f.scale(-2.5)).unwrap();
        assert!((scaled - 2.5 * s.value).abs() <= 1e-13 * scaled);
        assert!(wraparound_estimate(&f).unwrap() < 1e-2);
    }
}
