//! Parametric kernels `Phi(u)` with bounded effective support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::Region;

fn one() -> f64 {
    1.0
}

fn default_truncation_sigmas() -> f64 {
    8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum KernelFamily {
    /// `height` on the closed box `[lo, hi]`.
    IndicatorBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "one")]
        height: f64,
    },
    /// `amplitude * exp(-|u - center|^2 / (2 sigma^2))`, cut off at
    /// `truncation_sigmas` standard deviations per axis. With `normalized`
    /// the amplitude multiplies the unit-mass density.
    Gaussian {
        center: Vec<f64>,
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        normalized: bool,
        #[serde(default = "default_truncation_sigmas")]
        truncation_sigmas: f64,
    },
    /// `amplitude * exp(1 - 1 / (1 - |u - center|^2 / radius^2))` inside the ball.
    RadialBump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude * prod_i u_i^{exponents_i}` on a box in the positive orthant.
    ProductPower {
        lo: Vec<f64>,
        hi: Vec<f64>,
        exponents: Vec<f64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub family: KernelFamily,
    /// Global multiplier applied on top of the family's own amplitude.
    #[serde(default = "one")]
    pub scale: f64,
    /// Optional half-open window; the kernel vanishes outside it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Region>,
}

impl From<KernelFamily> for KernelSpec {
    fn from(family: KernelFamily) -> Self {
        Self {
            family,
            scale: 1.0,
            window: None,
        }
    }
}

impl KernelSpec {
    pub fn indicator(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        KernelFamily::IndicatorBox { lo, hi, height: 1.0 }.into()
    }

    /// Unit-mass Gaussian truncated at 8 sigma.
    pub fn unit_gaussian(center: Vec<f64>, sigma: f64) -> Self {
        KernelFamily::Gaussian {
            center,
            sigma,
            amplitude: 1.0,
            normalized: true,
            truncation_sigmas: default_truncation_sigmas(),
        }
        .into()
    }

    pub fn radial_bump(center: Vec<f64>, radius: f64) -> Self {
        KernelFamily::RadialBump {
            center,
            radius,
            amplitude: 1.0,
        }
        .into()
    }

    pub fn product_power(lo: Vec<f64>, hi: Vec<f64>, exponents: Vec<f64>) -> Self {
        KernelFamily::ProductPower {
            lo,
            hi,
            exponents,
            amplitude: 1.0,
        }
        .into()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scale: self.scale * factor,
            ..self.clone()
        }
    }

    pub fn windowed(&self, window: Region) -> Self {
        Self {
            window: Some(window),
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            KernelFamily::IndicatorBox { lo, .. } | KernelFamily::ProductPower { lo, .. } => lo.len(),
            KernelFamily::Gaussian { center, .. } | KernelFamily::RadialBump { center, .. } => {
                center.len()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n == 0 {
            return Err(Error::InvalidInput("kernel dimension must be at least 1".into()));
        }
        if !self.scale.is_finite() {
            return Err(Error::InvalidInput("kernel scale must be finite".into()));
        }
        match &self.family {
            KernelFamily::IndicatorBox { lo, hi, height } => {
                Region::new(lo.clone(), hi.clone())?;
                finite("height", *height)?;
            }
            KernelFamily::Gaussian {
                center,
                sigma,
                amplitude,
                truncation_sigmas,
                ..
            } => {
                all_finite("center", center)?;
                positive("sigma", *sigma)?;
                positive("truncation_sigmas", *truncation_sigmas)?;
                finite("amplitude", *amplitude)?;
            }
            KernelFamily::RadialBump {
                center,
                radius,
                amplitude,
            } => {
                all_finite("center", center)?;
                positive("radius", *radius)?;
                finite("amplitude", *amplitude)?;
            }
            KernelFamily::ProductPower {
                lo,
                hi,
                exponents,
                amplitude,
            } => {
                Region::new(lo.clone(), hi.clone())?;
                if exponents.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: exponents.len(),
                    });
                }
                all_finite("exponents", exponents)?;
                if lo.iter().any(|v| *v <= 0.0) {
                    return Err(Error::InvalidInput(
                        "product-power kernels live on a box in the open positive orthant".into(),
                    ));
                }
                finite("amplitude", *amplitude)?;
            }
        }
        if let Some(w) = &self.window {
            w.validate()?;
            if w.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: w.dim(),
                });
            }
        }
        Ok(())
    }

    /// Bounded box outside of which the kernel is zero (or truncated).
    pub fn support(&self) -> Region {
        match &self.family {
            KernelFamily::IndicatorBox { lo, hi, .. } | KernelFamily::ProductPower { lo, hi, .. } => {
                Region {
                    lo: lo.clone(),
                    hi: hi.clone(),
                }
            }
            KernelFamily::Gaussian {
                center,
                sigma,
                truncation_sigmas,
                ..
            } => {
                let half = sigma * truncation_sigmas;
                Region {
                    lo: center.iter().map(|c| c - half).collect(),
                    hi: center.iter().map(|c| c + half).collect(),
                }
            }
            KernelFamily::RadialBump { center, radius, .. } => Region {
                lo: center.iter().map(|c| c - radius).collect(),
                hi: center.iter().map(|c| c + radius).collect(),
            },
        }
    }

    /// Upper bound on the fraction of `int |Phi|` discarded by truncating to
    /// [`KernelSpec::support`]. Zero for compactly supported families.
    pub fn truncation_tail_bound(&self) -> f64 {
        match &self.family {
            KernelFamily::Gaussian {
                truncation_sigmas, ..
            } => {
                // Mills ratio: P(|Z| > k) <= sqrt(2/pi) exp(-k^2/2) / k, union over axes.
                let k = *truncation_sigmas;
                let per_axis = (2.0 / std::f64::consts::PI).sqrt() * (-0.5 * k * k).exp() / k;
                (self.dim() as f64 * per_axis).min(1.0)
            }
            _ => 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, u: &[f64]) -> f64 {
        if let Some(w) = &self.window {
            if !w.contains(u) {
                return 0.0;
            }
        }
        self.scale * self.eval_family(u)
    }

    fn eval_family(&self, u: &[f64]) -> f64 {
        match &self.family {
            KernelFamily::IndicatorBox { lo, hi, height } => {
                let inside = u
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(x, (l, h))| *x >= *l && *x <= *h);
                if inside {
                    *height
                } else {
                    0.0
                }
            }
            KernelFamily::Gaussian {
                center,
                sigma,
                amplitude,
                normalized,
                truncation_sigmas,
            } => {
                let half = sigma * truncation_sigmas;
                if u.iter().zip(center).any(|(x, c)| (x - c).abs() > half) {
                    return 0.0;
                }
                let r2: f64 = u.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
                let mut value = amplitude * (-r2 / (2.0 * sigma * sigma)).exp();
                if *normalized {
                    let n = center.len() as f64;
                    value /= (2.0 * std::f64::consts::PI).powf(0.5 * n) * sigma.powf(n);
                }
                value
            }
            KernelFamily::RadialBump {
                center,
                radius,
                amplitude,
            } => {
                let rho2: f64 =
                    u.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>() / (radius * radius);
                if rho2 >= 1.0 {
                    0.0
                } else {
                    amplitude * (1.0 - 1.0 / (1.0 - rho2)).exp()
                }
            }
            KernelFamily::ProductPower {
                lo,
                hi,
                exponents,
                amplitude,
            } => {
                let inside = u
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(x, (l, h))| *x >= *l && *x <= *h);
                if !inside {
                    return 0.0;
                }
                amplitude * u.iter().zip(exponents).map(|(x, a)| x.powf(*a)).product::<f64>()
            }
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive and finite")))
    }
}

fn all_finite(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureSpec;

    fn integrate(k: &KernelSpec, nodes: usize) -> f64 {
        let nodes = QuadratureSpec::gauss(nodes).nodes(&k.support());
        let mut u = vec![0.0; k.dim()];
        (0..nodes.len()).map(|i| nodes.node(i, &mut u) * k.eval(&u)).sum()
    }

    #[test]
    fn normalized_gaussian_has_unit_mass() {
        for n in 1..=2 {
            let k = KernelSpec::unit_gaussian(vec![0.3; n], 0.2);
            assert!((integrate(&k, 64) - 1.0).abs() < 1e-12);
            assert!(k.truncation_tail_bound() < 1e-13);
        }
    }

    #[test]
    fn indicator_and_window() {
        let k = KernelSpec::indicator(vec![1.0], vec![2.0]);
        assert_eq!(k.eval(&[1.5]), 1.0);
        assert_eq!(k.eval(&[2.5]), 0.0);
        let w = k.windowed(Region::new(vec![1.0], vec![1.5]).unwrap());
        assert_eq!(w.eval(&[1.25]), 1.0);
        assert_eq!(w.eval(&[1.5]), 0.0);
        assert_eq!(k.scaled(-3.0).eval(&[1.5]), -3.0);
    }

    #[test]
    fn bump_and_power() {
        let b = KernelSpec::radial_bump(vec![0.0, 0.0], 1.0);
        assert_eq!(b.eval(&[0.0, 0.0]), 1.0);
        assert_eq!(b.eval(&[0.8, 0.8]), 0.0);
        let p = KernelSpec::product_power(vec![1.0, 1.0], vec![2.0, 2.0], vec![2.0, -1.0]);
        assert!((p.eval(&[1.5, 1.25]) - 2.25 / 1.25).abs() < 1e-15);
        // int_1^2 u^2 du * int_1^2 u^-1 du
        assert!((integrate(&p, 32) - 7.0 / 3.0 * 2.0_f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::indicator(vec![2.0], vec![1.0]).validate().is_err());
        assert!(KernelSpec::unit_gaussian(vec![0.0], -1.0).validate().is_err());
        assert!(KernelSpec::product_power(vec![0.0], vec![1.0], vec![1.0]).validate().is_err());
        assert!(KernelSpec::product_power(vec![1.0], vec![2.0], vec![1.0, 2.0]).validate().is_err());
        assert!(KernelSpec::radial_bump(vec![0.0; 3], 0.5).validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let k: KernelSpec = serde_json::from_str(
            r#"{"family":"indicator-box","lo":[1.0],"hi":[2.0]}"#,
        )
        .unwrap();
        assert_eq!(k, KernelSpec::indicator(vec![1.0], vec![2.0]));
        let g: KernelSpec =
            serde_json::from_str(r#"{"family":"gaussian","center":[0.0,0.0],"sigma":0.5,"normalized":true}"#)
                .unwrap();
        assert_eq!(g.support().hi, vec![4.0, 4.0]);
    }
}
