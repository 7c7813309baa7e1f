use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::grid::{quadrature, FrequencyGrid};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const DEN_FLOOR: f64 = 1e-10;

/// A real, even, strictly positive function on the unit circle, held as
/// samples on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl SpectralDensity {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples on a grid of {} nodes",
                values.len(),
                grid.size()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::NonPositiveDensity {
                    theta: grid.theta(k),
                    value: v,
                });
            }
        }
        for k in 1..grid.size() / 2 {
            let (a, b) = (values[k], values[grid.mirror(k)]);
            if (a - b).abs() > SYMMETRY_TOL * a.max(b) {
                return Err(Error::AsymmetricDensity { index: k });
            }
        }
        Ok(Self { grid, values })
    }

    /// Evaluates `f` on `[0, pi]` and mirrors, so the result is exactly even.
    pub fn from_even_fn<F: Fn(f64) -> f64>(grid: &FrequencyGrid, f: F) -> Result<Self> {
        let values = mirror_half(grid, |k| f(grid.theta(k)));
        Self::new(grid.clone(), values)
    }

    pub fn constant(grid: &FrequencyGrid, value: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![value; grid.size()])
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `integral Phi dtheta/2pi`, the variance of the process.
    pub fn zeroth_moment(&self) -> f64 {
        quadrature(&self.values)
    }

    /// Pointwise power `Phi^p`.
    pub fn powf(&self, p: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.values.iter().map(|v| v.powf(p)).collect(),
        )
    }

    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.size(),
                right: other.grid.size(),
            });
        }
        Ok(())
    }
}

/// Fills nodes `0..=size/2` with `f` and the rest by mirror symmetry.
pub(crate) fn mirror_half<T: Clone, F: FnMut(usize) -> T>(grid: &FrequencyGrid, mut f: F) -> Vec<T> {
    let size = grid.size();
    let mut half: Vec<T> = (0..=size / 2).map(&mut f).collect();
    for k in size / 2 + 1..size {
        half.push(half[size - k].clone());
    }
    half
}

/// Rational input spectrum.
///
/// * `transfer`: `|num(z)/den(z)|^2` on `z = e^{j theta}`, coefficients in
///   ascending powers of `z` (`num[i]` multiplies `z^i`).
/// * `laurent`: ratio of symmetric Laurent polynomials; index `i` holds
///   `c_i = c_{-i}`, so the value is `c_0 + 2 sum_i c_i cos(i theta)`.
/// * `constant`: a flat spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RationalSpec {
    Transfer { num: Vec<f64>, den: Vec<f64> },
    Laurent { num: Vec<f64>, den: Vec<f64> },
    Constant { value: f64 },
}

impl RationalSpec {
    pub fn constant(value: f64) -> Self {
        RationalSpec::Constant { value }
    }

    fn validate(&self) -> Result<()> {
        let check = |name: &str, c: &[f64]| {
            if c.is_empty() || c.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidRationalSpec(format!("{name} is identically zero")));
            }
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidRationalSpec(format!("{name} has non-finite coefficients")));
            }
            Ok(())
        };
        match self {
            RationalSpec::Transfer { num, den } | RationalSpec::Laurent { num, den } => {
                check("numerator", num)?;
                check("denominator", den)
            }
            RationalSpec::Constant { value } if !value.is_finite() => {
                Err(Error::InvalidRationalSpec("constant is not finite".into()))
            }
            RationalSpec::Constant { .. } => Ok(()),
        }
    }

    pub fn evaluate(&self, grid: &FrequencyGrid) -> Result<SpectralDensity> {
        self.validate()?;
        let mut den_fail = None;
        let values = mirror_half(grid, |k| {
            let theta = grid.theta(k);
            match self {
                RationalSpec::Constant { value } => *value,
                RationalSpec::Transfer { num, den } => {
                    let z = Complex::from_polar(1.0, theta);
                    let d = horner(den, z).norm();
                    if d <= DEN_FLOOR && den_fail.is_none() {
                        den_fail = Some(theta);
                    }
                    (horner(num, z).norm() / d).powi(2)
                }
                RationalSpec::Laurent { num, den } => laurent(num, theta) / laurent(den, theta),
            }
        });
        if let Some(theta) = den_fail {
            return Err(Error::InvalidRationalSpec(format!(
                "denominator vanishes on the unit circle near theta = {theta}"
            )));
        }
        SpectralDensity::new(grid.clone(), values)
    }
}

pub fn eval_rational_spec(spec: &RationalSpec, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    spec.evaluate(grid)
}

fn horner(coeffs: &[f64], z: Complex<f64>) -> Complex<f64> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn laurent(coeffs: &[f64], theta: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| if i == 0 { c } else { 2.0 * c * (i as f64 * theta).cos() })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prior() -> RationalSpec {
        RationalSpec::Transfer {
            num: vec![0.0, 1.0],
            den: vec![-0.82, 1.0],
        }
    }

    #[test]
    fn first_order_prior_values() {
        let g = FrequencyGrid::new(2048).unwrap();
        let psi = prior().evaluate(&g).unwrap();
        assert!((psi.values()[0] - 1.0 / 0.0324).abs() < 1e-9);
        assert!((psi.values()[0] - 30.8642).abs() < 1e-4);
        assert!((psi.values()[1024] - 1.0 / (1.82f64 * 1.82)).abs() < 1e-12);
        assert!((psi.values()[1024] - 0.30189).abs() < 1e-5);
    }

    #[test]
    fn constant_spec() {
        let g = FrequencyGrid::new(8).unwrap();
        let phi = RationalSpec::constant(1.0).evaluate(&g).unwrap();
        assert!(phi.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn laurent_ratio() {
        let g = FrequencyGrid::new(16).unwrap();
        // (2 + cos) / 1
        let spec = RationalSpec::Laurent {
            num: vec![2.0, 0.5],
            den: vec![1.0],
        };
        let phi = spec.evaluate(&g).unwrap();
        for (t, v) in g.nodes().iter().zip(phi.values()) {
            assert!((v - (2.0 + t.cos())).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_nonpositive_values() {
        let g = FrequencyGrid::new(16).unwrap();
        let spec = RationalSpec::Laurent {
            num: vec![1.0, 0.5],
            den: vec![1.0],
        };
        match spec.evaluate(&g).unwrap_err() {
            Error::NonPositiveDensity { theta, .. } => assert!((theta - std::f64::consts::PI).abs() < 1e-12),
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            RationalSpec::constant(-1.0).evaluate(&g),
            Err(Error::NonPositiveDensity { .. })
        ));
    }

    #[test]
    fn rejects_bad_denominators() {
        let g = FrequencyGrid::new(16).unwrap();
        let zero = RationalSpec::Transfer {
            num: vec![1.0],
            den: vec![0.0, 0.0],
        };
        assert!(matches!(zero.evaluate(&g), Err(Error::InvalidRationalSpec(_))));
        // root at z = 1
        let on_circle = RationalSpec::Transfer {
            num: vec![1.0],
            den: vec![-1.0, 1.0],
        };
        assert!(matches!(on_circle.evaluate(&g), Err(Error::InvalidRationalSpec(_))));
    }

    #[test]
    fn density_invariants() {
        let g = FrequencyGrid::new(8).unwrap();
        let mut v = vec![1.0; 8];
        v[1] = 2.0;
        assert_eq!(
            SpectralDensity::new(g.clone(), v).unwrap_err(),
            Error::AsymmetricDensity { index: 1 }
        );
        assert!(matches!(
            SpectralDensity::new(g.clone(), vec![1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]),
            Err(Error::NonPositiveDensity { .. })
        ));
        assert!(SpectralDensity::new(g, vec![1.0; 4]).is_err());
    }

    #[test]
    fn json_schema() {
        let spec: RationalSpec =
            serde_json::from_str(r#"{"kind": "transfer", "num": [0, 1], "den": [-0.82, 1]}"#).unwrap();
        assert_eq!(spec, prior());
        let spec: RationalSpec = serde_json::from_str(r#"{"kind": "constant", "value": 2.0}"#).unwrap();
        assert_eq!(spec, RationalSpec::constant(2.0));
        let spec: RationalSpec =
            serde_json::from_str(r#"{"kind": "laurent", "num": [434, -245, 42], "den": [370, -175]}"#).unwrap();
        assert!(matches!(spec, RationalSpec::Laurent { .. }));
    }
}
