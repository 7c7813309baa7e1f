//! Sample estimates of the output covariance of a filter bank.

use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::{FeasibilityReport, GammaOperator};
use crate::linalg::{min_eigenvalue, solve_stein, spectral_radius, symmetric_part};
use crate::spectra::{FrequencyGrid, RationalSpec, SpectralDensity};

/// Default number of samples dropped before recording, so the recursion
/// forgets its zero initial state.
pub const DEFAULT_BURN_IN: usize = 1000;

/// Scalar ARMA model `y = W(z) e` with `W = num / den` and `e` white with
/// the given variance. Coefficients are in ascending powers of `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaModel {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
    #[serde(default = "unit_variance")]
    pub variance: f64,
}

fn unit_variance() -> f64 {
    1.0
}

fn degree(c: &[f64]) -> Option<usize> {
    c.iter().rposition(|&x| x != 0.0)
}

impl ArmaModel {
    /// Checks causality (`deg num <= deg den`) and stability (all poles in
    /// the open unit disc).
    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::UnstableModel(format!("variance {} is not positive", self.variance)));
        }
        if self.num.iter().chain(&self.den).any(|x| !x.is_finite()) {
            return Err(Error::UnstableModel("non-finite coefficients".into()));
        }
        let p = degree(&self.den).ok_or_else(|| Error::UnstableModel("denominator is zero".into()))?;
        let q = degree(&self.num).ok_or_else(|| Error::UnstableModel("numerator is zero".into()))?;
        if q > p {
            return Err(Error::UnstableModel(format!(
                "numerator degree {q} exceeds denominator degree {p}"
            )));
        }
        let radius = self.pole_radius();
        if radius >= 1.0 {
            return Err(Error::UnstableModel(format!("pole of modulus {radius}")));
        }
        Ok(())
    }

    /// Largest pole modulus, from the eigenvalues of the companion matrix.
    pub fn pole_radius(&self) -> f64 {
        let Some(p) = degree(&self.den) else {
            return f64::INFINITY;
        };
        if p == 0 {
            return 0.0;
        }
        let lead = self.den[p];
        let mut companion = DMatrix::zeros(p, p);
        for i in 0..p {
            companion[(0, i)] = -self.den[p - 1 - i] / lead;
        }
        for i in 1..p {
            companion[(i, i - 1)] = 1.0;
        }
        spectral_radius(&companion)
    }

    /// `variance * |W(e^{j theta})|^2` on the grid.
    pub fn spectrum(&self, grid: &FrequencyGrid) -> Result<SpectralDensity> {
        self.validate()?;
        let shape = RationalSpec::Transfer {
            num: self.num.clone(),
            den: self.den.clone(),
        }
        .evaluate(grid)?;
        SpectralDensity::new(
            grid.clone(),
            shape.values().iter().map(|v| v * self.variance).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Draws `length` samples of the model after `burn_in` discarded ones,
/// deterministically in `seed`.
pub fn simulate_arma(model: &ArmaModel, length: usize, seed: u64, burn_in: usize) -> Result<SampleSeries> {
    model.validate()?;
    let p = degree(&model.den).unwrap_or(0);
    let lead = model.den[p];
    // coefficients in powers of z^{-1}: lag l multiplies z^{p-l}
    let ar: Vec<f64> = (1..=p).map(|l| model.den[p - l] / lead).collect();
    let ma: Vec<f64> = (0..=p)
        .map(|l| model.num.get(p - l).copied().unwrap_or(0.0) / lead)
        .collect();
    let scale = model.variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = burn_in + length;
    let mut e = vec![0.0; total];
    let mut y = vec![0.0; total];
    for t in 0..total {
        let draw: f64 = StandardNormal.sample(&mut rng);
        e[t] = draw * scale;
        let mut acc = 0.0;
        for (l, &b) in ma.iter().enumerate() {
            if l <= t {
                acc += b * e[t - l];
            }
        }
        for (l, &a) in ar.iter().enumerate() {
            if l < t {
                acc -= a * y[t - l - 1];
            }
        }
        y[t] = acc;
    }
    Ok(SampleSeries {
        values: y.split_off(burn_in),
        seed,
    })
}

/// Runs `x_{t+1} = A x_t + B y_t` from `x_0 = 0`, returning all `N + 1`
/// states.
pub fn filter_states(op: &GammaOperator, y: &[f64]) -> Vec<DVector<f64>> {
    let a = op.bank().a();
    let b = op.bank().b();
    let mut states = Vec::with_capacity(y.len() + 1);
    let mut x = DVector::zeros(op.n());
    states.push(x.clone());
    for &yt in y {
        x = a * &x + b * yt;
        states.push(x.clone());
    }
    states
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceEstimate {
    /// Sample covariance of the filtered states.
    #[serde(serialize_with = "serialize_matrix")]
    pub raw: DMatrix<f64>,
    /// Projection onto `Range Gamma`, lifted to be positive definite.
    #[serde(serialize_with = "serialize_matrix")]
    pub conditioned: DMatrix<f64>,
    pub report: FeasibilityReport,
}

fn serialize_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::filterbank::matrix_to_rows(m).serialize(s)
}

/// Estimates `Sigma` from a sample path.
///
/// The first `n` states still carry the zero initial condition and are
/// dropped. The sample covariance is projected onto the range; if that
/// leaves it short of positive definite, a multiple of `Gamma(1)` (which
/// lies in the range and is positive definite) is added until the smallest
/// eigenvalue reaches `1e-8 * tr / n`.
pub fn estimate_sigma(op: &GammaOperator, y: &[f64]) -> Result<CovarianceEstimate> {
    let n = op.n();
    if y.len() < 10 * n {
        return Err(Error::DegenerateCovariance(format!(
            "{} samples are too few for n = {n}",
            y.len()
        )));
    }
    let states = filter_states(op, y);
    let kept = &states[n..];
    let mut raw = DMatrix::zeros(n, n);
    for x in kept {
        raw += x * x.transpose();
    }
    raw /= kept.len() as f64;
    let raw = symmetric_part(&raw);
    let projected = op.project(&raw)?;
    let trace = projected.trace();
    if trace.is_nan() || trace <= 0.0 {
        return Err(Error::DegenerateCovariance(format!("trace {trace} is not positive")));
    }
    let floor = 1e-8 * trace / n as f64;
    let lowest = min_eigenvalue(&projected);
    let conditioned = if lowest >= floor {
        projected
    } else {
        let b = op.bank().b();
        let unit = symmetric_part(&solve_stein(op.bank().a(), &(b * b.transpose()))?);
        let c = (floor - lowest) / min_eigenvalue(&unit);
        projected + unit * c
    };
    let report = op.feasibility(&conditioned)?;
    Ok(CovarianceEstimate { raw, conditioned, report })
}

/// Reads a single-column series; a non-numeric first line is taken as a
/// header and skipped.
pub fn read_series<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::DimensionMismatch(format!("reading series: {e}")))?;
        let field = line.split(',').next().unwrap_or("").trim();
        if field.is_empty() {
            continue;
        }
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(Error::DimensionMismatch(format!(
                    "line {}: '{field}' is not a number",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

pub fn read_series_file(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::DimensionMismatch(format!("{}: {e}", path.display())))?;
    read_series(std::io::BufReader::new(file))
}

pub fn write_series<W: Write>(mut w: W, values: &[f64]) -> std::io::Result<()> {
    writeln!(w, "y")?;
    for v in values {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::FilterBank;
    use crate::instances::arma_process;

    fn ar1(pole: f64) -> ArmaModel {
        ArmaModel {
            num: vec![0.0, 1.0],
            den: vec![-pole, 1.0],
            variance: 1.0,
        }
    }

    #[test]
    fn stability_and_causality() {
        assert!(arma_process().validate().is_ok());
        assert!(ar1(1.2).validate().is_err());
        let anticausal = ArmaModel {
            num: vec![0.0, 0.0, 1.0],
            den: vec![-0.5, 1.0],
            variance: 1.0,
        };
        assert!(matches!(anticausal.validate(), Err(Error::UnstableModel(_))));
        assert!((ar1(-0.7).pole_radius() - 0.7).abs() < 1e-12);
        let pure_delay = ArmaModel {
            num: vec![1.0],
            den: vec![0.0, 0.0, 1.0],
            variance: 1.0,
        };
        assert_eq!(pure_delay.pole_radius(), 0.0);
    }

    #[test]
    fn simulation_is_deterministic() {
        let m = arma_process();
        let a = simulate_arma(&m, 500, 7, DEFAULT_BURN_IN).unwrap();
        let b = simulate_arma(&m, 500, 7, DEFAULT_BURN_IN).unwrap();
        let c = simulate_arma(&m, 500, 8, DEFAULT_BURN_IN).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
        assert_eq!(a.values.len(), 500);
    }

    #[test]
    fn ar1_recursion() {
        // y_t = 0.5 y_{t-1} + e_t: the lag-1/lag-0 ratio is the pole
        let s = simulate_arma(&ar1(0.5), 200_000, 1, DEFAULT_BURN_IN).unwrap();
        let y = &s.values;
        let c0: f64 = y.iter().map(|v| v * v).sum::<f64>() / y.len() as f64;
        let c1: f64 = y.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / y.len() as f64;
        assert!((c0 - 4.0 / 3.0).abs() < 0.03, "{c0}");
        assert!((c1 / c0 - 0.5).abs() < 0.01);
    }

    #[test]
    fn sigma_estimate_is_feasible() {
        let op = GammaOperator::new(FilterBank::lag_bank(3).unwrap(), FrequencyGrid::new(64).unwrap()).unwrap();
        let s = simulate_arma(&ar1(0.5), 20_000, 3, DEFAULT_BURN_IN).unwrap();
        let est = estimate_sigma(&op, &s.values).unwrap();
        assert!(est.report.feasible());
        assert!((est.conditioned[(0, 0)] - 4.0 / 3.0).abs() < 0.1);
        assert!(estimate_sigma(&op, &[1.0, 2.0]).is_err());
        assert!(matches!(
            estimate_sigma(&op, &[0.0; 100]),
            Err(Error::DegenerateCovariance(_))
        ));
    }

    #[test]
    fn white_noise_through_identity_filter() {
        let white = ArmaModel {
            num: vec![1.0],
            den: vec![1.0],
            variance: 1.0,
        };
        let n = 100_000;
        let s = simulate_arma(&white, n, 11, DEFAULT_BURN_IN).unwrap();
        let var = s.values.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn lag_bank_states_are_delays() {
        let op = GammaOperator::new(FilterBank::lag_bank(3).unwrap(), FrequencyGrid::new(16).unwrap()).unwrap();
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let x = filter_states(&op, &y);
        assert_eq!(x.len(), 6);
        for k in 3..=5 {
            assert_eq!(x[k].as_slice(), &[y[k - 1], y[k - 2], y[k - 3]]);
        }
    }

    #[test]
    fn series_roundtrip() {
        let mut buf = Vec::new();
        write_series(&mut buf, &[1.5, -2.25e-7]).unwrap();
        let back = read_series(buf.as_slice()).unwrap();
        assert_eq!(back, vec![1.5, -2.25e-7]);
        assert!(read_series("y\n1\nx\n".as_bytes()).is_err());
    }
}
