use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use super::bank::FilterBank;
use super::range::RangeBasis;
use crate::error::{Error, Result};
use crate::linalg::{ensure_square, min_eigenvalue, symmetric_part};
use crate::spectra::{FrequencyGrid, SpectralDensity};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-6;

/// `Gamma: Phi -> int G Phi G^*` on a fixed grid, with `Range Gamma`.
///
/// Besides the samples of `G` this keeps the quadratic forms
/// `G^* Lambda_i G` of every basis element, which is all the dual solver
/// ever needs from the bank.
#[derive(Debug, Clone)]
pub struct GammaOperator {
    bank: FilterBank,
    grid: FrequencyGrid,
    samples: DMatrix<Complex<f64>>,
    re: DMatrix<f64>,
    im: DMatrix<f64>,
    range: RangeBasis,
    forms: Vec<Vec<f64>>,
    traces: Vec<f64>,
}

impl GammaOperator {
    pub fn new(bank: FilterBank, grid: FrequencyGrid) -> Result<Self> {
        let samples = bank.evaluate(&grid);
        let re = samples.map(|c| c.re);
        let im = samples.map(|c| c.im);
        let range = RangeBasis::new(&bank)?;
        let mut op = Self {
            bank,
            grid,
            samples,
            re,
            im,
            range,
            forms: Vec::new(),
            traces: Vec::new(),
        };
        op.forms = op.range.elements().iter().map(|e| op.quadratic_form(e)).collect();
        op.traces = op.range.elements().iter().map(|e| e.trace()).collect();
        Ok(op)
    }

    pub fn bank(&self) -> &FilterBank {
        &self.bank
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.bank.n()
    }

    /// Dimension of `Range Gamma`.
    pub fn dim(&self) -> usize {
        self.range.dim()
    }

    pub fn samples(&self) -> &DMatrix<Complex<f64>> {
        &self.samples
    }

    pub fn range(&self) -> &RangeBasis {
        &self.range
    }

    /// `G^* Lambda_i G` on the grid, one row per basis element.
    pub fn basis_forms(&self) -> &[Vec<f64>] {
        &self.forms
    }

    /// `tr(Lambda_i)` for each basis element.
    pub fn basis_traces(&self) -> &[f64] {
        &self.traces
    }

    /// `G(e^{j theta})^* M G(e^{j theta})` at every node, for symmetric `M`.
    pub fn quadratic_form(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let mr = m * &self.re;
        let mi = m * &self.im;
        (0..self.grid.size())
            .map(|k| self.re.column(k).dot(&mr.column(k)) + self.im.column(k).dot(&mi.column(k)))
            .collect()
    }

    /// `int G Phi G^*` by quadrature over grid samples.
    pub fn apply_values(&self, values: &[f64]) -> Result<DMatrix<f64>> {
        if values.len() != self.grid.size() {
            return Err(Error::GridMismatch {
                left: values.len(),
                right: self.grid.size(),
            });
        }
        let scale = 1.0 / self.grid.size() as f64;
        let mut wr = self.re.clone();
        let mut wi = self.im.clone();
        for (k, &v) in values.iter().enumerate() {
            wr.column_mut(k).scale_mut(v * scale);
            wi.column_mut(k).scale_mut(v * scale);
        }
        let m = wr * self.re.transpose() + wi * self.im.transpose();
        Ok(symmetric_part(&m))
    }

    pub fn apply(&self, phi: &SpectralDensity) -> Result<DMatrix<f64>> {
        if phi.grid() != &self.grid {
            return Err(Error::GridMismatch {
                left: phi.grid().size(),
                right: self.grid.size(),
            });
        }
        self.apply_values(phi.values())
    }

    pub fn project(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.range.project(m)
    }

    /// `sup_theta |G^* M G|`; vanishes for `M` orthogonal to the range.
    pub fn orthogonality_null_check(&self, m: &DMatrix<f64>) -> Result<f64> {
        ensure_square(m, self.n(), "matrix")?;
        Ok(self
            .quadratic_form(&symmetric_part(m))
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max))
    }

    pub fn feasibility(&self, sigma: &DMatrix<f64>) -> Result<FeasibilityReport> {
        self.feasibility_with_tol(sigma, DEFAULT_FEASIBILITY_TOL)
    }

    /// `Sigma` is feasible iff it is in `Range Gamma` and positive definite.
    /// The range test is relative: `||Sigma - P(Sigma)||_F < tol ||Sigma||_F`.
    /// Any antisymmetric part counts against the range.
    pub fn feasibility_with_tol(&self, sigma: &DMatrix<f64>, tol: f64) -> Result<FeasibilityReport> {
        ensure_square(sigma, self.n(), "Sigma")?;
        let sym = symmetric_part(sigma);
        let projected = self.range.project(&sym)?;
        let range_residual = (sigma - projected).norm();
        let threshold = tol * sigma.norm();
        let min_eigenvalue = min_eigenvalue(&sym);
        Ok(FeasibilityReport {
            in_range: range_residual < threshold || range_residual == 0.0,
            range_residual,
            tolerance: threshold,
            positive_definite: min_eigenvalue > 0.0,
            min_eigenvalue,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub in_range: bool,
    pub range_residual: f64,
    pub tolerance: f64,
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.in_range && self.positive_definite
    }
}

pub fn gamma_apply(op: &GammaOperator, phi: &SpectralDensity) -> Result<DMatrix<f64>> {
    op.apply(phi)
}

pub fn project_range_gamma(op: &GammaOperator, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    op.project(m)
}

pub fn orthogonality_null_check(op: &GammaOperator, m: &DMatrix<f64>) -> Result<f64> {
    op.orthogonality_null_check(m)
}

pub fn feasibility_check(op: &GammaOperator, sigma: &DMatrix<f64>) -> Result<FeasibilityReport> {
    op.feasibility(sigma)
}
