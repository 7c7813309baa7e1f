//! The dual problem over `Range Gamma` and its Newton solver.
//!
//! Everything here works with a normalized operator, i.e. one whose bank
//! has been rescaled so the covariance target is the identity.

mod diagnostics;
mod functional;
mod newton;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filterbank::GammaOperator;
use crate::linalg::{ensure_square, ensure_symmetric};

pub use diagnostics::{degree_certificate, kl0_closed_form, uniform_convergence_gap};
pub use functional::{
    admissible, admissible_with, dual_gradient, dual_hessian, dual_value, phi_from_multiplier,
    Admissibility, DEFAULT_EPS_POS,
};
pub use newton::{newton_solve, IterationRecord, SolveResult, SolverConfig};

/// A Lagrange multiplier in `Range Gamma`, held both as coordinates in the
/// operator's orthonormal basis and as the assembled symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    coords: DVector<f64>,
    matrix: DMatrix<f64>,
}

impl Multiplier {
    pub fn zero(op: &GammaOperator) -> Self {
        Self {
            coords: DVector::zeros(op.dim()),
            matrix: DMatrix::zeros(op.n(), op.n()),
        }
    }

    pub fn from_coords(op: &GammaOperator, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != op.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for a range of dimension {}",
                coords.len(),
                op.dim()
            )));
        }
        let matrix = op.range().assemble(&coords);
        Ok(Self { coords, matrix })
    }

    /// Projects a symmetric matrix onto the range; the orthogonal part is
    /// invisible to `G^* Lambda G` anyway.
    pub fn from_matrix(op: &GammaOperator, m: &DMatrix<f64>) -> Result<Self> {
        ensure_square(m, op.n(), "Lambda")?;
        ensure_symmetric(m)?;
        Self::from_coords(op, op.range().coordinates(m))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coords: &self.coords * factor,
            matrix: &self.matrix * factor,
        }
    }
}

impl Serialize for Multiplier {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::filterbank::matrix_to_rows(&self.matrix).serialize(s)
    }
}
