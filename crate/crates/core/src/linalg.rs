//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) const SYMMETRY_TOL: f64 = 1e-10;

pub fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `||M - M^T||_F` relative to `max(1, ||M||_F)`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm() / m.norm().max(1.0)
}

pub fn ensure_square(m: &DMatrix<f64>, n: usize, what: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {n}x{n}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

pub fn ensure_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let asymmetry = asymmetry(m);
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NonSymmetric { asymmetry });
    }
    Ok(())
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetric_part(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `M^p` for symmetric positive definite `M`, through its eigendecomposition.
pub fn spd_power(m: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetric_part(m));
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_nan() || min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(p)));
    Ok(symmetric_part(&(v * d * v.transpose())))
}

/// Spectral radius by Gelfand's formula, `lim ||A^k||^{1/k}`, with
/// `k = 2^64` reached through normalized repeated squaring.
///
/// Avoids a Schur iteration, which can stall on nilpotent shifts.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    let mut m = a.clone();
    let mut log_rho = 0.0;
    let mut weight = 1.0;
    for _ in 0..64 {
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        log_rho += weight * norm.ln();
        m /= norm;
        m = &m * &m;
        weight *= 0.5;
    }
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (log_rho + weight * norm.ln()).exp()
}

/// Solves `P - A P A^T = Q` by vectorization, `(I - A (x) A) vec P = vec Q`.
///
/// Unique whenever `A` is a stability matrix.
pub fn solve_stein(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    ensure_square(a, n, "A")?;
    ensure_square(q, n, "Q")?;
    let lhs = DMatrix::<f64>::identity(n * n, n * n) - a.kronecker(a);
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InconsistentBank("Stein operator is singular".into()))?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}
