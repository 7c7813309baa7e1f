use nalgebra::{DMatrix, DVector};

use super::bank::FilterBank;
use crate::error::Result;
use crate::linalg::{ensure_square, ensure_symmetric, frobenius_inner, solve_stein, symmetric_part};

const RANK_TOL: f64 = 1e-10;

/// Orthonormal basis (trace inner product) of `Range Gamma`.
///
/// `P` is in the range iff `P - A P A' = B H + H' B'` for some row `H`.
/// Solving that Stein equation for `H = e_1', ..., e_n'` spans the range;
/// an SVD of the stacked solutions orthonormalizes them.
#[derive(Debug, Clone)]
pub struct RangeBasis {
    n: usize,
    elements: Vec<DMatrix<f64>>,
}

impl RangeBasis {
    pub fn new(bank: &FilterBank) -> Result<Self> {
        let n = bank.n();
        let b = bank.b();
        let mut stacked = DMatrix::zeros(n * n, n);
        for k in 0..n {
            let mut e = DVector::zeros(n);
            e[k] = 1.0;
            let q = b * e.transpose() + &e * b.transpose();
            let p = solve_stein(bank.a(), &q)?;
            stacked.set_column(k, &DVector::from_column_slice(symmetric_part(&p).as_slice()));
        }
        let svd = stacked.svd(true, false);
        let u = svd.u.expect("requested U");
        let smax = svd.singular_values.max();
        let mut order: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > RANK_TOL * smax)
            .collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let elements = order
            .into_iter()
            .map(|i| {
                let col = u.column(i);
                let m = DMatrix::from_column_slice(n, n, col.as_slice());
                fix_sign(symmetric_part(&m))
            })
            .collect();
        Ok(Self { n, elements })
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[DMatrix<f64>] {
        &self.elements
    }

    /// `<M, Lambda_i>` for each basis element.
    pub fn coordinates(&self, m: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.elements.iter().map(|e| frobenius_inner(m, e)))
    }

    pub fn assemble(&self, coords: &DVector<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (c, e) in coords.iter().zip(&self.elements) {
            m += e * *c;
        }
        m
    }

    /// Orthogonal projection onto the range; rejects non-symmetric input.
    pub fn project(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        ensure_square(m, self.n, "matrix")?;
        ensure_symmetric(m)?;
        Ok(self.assemble(&self.coordinates(m)))
    }

    /// Orthonormal basis of the complement of the range inside the
    /// symmetric matrices.
    pub fn complement(&self) -> Vec<DMatrix<f64>> {
        let n = self.n;
        let mut found: Vec<DMatrix<f64>> = self.elements.clone();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                // two passes of Gram-Schmidt for stability
                for _ in 0..2 {
                    for f in &found {
                        let c = frobenius_inner(&e, f);
                        e -= f * c;
                    }
                }
                let norm = e.norm();
                if norm > 1e-8 {
                    e /= norm;
                    found.push(e.clone());
                    out.push(e);
                }
            }
        }
        out
    }
}

fn fix_sign(m: DMatrix<f64>) -> DMatrix<f64> {
    // make the largest-magnitude entry positive so the basis is reproducible
    let pivot = m.iter().copied().fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if pivot < 0.0 {
        -m
    } else {
        m
    }
}

/// `min_H ||M - A M A' - B H - H' B'||_F`: zero iff `M` lies in the range.
///
/// Solved directly as least squares over `H`, without going through the
/// basis.
pub fn stein_range_residual(bank: &FilterBank, m: &DMatrix<f64>) -> Result<f64> {
    let n = bank.n();
    ensure_square(m, n, "matrix")?;
    let a = bank.a();
    let b = bank.b();
    let r = m - a * m * a.transpose();
    let mut design = DMatrix::zeros(n * n, n);
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        let q = b * e.transpose() + &e * b.transpose();
        design.set_column(k, &DVector::from_column_slice(q.as_slice()));
    }
    let target = DVector::from_column_slice(r.as_slice());
    let svd = design.clone().svd(true, true);
    let h = svd
        .solve(&target, 1e-14)
        .map_err(|e| crate::error::Error::InconsistentBank(e.to_string()))?;
    Ok((target - design * h).norm())
}

pub fn range_gamma_basis(bank: &FilterBank) -> Result<RangeBasis> {
    RangeBasis::new(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::two_state_bank;

    #[test]
    fn lag_bank_two() {
        let basis = RangeBasis::new(&FilterBank::lag_bank(2).unwrap()).unwrap();
        assert_eq!(basis.dim(), 2);
        let id = DMatrix::identity(2, 2);
        let lag1 = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        for m in [id, lag1] {
            assert!((basis.project(&m).unwrap() - &m).norm() < 1e-12);
        }
        // the complement is the non-Toeplitz direction
        let comp = basis.complement();
        assert_eq!(comp.len(), 1);
        assert!((comp[0][(0, 0)] + comp[0][(1, 1)]).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_and_in_range() {
        for bank in [two_state_bank().unwrap(), FilterBank::lag_bank(5).unwrap()] {
            let basis = RangeBasis::new(&bank).unwrap();
            assert!(basis.dim() <= bank.n());
            for (i, x) in basis.elements().iter().enumerate() {
                assert!(stein_range_residual(&bank, x).unwrap() < 1e-10);
                for (j, y) in basis.elements().iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((frobenius_inner(x, y) - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_in_two_state_range() {
        let bank = two_state_bank().unwrap();
        let basis = RangeBasis::new(&bank).unwrap();
        let id = DMatrix::identity(2, 2);
        assert!((basis.project(&id).unwrap() - &id).norm() < 1e-10);
    }

    #[test]
    fn projection_splits_components() {
        let bank = FilterBank::lag_bank(3).unwrap();
        let basis = RangeBasis::new(&bank).unwrap();
        let comp = basis.complement();
        assert_eq!(basis.dim() + comp.len(), 6);
        let inside = basis.assemble(&DVector::from_vec(vec![0.3, -1.2, 2.0]));
        let outside = &comp[0] * 1.7 - &comp[2] * 0.4;
        let p = basis.project(&(&inside + &outside)).unwrap();
        assert!((p - &inside).norm() < 1e-12);
        assert!(basis.project(&outside).unwrap().norm() < 1e-12);
        assert!(stein_range_residual(&bank, &outside).unwrap() > 1e-3);
        let twice = basis.project(&basis.project(&(&inside + &outside)).unwrap()).unwrap();
        assert!((twice - &inside).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_symmetric() {
        let basis = RangeBasis::new(&FilterBank::lag_bank(2).unwrap()).unwrap();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(basis.project(&m), Err(crate::Error::NonSymmetric { .. })));
    }
}
