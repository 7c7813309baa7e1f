use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ensure_square, ensure_symmetric, spd_power, spectral_radius};
use crate::spectra::{mirror_half, FrequencyGrid};

const RANK_TOL: f64 = 1e-10;

/// The filter bank `G(z) = (zI - A)^{-1} B` with `A` stable, `(A, B)`
/// reachable and `n > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl FilterBank {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.nrows();
        ensure_square(&a, n, "A")?;
        if b.len() != n {
            return Err(Error::DimensionMismatch(format!("B has {} entries, A is {n}x{n}", b.len())));
        }
        if n <= 1 {
            return Err(Error::DimensionTooSmall { n });
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch("A or B has non-finite entries".into()));
        }
        let spectral_radius = spectral_radius(&a);
        if spectral_radius >= 1.0 {
            return Err(Error::UnstableBank { spectral_radius });
        }
        let rank = controllability_rank(&a, &b);
        if rank < n {
            return Err(Error::UnreachableBank { rank, n });
        }
        Ok(Self { a, b })
    }

    /// Pure delays: `A` is the down-shift, `B = e_1`, so the components of
    /// `G` are `z^{-1}, ..., z^{-n}` in that order and the output covariance
    /// is the Toeplitz matrix of autocovariance lags `0..n-1`.
    pub fn lag_bank(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { n });
        }
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n - 1 {
            a[(i + 1, i)] = 1.0;
        }
        let mut b = DVector::zeros(n);
        b[0] = 1.0;
        Self::new(a, b)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// `G(e^{j theta_k})` for every node, as the columns of an `n x size`
    /// complex matrix. Nodes past `pi` are conjugates of their mirrors.
    pub fn evaluate(&self, grid: &FrequencyGrid) -> DMatrix<Complex<f64>> {
        let n = self.n();
        let a = self.a.map(|x| Complex::new(x, 0.0));
        let b = self.b.map(|x| Complex::new(x, 0.0));
        let size = grid.size();
        let half: Vec<DVector<Complex<f64>>> = (0..=size / 2)
            .map(|k| {
                let z = Complex::from_polar(1.0, grid.theta(k));
                let m = DMatrix::from_diagonal_element(n, n, z) - &a;
                // A stable => zI - A is invertible on the circle
                m.lu().solve(&b).expect("resolvent is singular on the unit circle")
            })
            .collect();
        let mut g = DMatrix::zeros(n, size);
        for k in 0..size {
            if k <= size / 2 {
                g.set_column(k, &half[k]);
            } else {
                g.set_column(k, &half[size - k].map(|c| c.conj()));
            }
        }
        g
    }

    /// `|det(e^{j theta} I - A)|^2` at each node.
    pub fn characteristic_modulus_sq(&self, grid: &FrequencyGrid) -> Vec<f64> {
        let n = self.n();
        let a = self.a.map(|x| Complex::new(x, 0.0));
        mirror_half(grid, |k| {
            let z = Complex::from_polar(1.0, grid.theta(k));
            (DMatrix::from_diagonal_element(n, n, z) - &a).determinant().norm_sqr()
        })
    }

    /// `(A_bar, B_bar) = (S^{-1/2} A S^{1/2}, S^{-1/2} B)`, so that
    /// `Gamma_bar(Phi) = S^{-1/2} Gamma(Phi) S^{-1/2}`.
    pub fn normalize(&self, sigma: &DMatrix<f64>) -> Result<Self> {
        ensure_square(sigma, self.n(), "Sigma")?;
        ensure_symmetric(sigma)?;
        let inv_half = spd_power(sigma, -0.5)?;
        let half = spd_power(sigma, 0.5)?;
        Self::new(&inv_half * &self.a * half, &inv_half * &self.b)
    }

    /// The zeroth moment forced by `Gamma(Phi) = I` when `A` is singular:
    /// `v'v / (v'B)^2` for `v' A = 0`. `None` if `A` is invertible.
    pub fn zeroth_moment_constraint(&self) -> Result<Option<f64>> {
        let svd = self.a.clone().svd(true, false);
        let u = svd.u.as_ref().expect("requested U");
        let smax = svd.singular_values.max();
        let null: Vec<DVector<f64>> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= RANK_TOL * smax)
            .map(|(i, _)| u.column(i).into_owned())
            .collect();
        if null.is_empty() {
            return Ok(None);
        }
        let bnorm = self.b.norm();
        let mut values = Vec::with_capacity(null.len());
        for v in &null {
            let vb = v.dot(&self.b);
            if vb.abs() <= 1e-12 * bnorm {
                return Err(Error::InconsistentBank(
                    "left null vector of A is orthogonal to B".into(),
                ));
            }
            values.push(v.dot(v) / (vb * vb));
        }
        let first = values[0];
        if values.iter().any(|v| (v - first).abs() > 1e-9 * first.abs().max(1.0)) {
            return Err(Error::InconsistentBank(format!(
                "null space of A' gives conflicting zeroth moments {values:?}"
            )));
        }
        Ok(Some(first))
    }
}

fn controllability_rank(a: &DMatrix<f64>, b: &DVector<f64>) -> usize {
    let n = a.nrows();
    let mut c = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        c.set_column(j, &col);
        col = a * col;
    }
    let sv = c.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

pub fn build_filter_bank(a: DMatrix<f64>, b: DVector<f64>) -> Result<FilterBank> {
    FilterBank::new(a, b)
}

pub fn covariance_lag_bank(n: usize) -> Result<FilterBank> {
    FilterBank::lag_bank(n)
}

pub fn evaluate_bank(bank: &FilterBank, grid: &FrequencyGrid) -> DMatrix<Complex<f64>> {
    bank.evaluate(grid)
}

pub fn normalize_bank(bank: &FilterBank, sigma: &DMatrix<f64>) -> Result<FilterBank> {
    bank.normalize(sigma)
}

pub fn zeroth_moment_constraint(bank: &FilterBank) -> Result<Option<f64>> {
    bank.zeroth_moment_constraint()
}

/// JSON form of a filter bank: explicit row-major matrices or the
/// `{"lag_bank": n}` shorthand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FilterBankSpec {
    Explicit {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<f64>,
    },
    LagBank {
        lag_bank: usize,
    },
}

impl FilterBankSpec {
    pub fn build(&self) -> Result<FilterBank> {
        match self {
            FilterBankSpec::LagBank { lag_bank } => FilterBank::lag_bank(*lag_bank),
            FilterBankSpec::Explicit { a, b } => {
                FilterBank::new(matrix_from_rows(a)?, DVector::from_column_slice(b))
            }
        }
    }

    pub fn from_bank(bank: &FilterBank) -> Self {
        FilterBankSpec::Explicit {
            a: matrix_to_rows(bank.a()),
            b: bank.b().iter().copied().collect(),
        }
    }
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::two_state_bank;

    #[test]
    fn validation_errors_are_distinct() {
        let id = DMatrix::identity(2, 2);
        assert!(matches!(
            FilterBank::new(id, DVector::from_vec(vec![1.0, 0.0])),
            Err(Error::UnstableBank { .. })
        ));
        let diag = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        assert_eq!(
            FilterBank::new(diag, DVector::from_vec(vec![1.0, 1.0])).unwrap_err(),
            Error::UnreachableBank { rank: 1, n: 2 }
        );
        assert_eq!(
            FilterBank::new(DMatrix::from_element(1, 1, 0.5), DVector::from_element(1, 1.0)).unwrap_err(),
            Error::DimensionTooSmall { n: 1 }
        );
        assert!(matches!(covariance_lag_bank(1), Err(Error::DimensionTooSmall { n: 1 })));
    }

    #[test]
    fn shift_bank_accepted() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let bank = FilterBank::new(a.clone(), DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert_eq!(bank, FilterBank::lag_bank(2).unwrap());
        assert!(two_state_bank().is_ok());
    }

    #[test]
    fn shift_bank_samples() {
        let bank = FilterBank::lag_bank(2).unwrap();
        let grid = FrequencyGrid::new(8).unwrap();
        let g = bank.evaluate(&grid);
        let close = |a: Complex<f64>, b: Complex<f64>| (a - b).norm() < 1e-14;
        assert!(close(g[(0, 0)], Complex::new(1.0, 0.0)));
        assert!(close(g[(1, 0)], Complex::new(1.0, 0.0)));
        assert!(close(g[(0, 4)], Complex::new(-1.0, 0.0)));
        assert!(close(g[(1, 4)], Complex::new(1.0, 0.0)));
        for k in 0..8 {
            let t = grid.theta(k);
            assert!(close(g[(0, k)], Complex::from_polar(1.0, -t)));
            assert!(close(g[(1, k)], Complex::from_polar(1.0, -2.0 * t)));
        }
    }

    #[test]
    fn two_state_resolvent_matches_explicit_inverse() {
        let bank = two_state_bank().unwrap();
        let grid = FrequencyGrid::new(16).unwrap();
        let g = bank.evaluate(&grid);
        let a = bank.a();
        let b = bank.b();
        for k in 0..16 {
            let z = Complex::from_polar(1.0, grid.theta(k));
            // lower-triangular 2x2: (zI - A)^{-1}
            let (d0, d1) = (z - a[(0, 0)], z - a[(1, 1)]);
            let g0 = b[0] / d0;
            let g1 = (b[1] + a[(1, 0)] * g0) / d1;
            assert!((g[(0, k)] - g0).norm() < 1e-13);
            assert!((g[(1, k)] - g1).norm() < 1e-13);
            let m = grid.mirror(k);
            assert!((g[(0, m)] - g[(0, k)].conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn normalization_by_scalar_multiple() {
        let bank = two_state_bank().unwrap();
        let same = bank.normalize(&DMatrix::identity(2, 2)).unwrap();
        assert!((same.a() - bank.a()).norm() < 1e-14);
        assert!((same.b() - bank.b()).norm() < 1e-14);
        let scaled = bank.normalize(&(DMatrix::identity(2, 2) * 4.0)).unwrap();
        assert!((scaled.a() - bank.a()).norm() < 1e-14);
        assert!((scaled.b() - bank.b() / 2.0).norm() < 1e-14);
        assert!(matches!(
            bank.normalize(&(-DMatrix::identity(2, 2))),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn zeroth_moment() {
        let lag = FilterBank::lag_bank(4).unwrap();
        assert!((lag.zeroth_moment_constraint().unwrap().unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(two_state_bank().unwrap().zeroth_moment_constraint().unwrap(), None);
    }

    #[test]
    fn bank_json() {
        let spec: FilterBankSpec = serde_json::from_str(r#"{"lag_bank": 3}"#).unwrap();
        assert_eq!(spec.build().unwrap(), FilterBank::lag_bank(3).unwrap());
        let spec: FilterBankSpec =
            serde_json::from_str(r#"{"A": [[0, 0], [1, 0]], "B": [1, 0]}"#).unwrap();
        assert_eq!(spec.build().unwrap(), FilterBank::lag_bank(2).unwrap());
        let back = FilterBankSpec::from_bank(&spec.build().unwrap());
        assert_eq!(back, spec);
    }
}
