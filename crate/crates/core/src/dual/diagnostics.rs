use super::functional::{form_values, margin_of};
use super::Multiplier;
use crate::error::{Error, Result};
use crate::filterbank::GammaOperator;
use crate::spectra::{trig_coefficients, Nu, SpectralDensity};

const KERNEL_FLOOR: f64 = 1e-12;

/// The closed-form minimizer of `KL(Phi || 1)` under `Gamma(Phi) = I`:
/// `Phi = B'B / |B' G|^2`.
pub fn kl0_closed_form(op: &GammaOperator) -> Result<SpectralDensity> {
    let b = op.bank().b();
    let bb = b.norm_squared();
    let samples = op.samples();
    let grid = op.grid();
    let mut values = Vec::with_capacity(grid.size());
    for k in 0..grid.size() {
        let col = samples.column(k);
        let kernel = col
            .iter()
            .zip(b.iter())
            .map(|(g, bi)| g * *bi)
            .sum::<nalgebra::Complex<f64>>()
            .norm();
        if kernel < KERNEL_FLOOR {
            return Err(Error::KernelBlowup { theta: grid.theta(k) });
        }
        values.push(bb / (kernel * kernel));
    }
    SpectralDensity::new(grid.clone(), values)
}

/// `sup_theta |Psi (1 + G^* Lambda G / nu)^{-nu} - Psi exp(-G^* Lambda G)|`
/// for a fixed multiplier and finite `nu`.
pub fn uniform_convergence_gap(lambda: &Multiplier, psi: &SpectralDensity, op: &GammaOperator, nu: Nu) -> Result<f64> {
    let Nu::Finite(v) = nu.ensure_solvable()? else {
        return Err(Error::InvalidNu("the gap needs a finite nu".into()));
    };
    if psi.grid() != op.grid() {
        return Err(Error::GridMismatch {
            left: psi.grid().size(),
            right: op.grid().size(),
        });
    }
    let g = form_values(op, lambda.coords());
    let margin = margin_of(nu, &g);
    if margin <= 0.0 {
        return Err(Error::Inadmissible { margin });
    }
    let vf = v as f64;
    Ok(psi
        .values()
        .iter()
        .zip(&g)
        .map(|(p, x)| (p * (1.0 + x / vf).powf(-vf) - p * (-x).exp()).abs())
        .fold(0.0, f64::max))
}

/// Largest trigonometric coefficient of index above `n` in
/// `(1 + G^* Lambda G / nu) |det(e^{j theta} I - A)|^2`.
///
/// The product is a pseudo-polynomial of degree at most `n`, so the
/// result is zero up to rounding for any multiplier.
pub fn degree_certificate(nu: Nu, lambda: &Multiplier, op: &GammaOperator) -> Result<f64> {
    let Nu::Finite(v) = nu.ensure_solvable()? else {
        return Err(Error::InvalidNu("the certificate needs a finite nu".into()));
    };
    let vf = v as f64;
    let grid = op.grid();
    let det = op.bank().characteristic_modulus_sq(grid);
    let values: Vec<f64> = form_values(op, lambda.coords())
        .iter()
        .zip(&det)
        .map(|(x, d)| (1.0 + x / vf) * d)
        .collect();
    let coeffs = trig_coefficients(grid, &values, grid.size() / 2 - 1)?;
    Ok(coeffs
        .iter()
        .skip(op.n() + 1)
        .map(|c| c.abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::FilterBank;
    use crate::instances::{two_state_bank, two_state_kl0_reference};
    use crate::spectra::FrequencyGrid;
    use nalgebra::DVector;

    #[test]
    fn kl0_matches_reference_pseudo_polynomial() {
        let grid = FrequencyGrid::new(512).unwrap();
        let op = GammaOperator::new(two_state_bank().unwrap(), grid.clone()).unwrap();
        let phi = kl0_closed_form(&op).unwrap();
        let reference = two_state_kl0_reference().evaluate(&grid).unwrap();
        assert!(phi.sup_distance(&reference).unwrap() < 1e-10);
        let gamma = op.apply(&phi).unwrap();
        assert!((gamma - nalgebra::DMatrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn certificate_vanishes_for_two_state_bank() {
        let op = GammaOperator::new(two_state_bank().unwrap(), FrequencyGrid::new(256).unwrap()).unwrap();
        let lambda = Multiplier::from_coords(&op, DVector::from_vec(vec![0.7, -0.3])).unwrap();
        for nu in [Nu::Finite(1), Nu::Finite(4)] {
            assert!(degree_certificate(nu, &lambda, &op).unwrap() < 1e-10);
        }
        assert!(degree_certificate(Nu::Infinite, &lambda, &op).is_err());
    }

    #[test]
    fn gap_shrinks_with_nu() {
        let op = GammaOperator::new(FilterBank::lag_bank(2).unwrap(), FrequencyGrid::new(128).unwrap()).unwrap();
        let psi = SpectralDensity::constant(op.grid(), 1.0).unwrap();
        let lambda = Multiplier::from_coords(&op, DVector::from_vec(vec![0.2, 0.1])).unwrap();
        let gaps: Vec<f64> = [1, 2, 4, 8]
            .iter()
            .map(|&v| uniform_convergence_gap(&lambda, &psi, &op, Nu::Finite(v)).unwrap())
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] < w[0]);
        }
        let doubling: Vec<f64> = [8, 16, 32, 64]
            .iter()
            .map(|&v| uniform_convergence_gap(&lambda, &psi, &op, Nu::Finite(v)).unwrap())
            .collect();
        for w in doubling.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.4..=0.6).contains(&ratio), "{ratio}");
        }
    }
}
