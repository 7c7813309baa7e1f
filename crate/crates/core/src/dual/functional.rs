use nalgebra::{DMatrix, DVector};

use super::Multiplier;
use crate::error::{Error, Result};
use crate::filterbank::GammaOperator;
use crate::spectra::{quadrature, Nu, SpectralDensity};

pub const DEFAULT_EPS_POS: f64 = 1e-12;

/// Result of the admissibility test
/// `min_theta 1 + G^* Lambda G / nu > eps_pos`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// The minimum of `1 + G^* Lambda G / nu` over the grid (`inf` for
    /// `nu = inf`, where every multiplier in the range is admissible).
    pub margin: f64,
}

/// Everything the solver needs at one multiplier, from a single pass over
/// the grid.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    /// `G^* Lambda G` on the grid.
    pub form: Vec<f64>,
    pub phi: Vec<f64>,
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    pub margin: f64,
}

fn ipow(x: f64, p: i64) -> f64 {
    if let Ok(p) = i32::try_from(p) {
        x.powi(p)
    } else {
        x.powf(p as f64)
    }
}

/// `G^* Lambda G` at every node, from the precomputed basis forms.
pub(crate) fn form_values(op: &GammaOperator, coords: &DVector<f64>) -> Vec<f64> {
    let mut g = vec![0.0; op.grid().size()];
    for (c, form) in coords.iter().zip(op.basis_forms()) {
        for (gk, f) in g.iter_mut().zip(form) {
            *gk += c * f;
        }
    }
    g
}

pub(crate) fn margin_of(nu: Nu, g: &[f64]) -> f64 {
    match nu {
        Nu::Infinite => f64::INFINITY,
        Nu::Finite(v) => {
            let v = v as f64;
            g.iter().map(|x| 1.0 + x / v).fold(f64::INFINITY, f64::min)
        }
    }
}

/// Optimal primal form at the given `G^* Lambda G` samples.
fn primal(nu: Nu, psi: &[f64], g: &[f64]) -> Vec<f64> {
    match nu {
        Nu::Infinite => psi.iter().zip(g).map(|(p, x)| p * (-x).exp()).collect(),
        Nu::Finite(v) => {
            let vf = v as f64;
            psi.iter()
                .zip(g)
                .map(|(p, x)| p / ipow(1.0 + x / vf, v))
                .collect()
        }
    }
}

fn check_inputs(nu: Nu, psi: &SpectralDensity, op: &GammaOperator, lambda: &Multiplier) -> Result<()> {
    nu.ensure_solvable()?;
    if psi.grid() != op.grid() {
        return Err(Error::GridMismatch {
            left: psi.grid().size(),
            right: op.grid().size(),
        });
    }
    if lambda.coords().len() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "multiplier has {} coordinates, range has dimension {}",
            lambda.coords().len(),
            op.dim()
        )));
    }
    Ok(())
}

/// Evaluates value, gradient and Hessian, or `None` when the multiplier
/// is outside the admissible set.
pub(crate) fn evaluate(
    nu: Nu,
    psi: &SpectralDensity,
    op: &GammaOperator,
    coords: &DVector<f64>,
    eps_pos: f64,
) -> Option<Evaluation> {
    let g = form_values(op, coords);
    let margin = margin_of(nu, &g);
    if margin <= eps_pos {
        return None;
    }
    let psi = psi.values();
    let phi = primal(nu, psi, &g);
    let trace: f64 = coords.iter().zip(op.basis_traces()).map(|(c, t)| c * t).sum();
    let integrand: Vec<f64> = match nu {
        Nu::Finite(1) => psi.iter().zip(&g).map(|(p, x)| -p * x.ln_1p()).collect(),
        Nu::Finite(v) => {
            let vf = v as f64;
            // Psi r^{1-nu} = Phi r
            phi.iter()
                .zip(&g)
                .map(|(f, x)| vf / (vf - 1.0) * f * (1.0 + x / vf))
                .collect()
        }
        Nu::Infinite => phi.clone(),
    };
    let value = quadrature(&integrand) + trace;

    // Hessian weight: Psi r^{-nu-1} = Phi / r, or Phi for nu = inf
    let weight: Vec<f64> = match nu {
        Nu::Finite(v) => {
            let vf = v as f64;
            phi.iter().zip(&g).map(|(f, x)| f / (1.0 + x / vf)).collect()
        }
        Nu::Infinite => phi.clone(),
    };
    let forms = op.basis_forms();
    let d = forms.len();
    let size = phi.len() as f64;
    let gradient = DVector::from_iterator(
        d,
        forms
            .iter()
            .zip(op.basis_traces())
            .map(|(q, t)| t - q.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>() / size),
    );
    let mut hessian = DMatrix::zeros(d, d);
    for i in 0..d {
        let wq: Vec<f64> = forms[i].iter().zip(&weight).map(|(a, b)| a * b).collect();
        for j in 0..=i {
            let h = wq.iter().zip(&forms[j]).map(|(a, b)| a * b).sum::<f64>() / size;
            hessian[(i, j)] = h;
            hessian[(j, i)] = h;
        }
    }
    Some(Evaluation {
        form: g,
        phi,
        value,
        gradient,
        hessian,
        margin,
    })
}

/// `J(Lambda + Delta) - J(Lambda)`, where `Delta` changes `G^* Lambda G`
/// by `delta_form` and the trace by `delta_trace`.
///
/// Computed node by node from the increment, so it stays accurate when
/// the change is far below the rounding of `J` itself.
pub(crate) fn value_change(nu: Nu, psi: &SpectralDensity, at: &Evaluation, delta_form: &[f64], delta_trace: f64) -> f64 {
    let change: Vec<f64> = match nu {
        Nu::Finite(1) => psi
            .values()
            .iter()
            .zip(&at.form)
            .zip(delta_form)
            .map(|((p, g), dg)| -p * (dg / (1.0 + g)).ln_1p())
            .collect(),
        Nu::Finite(v) => {
            let vf = v as f64;
            at.phi
                .iter()
                .zip(&at.form)
                .zip(delta_form)
                .map(|((f, g), dg)| {
                    let r = 1.0 + g / vf;
                    let rel = dg / (vf * r);
                    vf / (vf - 1.0) * f * r * ((1.0 - vf) * rel.ln_1p()).exp_m1()
                })
                .collect()
        }
        Nu::Infinite => at
            .phi
            .iter()
            .zip(delta_form)
            .map(|(f, dg)| f * (-dg).exp_m1())
            .collect(),
    };
    quadrature(&change) + delta_trace
}

fn evaluate_checked(
    nu: Nu,
    lambda: &Multiplier,
    psi: &SpectralDensity,
    op: &GammaOperator,
) -> Result<Evaluation> {
    check_inputs(nu, psi, op, lambda)?;
    evaluate(nu, psi, op, lambda.coords(), DEFAULT_EPS_POS).ok_or_else(|| Error::Inadmissible {
        margin: margin_of(nu, &form_values(op, lambda.coords())),
    })
}

/// `Psi / (1 + G^* Lambda G / nu)^nu` for finite `nu`, `Psi exp(-G^* Lambda G)`
/// for `nu = inf`.
pub fn phi_from_multiplier(
    nu: Nu,
    lambda: &Multiplier,
    psi: &SpectralDensity,
    op: &GammaOperator,
) -> Result<SpectralDensity> {
    check_inputs(nu, psi, op, lambda)?;
    let g = form_values(op, lambda.coords());
    let margin = margin_of(nu, &g);
    if margin <= DEFAULT_EPS_POS {
        return Err(Error::Inadmissible { margin });
    }
    SpectralDensity::new(op.grid().clone(), primal(nu, psi.values(), &g))
}

pub fn admissible(nu: Nu, lambda: &Multiplier, op: &GammaOperator) -> Admissibility {
    admissible_with(nu, lambda, op, DEFAULT_EPS_POS)
}

pub fn admissible_with(nu: Nu, lambda: &Multiplier, op: &GammaOperator, eps_pos: f64) -> Admissibility {
    let margin = margin_of(nu, &form_values(op, lambda.coords()));
    Admissibility {
        admissible: margin > eps_pos,
        margin,
    }
}

/// The dual functional `J(Lambda)`.
pub fn dual_value(nu: Nu, lambda: &Multiplier, psi: &SpectralDensity, op: &GammaOperator) -> Result<f64> {
    Ok(evaluate_checked(nu, lambda, psi, op)?.value)
}

/// Gradient of `J` in basis coordinates: `<I - Gamma(Phi(Lambda)), Lambda_i>`.
pub fn dual_gradient(
    nu: Nu,
    lambda: &Multiplier,
    psi: &SpectralDensity,
    op: &GammaOperator,
) -> Result<DVector<f64>> {
    Ok(evaluate_checked(nu, lambda, psi, op)?.gradient)
}

/// Hessian of `J` in basis coordinates.
pub fn dual_hessian(
    nu: Nu,
    lambda: &Multiplier,
    psi: &SpectralDensity,
    op: &GammaOperator,
) -> Result<DMatrix<f64>> {
    Ok(evaluate_checked(nu, lambda, psi, op)?.hessian)
}
