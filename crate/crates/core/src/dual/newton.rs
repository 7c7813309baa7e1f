use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::functional::{evaluate, form_values, margin_of, value_change, Evaluation, DEFAULT_EPS_POS};
use super::Multiplier;
use crate::error::{Error, Result};
use crate::filterbank::GammaOperator;
use crate::spectra::{s_nu, Nu, SpectralDensity, DEFAULT_GRID_SIZE};

/// Relative tolerance for `I in Range Gamma` before the solver starts.
const IDENTITY_RANGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub grid_size: usize,
    /// Stop once the Euclidean norm of the dual gradient drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Admissibility margin kept away from the boundary.
    pub eps_pos: f64,
    /// Smallest step tried before giving up.
    pub min_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            tol: 1e-9,
            max_iter: 200,
            armijo: 1e-4,
            eps_pos: DEFAULT_EPS_POS,
            min_step: 1e-14,
        }
    }
}

/// One Newton iterate: `J` and the gradient norm there, the step length
/// that left it and the resulting change in `J` (both 0 for the final
/// iterate). The change is computed directly, so it is strictly negative
/// even where consecutive values of `J` agree to machine precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub dual_value: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub decrease: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub nu: Nu,
    pub lambda_opt: Multiplier,
    #[serde(skip)]
    pub phi_opt: SpectralDensity,
    pub dual_value: f64,
    /// `S_nu(Phi_opt || Psi)`; by strong duality this is `J(0) - J(Lambda_opt)`.
    pub primal_value: f64,
    /// `||Gamma(Phi_opt) - I||_F`.
    pub constraint_residual: f64,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
}

/// Damped Newton on the dual functional, from `Lambda = 0`.
///
/// The step is halved until the trial point is admissible and satisfies
/// the Armijo condition, so dual values decrease strictly along the trace.
pub fn newton_solve(
    nu: Nu,
    psi: &SpectralDensity,
    op: &GammaOperator,
    config: &SolverConfig,
) -> Result<SolveResult> {
    nu.ensure_solvable()?;
    if psi.grid() != op.grid() {
        return Err(Error::GridMismatch {
            left: psi.grid().size(),
            right: op.grid().size(),
        });
    }
    let n = op.n();
    let id = DMatrix::<f64>::identity(n, n);
    let off_range = (op.project(&id)? - &id).norm();
    if off_range > IDENTITY_RANGE_TOL * (n as f64).sqrt() {
        return Err(Error::Infeasible(format!(
            "identity is off the range of the normalized operator by {off_range:e}"
        )));
    }

    let mut coords = DVector::zeros(op.dim());
    let mut current = evaluate(nu, psi, op, &coords, config.eps_pos).ok_or(Error::Inadmissible {
        margin: margin_of(nu, &form_values(op, &coords)),
    })?;
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let grad_norm = current.gradient.norm();
        if grad_norm < config.tol {
            trace.push(IterationRecord {
                dual_value: current.value,
                grad_norm,
                step: 0.0,
                decrease: 0.0,
            });
            break;
        }
        if iterations >= config.max_iter {
            return Err(Error::MaxIterations { iterations, grad_norm });
        }
        let direction = current
            .hessian
            .clone()
            .cholesky()
            .ok_or(Error::HessianSolve)?
            .solve(&(-&current.gradient));
        let slope = current.gradient.dot(&direction);
        let (step, decrease, next, next_coords) =
            line_search(nu, psi, op, config, &coords, &current, &direction, slope)?;
        trace.push(IterationRecord {
            dual_value: current.value,
            grad_norm,
            step,
            decrease,
        });
        coords = next_coords;
        current = next;
        iterations += 1;
    }

    let lambda_opt = Multiplier::from_coords(op, coords)?;
    let phi_opt = SpectralDensity::new(op.grid().clone(), current.phi)?;
    let constraint_residual = (op.apply(&phi_opt)? - id).norm();
    let primal_value = s_nu(&phi_opt, psi, nu)?;
    Ok(SolveResult {
        nu,
        lambda_opt,
        phi_opt,
        dual_value: current.value,
        primal_value,
        constraint_residual,
        iterations,
        trace,
    })
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    nu: Nu,
    psi: &SpectralDensity,
    op: &GammaOperator,
    config: &SolverConfig,
    coords: &DVector<f64>,
    current: &Evaluation,
    direction: &DVector<f64>,
    slope: f64,
) -> Result<(f64, f64, Evaluation, DVector<f64>)> {
    let direction_form = form_values(op, direction);
    let direction_trace: f64 = direction.iter().zip(op.basis_traces()).map(|(d, t)| d * t).sum();
    let mut step = 1.0;
    while step >= config.min_step {
        let trial = coords + direction * step;
        if let Some(ev) = evaluate(nu, psi, op, &trial, config.eps_pos) {
            let delta: Vec<f64> = direction_form.iter().map(|d| d * step).collect();
            let decrease = value_change(nu, psi, current, &delta, direction_trace * step);
            if decrease <= config.armijo * step * slope {
                return Ok((step, decrease, ev, trial));
            }
        }
        step *= 0.5;
    }
    Err(Error::StepUnderflow {
        margin: current.margin,
        grad_norm: current.gradient.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::FilterBank;
    use crate::spectra::{FrequencyGrid, RationalSpec};

    fn ar1(grid: &FrequencyGrid, pole: f64) -> SpectralDensity {
        RationalSpec::Transfer {
            num: vec![0.0, 1.0],
            den: vec![-pole, 1.0],
        }
        .evaluate(grid)
        .unwrap()
    }

    fn lag_op(n: usize, size: usize) -> GammaOperator {
        GammaOperator::new(FilterBank::lag_bank(n).unwrap(), FrequencyGrid::new(size).unwrap()).unwrap()
    }

    #[test]
    fn white_prior_is_already_optimal() {
        let op = lag_op(3, 128);
        let psi = SpectralDensity::constant(op.grid(), 1.0).unwrap();
        for nu in [Nu::Finite(1), Nu::Finite(3), Nu::Infinite] {
            let res = newton_solve(nu, &psi, &op, &SolverConfig::default()).unwrap();
            assert_eq!(res.iterations, 0);
            assert!(res.lambda_opt.coords().norm() < 1e-14);
        }
    }

    #[test]
    fn matches_constraint_and_strong_duality() {
        let op = lag_op(3, 512);
        let psi = ar1(op.grid(), 0.6);
        for nu in [Nu::Finite(1), Nu::Finite(2), Nu::Finite(5), Nu::Infinite] {
            let res = newton_solve(nu, &psi, &op, &SolverConfig::default()).unwrap();
            assert!(res.constraint_residual < 1e-8, "{nu}: {}", res.constraint_residual);
            let j0 = res.trace[0].dual_value;
            assert!((j0 - res.dual_value - res.primal_value).abs() < 1e-8, "{nu}");
            for w in res.trace.windows(2) {
                assert!(w[1].dual_value <= w[0].dual_value + 4.0 * f64::EPSILON * w[0].dual_value.abs());
                assert!(w[0].decrease < 0.0);
                let direct = w[1].dual_value - w[0].dual_value;
                assert!((direct - w[0].decrease).abs() < 1e-12 * w[0].dual_value.abs().max(1.0));
            }
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let op = lag_op(3, 256);
        let psi = ar1(op.grid(), 0.9);
        let config = SolverConfig {
            max_iter: 1,
            ..SolverConfig::default()
        };
        assert!(matches!(
            newton_solve(Nu::Finite(1), &psi, &op, &config),
            Err(Error::MaxIterations { iterations: 1, .. })
        ));
    }

    #[test]
    fn rejects_nu_below_one() {
        let op = lag_op(2, 64);
        let psi = SpectralDensity::constant(op.grid(), 1.0).unwrap();
        assert!(matches!(
            newton_solve(Nu::Finite(-1), &psi, &op, &SolverConfig::default()),
            Err(Error::InvalidNu(_))
        ));
    }
}
