//! JSON requests and responses, and the pipeline from a request to a
//! normalized operator ready for the solver.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dual::{newton_solve, IterationRecord, SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::estimation::{estimate_sigma, simulate_arma, ArmaModel, DEFAULT_BURN_IN};
use crate::filterbank::{
    matrix_from_rows, matrix_to_rows, FeasibilityReport, FilterBank, FilterBankSpec, GammaOperator,
    DEFAULT_FEASIBILITY_TOL,
};
use crate::linalg::symmetric_part;
use crate::spectra::{FrequencyGrid, Nu, RationalSpec, SpectralDensity};

/// One `nu` or a list of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NuList {
    One(Nu),
    Many(Vec<Nu>),
}

impl NuList {
    pub fn to_vec(&self) -> Vec<Nu> {
        match self {
            NuList::One(nu) => vec![*nu],
            NuList::Many(v) => v.clone(),
        }
    }
}

/// Where the covariance target comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    /// A row-major matrix.
    Matrix(Vec<Vec<f64>>),
    /// `"identity"`.
    Named(String),
    /// `Gamma(Omega)` by quadrature for a rational spectrum `Omega`.
    Spectrum { spectrum: RationalSpec },
    /// Sample estimate from a simulated ARMA path.
    Simulated {
        arma: ArmaModel,
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
}

/// A solve request as read from JSON. Missing solver settings fall back to
/// [`SolverConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<NuList>,
    pub prior: RationalSpec,
    pub filterbank: FilterBankSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<SigmaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility_tol: Option<f64>,
}

impl SolveRequest {
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut config = SolverConfig::default();
        if let Some(g) = self.grid {
            config.grid_size = g;
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::DimensionMismatch(format!("tolerance {t} must lie in (0, 1)")));
            }
            config.tol = t;
        }
        if let Some(m) = self.max_iter {
            config.max_iter = m;
        }
        Ok(config)
    }

    pub fn nus(&self) -> Vec<Nu> {
        self.nu.as_ref().map(NuList::to_vec).unwrap_or_else(|| vec![Nu::Finite(1)])
    }
}

/// A fully resolved instance: prior, bank, target and the normalized
/// operator `Gamma_bar` with `Gamma_bar(Phi) = I` as constraint.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: FrequencyGrid,
    pub psi: SpectralDensity,
    pub sigma: DMatrix<f64>,
    pub operator: GammaOperator,
    pub normalized: GammaOperator,
    pub report: FeasibilityReport,
    pub config: SolverConfig,
}

pub fn resolve_sigma(spec: Option<&SigmaSpec>, op: &GammaOperator) -> Result<DMatrix<f64>> {
    let n = op.n();
    match spec {
        None => Ok(DMatrix::identity(n, n)),
        Some(SigmaSpec::Named(name)) if name == "identity" => Ok(DMatrix::identity(n, n)),
        Some(SigmaSpec::Named(name)) => Err(Error::DimensionMismatch(format!("unknown sigma '{name}'"))),
        Some(SigmaSpec::Matrix(rows)) => matrix_from_rows(rows),
        Some(SigmaSpec::Spectrum { spectrum }) => op.apply(&spectrum.evaluate(op.grid())?),
        Some(SigmaSpec::Simulated { arma, samples, seed }) => {
            let series = simulate_arma(arma, *samples, *seed, DEFAULT_BURN_IN)?;
            Ok(estimate_sigma(op, &series.values)?.conditioned)
        }
    }
}

impl Problem {
    /// Checks feasibility of `sigma` and normalizes the bank. An
    /// infeasible target is an [`Error::Infeasible`] carrying the report.
    pub fn new(
        bank: FilterBank,
        sigma: DMatrix<f64>,
        prior: &RationalSpec,
        config: SolverConfig,
        feasibility_tol: f64,
    ) -> Result<Self> {
        let grid = FrequencyGrid::new(config.grid_size)?;
        let operator = GammaOperator::new(bank, grid.clone())?;
        Self::with_operator(operator, sigma, prior, config, feasibility_tol)
    }

    pub fn with_operator(
        operator: GammaOperator,
        sigma: DMatrix<f64>,
        prior: &RationalSpec,
        config: SolverConfig,
        feasibility_tol: f64,
    ) -> Result<Self> {
        let grid = operator.grid().clone();
        let psi = prior.evaluate(&grid)?;
        let report = operator.feasibility_with_tol(&sigma, feasibility_tol)?;
        if !report.feasible() {
            return Err(Error::Infeasible(format!(
                "range residual {:e} (tolerance {:e}), min eigenvalue {:e}",
                report.range_residual, report.tolerance, report.min_eigenvalue
            )));
        }
        // feasible up to tolerance; solve against the exact projection
        let sigma = operator.project(&symmetric_part(&sigma))?;
        let normalized = GammaOperator::new(operator.bank().normalize(&sigma)?, grid.clone())?;
        Ok(Self {
            grid,
            psi,
            sigma,
            operator,
            normalized,
            report,
            config,
        })
    }

    pub fn from_request(req: &SolveRequest) -> Result<Self> {
        let config = req.solver_config()?;
        let grid = FrequencyGrid::new(config.grid_size)?;
        let operator = GammaOperator::new(req.filterbank.build()?, grid)?;
        let sigma = resolve_sigma(req.sigma.as_ref(), &operator)?;
        Self::with_operator(
            operator,
            sigma,
            &req.prior,
            config,
            req.feasibility_tol.unwrap_or(DEFAULT_FEASIBILITY_TOL),
        )
    }

    pub fn solve(&self, nu: Nu) -> Result<SolveResult> {
        newton_solve(nu, &self.psi, &self.normalized, &self.config)
    }

    /// Solves every `nu` concurrently; results come back in input order.
    pub fn sweep(&self, nus: &[Nu]) -> Vec<(Nu, Result<SolveResult>)> {
        std::thread::scope(|s| {
            let handles: Vec<_> = nus.iter().map(|&nu| (nu, s.spawn(move || self.solve(nu)))).collect();
            handles
                .into_iter()
                .map(|(nu, h)| (nu, h.join().expect("solver thread panicked")))
                .collect()
        })
    }
}

/// [`SolveResult`] with the spectra inlined as plot-ready arrays.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResponse {
    pub nu: Nu,
    pub dual_value: f64,
    pub primal_value: f64,
    pub constraint_residual: f64,
    pub iterations: usize,
    /// Optimal multiplier of the normalized problem.
    pub lambda_opt: Vec<Vec<f64>>,
    pub trace: Vec<IterationRecord>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
}

impl SolveResponse {
    pub fn new(result: &SolveResult, psi: &SpectralDensity) -> Self {
        Self {
            nu: result.nu,
            dual_value: result.dual_value,
            primal_value: result.primal_value,
            constraint_residual: result.constraint_residual,
            iterations: result.iterations,
            lambda_opt: matrix_to_rows(result.lambda_opt.matrix()),
            trace: result.trace.clone(),
            theta: psi.grid().nodes().to_vec(),
            phi: result.phi_opt.values().to_vec(),
            psi: psi.values().to_vec(),
        }
    }
}

/// `sup |Phi_nu - Phi_inf|` for each solved `nu`; `None` if the
/// `nu = inf` solve is missing.
pub fn distances_to_infinite(results: &[(Nu, SolveResult)]) -> Option<BTreeMap<String, f64>> {
    let inf = results.iter().find(|(nu, _)| nu.is_infinite())?;
    Some(
        results
            .iter()
            .map(|(nu, r)| {
                let d = r
                    .phi_opt
                    .sup_distance(&inf.1.phi_opt)
                    .expect("sweep results share a grid");
                (nu.to_string(), d)
            })
            .collect(),
    )
}
