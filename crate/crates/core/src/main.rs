use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use alphaspec::dual::SolveResult;
use alphaspec::filterbank::{FeasibilityReport, FilterBankSpec, GammaOperator, DEFAULT_FEASIBILITY_TOL};
use alphaspec::problem::{distances_to_infinite, resolve_sigma, Problem, SigmaSpec, SolveRequest, SolveResponse};
use alphaspec::reproduce::{reproduce, ReproduceConfig};
use alphaspec::spectra::{divergence, DivergenceSpec, FrequencyGrid, Nu, RationalSpec, SpectralDensity};
use alphaspec::Error;

const EXIT_INFEASIBLE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 5;
const EXIT_USAGE: u8 = 64;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(name = "alphaspec", version, about = "Spectral approximation under filter-bank covariance constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that Sigma lies in Range Gamma and is positive definite.
    Feasibility(CommonArgs),
    /// Solve for each requested nu; writes theta,phi,psi CSVs and JSON.
    Solve(CommonArgs),
    /// Solve a list of nu (including inf) and report distances to nu = inf.
    Sweep(CommonArgs),
    /// Evaluate divergences between two spectra.
    Divergence(CommonArgs),
    /// Run the built-in regression instances and check their tolerances.
    ReproducePaper {
        #[command(flatten)]
        common: CommonArgs,
        /// Absolute tolerance of the ARMA covariance table comparison.
        #[arg(long)]
        sigma_tol: Option<f64>,
        /// Length of the simulated path for the Monte-Carlo estimate.
        #[arg(long)]
        samples: Option<usize>,
    },
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Number of grid nodes on the unit circle.
    #[arg(long)]
    grid: Option<usize>,
    /// Gradient-norm tolerance of the solver.
    #[arg(long)]
    tol: Option<f64>,
    /// Order nu: a positive integer or "inf". Repeatable.
    #[arg(long = "nu")]
    nu: Vec<Nu>,
    /// Seed for simulated data.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Infeasible(String),
    Solver(String),
    Check(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::Check(_) => EXIT_CHECK,
            Failure::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Infeasible(m) | Failure::Solver(m) | Failure::Check(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Infeasible(_) => Failure::Infeasible(msg),
            Error::MaxIterations { .. } | Error::StepUnderflow { .. } | Error::HessianSolve | Error::Inadmissible { .. } => {
                Failure::Solver(msg)
            }
            _ => Failure::Usage(msg),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Feasibility(args) => cmd_feasibility(&args),
        Command::Solve(args) => cmd_solve(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Divergence(args) => cmd_divergence(&args),
        Command::ReproducePaper {
            common,
            sigma_tol,
            samples,
        } => cmd_reproduce(&common, sigma_tol, samples),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("alphaspec: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn read_config<T: for<'de> Deserialize<'de>>(path: Option<&Path>) -> CliResult<T> {
    let path = path.ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file so readers never see a partial output.
fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let io = |e: std::io::Error| Failure::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(text)
}

fn csv(header: &[&str], columns: &[&[f64]]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        for (j, col) in columns.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", col[i]);
        }
        out.push('\n');
    }
    out
}

fn spectrum_csv(result: &SolveResult, psi: &SpectralDensity) -> String {
    csv(
        &["theta", "phi", "psi"],
        &[psi.grid().nodes(), result.phi_opt.values(), psi.values()],
    )
}

fn file_tag(nu: Nu) -> String {
    format!("nu_{nu}")
}

fn load_request(args: &CommonArgs) -> CliResult<SolveRequest> {
    let mut req: SolveRequest = read_config(args.config.as_deref())?;
    if args.grid.is_some() {
        req.grid = args.grid;
    }
    if args.tol.is_some() {
        req.tol = args.tol;
    }
    if args.max_iter.is_some() {
        req.max_iter = args.max_iter;
    }
    if !args.nu.is_empty() {
        req.nu = Some(alphaspec::problem::NuList::Many(args.nu.clone()));
    }
    if let (Some(seed), Some(SigmaSpec::Simulated { seed: s, .. })) = (args.seed, req.sigma.as_mut()) {
        *s = seed;
    }
    Ok(req)
}

fn requested_nus(req: &SolveRequest) -> CliResult<Vec<Nu>> {
    let nus = req.nus();
    if nus.is_empty() {
        return Err(Failure::Usage("the nu list is empty".into()));
    }
    for nu in &nus {
        nu.ensure_solvable()?;
    }
    Ok(nus)
}

#[derive(Deserialize)]
struct FeasibilityRequest {
    filterbank: FilterBankSpec,
    #[serde(default)]
    sigma: Option<SigmaSpec>,
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default)]
    feasibility_tol: Option<f64>,
}

fn cmd_feasibility(args: &CommonArgs) -> CliResult<()> {
    let req: FeasibilityRequest = read_config(args.config.as_deref())?;
    let mut sigma_spec = req.sigma;
    if let (Some(seed), Some(SigmaSpec::Simulated { seed: s, .. })) = (args.seed, sigma_spec.as_mut()) {
        *s = seed;
    }
    let grid = FrequencyGrid::new(args.grid.or(req.grid).unwrap_or(alphaspec::spectra::DEFAULT_GRID_SIZE))?;
    let op = GammaOperator::new(req.filterbank.build()?, grid)?;
    let sigma = resolve_sigma(sigma_spec.as_ref(), &op)?;
    let report: FeasibilityReport =
        op.feasibility_with_tol(&sigma, req.feasibility_tol.unwrap_or(DEFAULT_FEASIBILITY_TOL))?;
    let text = write_json(&args.out.join("feasibility.json"), &report)?;
    print!("{text}");
    if report.feasible() {
        Ok(())
    } else {
        Err(Failure::Infeasible(format!(
            "Sigma is not feasible (in range: {}, positive definite: {})",
            report.in_range, report.positive_definite
        )))
    }
}

fn cmd_solve(args: &CommonArgs) -> CliResult<()> {
    let req = load_request(args)?;
    let nus = requested_nus(&req)?;
    let problem = Problem::from_request(&req)?;
    for nu in nus {
        let result = problem.solve(nu)?;
        let tag = file_tag(nu);
        write_atomic(
            &args.out.join(format!("solution_{tag}.csv")),
            spectrum_csv(&result, &problem.psi).as_bytes(),
        )?;
        write_json(
            &args.out.join(format!("solution_{tag}.json")),
            &SolveResponse::new(&result, &problem.psi),
        )?;
        println!(
            "nu = {nu}: converged in {} iterations, dual value {:.16e}, residual {:.3e}",
            result.iterations, result.dual_value, result.constraint_residual
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepEntry {
    nu: Nu,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constraint_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_value: Option<f64>,
}

#[derive(Serialize)]
struct SweepSummary {
    results: Vec<SweepEntry>,
    /// `sup |Phi_nu - Phi_inf|`, absent if the `nu = inf` solve failed.
    distances_to_inf: Option<BTreeMap<String, f64>>,
}

fn cmd_sweep(args: &CommonArgs) -> CliResult<()> {
    let req = load_request(args)?;
    let nus = requested_nus(&req)?;
    if !nus.iter().any(|nu| nu.is_infinite()) {
        return Err(Failure::Usage("a sweep needs nu = inf in its list".into()));
    }
    let problem = Problem::from_request(&req)?;
    let mut solved = Vec::new();
    let mut entries = Vec::new();
    let mut worst: Option<Failure> = None;
    for (nu, outcome) in problem.sweep(&nus) {
        match outcome {
            Ok(result) => {
                write_atomic(
                    &args.out.join(format!("sweep_{}.csv", file_tag(nu))),
                    spectrum_csv(&result, &problem.psi).as_bytes(),
                )?;
                entries.push(SweepEntry {
                    nu,
                    converged: true,
                    error: None,
                    iterations: Some(result.iterations),
                    constraint_residual: Some(result.constraint_residual),
                    dual_value: Some(result.dual_value),
                });
                solved.push((nu, result));
            }
            Err(e) => {
                let failure = Failure::from(e);
                entries.push(SweepEntry {
                    nu,
                    converged: false,
                    error: Some(failure.message().to_string()),
                    iterations: None,
                    constraint_residual: None,
                    dual_value: None,
                });
                if worst.as_ref().is_none_or(|w| failure.code() > w.code()) {
                    worst = Some(Failure::Solver(format!("nu = {nu}: {}", failure.message())));
                }
            }
        }
    }
    let summary = SweepSummary {
        results: entries,
        distances_to_inf: distances_to_infinite(&solved),
    };
    let text = write_json(&args.out.join("sweep_summary.json"), &summary)?;
    print!("{text}");
    worst.map_or(Ok(()), Err)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DivergenceRequest {
    #[serde(default)]
    #[allow(dead_code)]
    comment: Option<String>,
    phi: RationalSpec,
    psi: RationalSpec,
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default = "default_divergences")]
    divergences: Vec<DivergenceSpec>,
}

fn default_divergences() -> Vec<DivergenceSpec> {
    vec![
        DivergenceSpec::Kl,
        DivergenceSpec::Kl0,
        DivergenceSpec::Hellinger,
        DivergenceSpec::Pearson,
    ]
}

#[derive(Serialize)]
struct DivergenceRow {
    label: String,
    spec: DivergenceSpec,
    value: f64,
}

/// `D_beta(Phi, Psi)` against `beta^-2 D_{1/beta}(Phi^beta, Psi^beta)`.
#[derive(Serialize)]
struct IdentityRow {
    label: String,
    beta: f64,
    beta_value: f64,
    transformed_alpha_value: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct DivergenceTable {
    grid: usize,
    rows: Vec<DivergenceRow>,
    identities: Vec<IdentityRow>,
}

fn cmd_divergence(args: &CommonArgs) -> CliResult<()> {
    let req: DivergenceRequest = read_config(args.config.as_deref())?;
    if req.divergences.is_empty() {
        return Err(Failure::Usage("no divergences requested".into()));
    }
    let grid = FrequencyGrid::new(args.grid.or(req.grid).unwrap_or(alphaspec::spectra::DEFAULT_GRID_SIZE))?;
    let phi = req.phi.evaluate(&grid)?;
    let psi = req.psi.evaluate(&grid)?;
    let mut rows = Vec::new();
    for spec in &req.divergences {
        rows.push(DivergenceRow {
            label: spec.label(),
            spec: *spec,
            value: divergence(&phi, &psi, *spec)?,
        });
    }
    let mut identities = Vec::new();
    for row in &rows {
        let DivergenceSpec::Beta(beta) = row.spec else {
            continue;
        };
        let paired = rows
            .iter()
            .any(|r| matches!(r.spec, DivergenceSpec::Alpha(a) if (a - 1.0 / beta).abs() <= 1e-12 * a.abs()));
        if !paired {
            continue;
        }
        let transformed = divergence(&phi.powf(beta)?, &psi.powf(beta)?, DivergenceSpec::Alpha(1.0 / beta))? / (beta * beta);
        let scale = row.value.abs().max(f64::MIN_POSITIVE);
        identities.push(IdentityRow {
            label: format!("beta({beta}) vs alpha({})", 1.0 / beta),
            beta,
            beta_value: row.value,
            transformed_alpha_value: transformed,
            relative_error: (row.value - transformed).abs() / scale,
        });
    }
    let table = DivergenceTable {
        grid: grid.size(),
        rows,
        identities,
    };
    let text = write_json(&args.out.join("divergence.json"), &table)?;
    print!("{text}");
    Ok(())
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct ReproduceFile {
    grid: Option<usize>,
    tol: Option<f64>,
    sigma_tol: Option<f64>,
    seed: Option<u64>,
    samples: Option<usize>,
}

fn cmd_reproduce(args: &CommonArgs, sigma_tol: Option<f64>, samples: Option<usize>) -> CliResult<()> {
    let file: ReproduceFile = match &args.config {
        Some(path) => read_config(Some(path))?,
        None => ReproduceFile::default(),
    };
    let defaults = ReproduceConfig::default();
    let config = ReproduceConfig {
        grid_size: args.grid.or(file.grid).unwrap_or(defaults.grid_size),
        tol: args.tol.or(file.tol).unwrap_or(defaults.tol),
        sigma_tol: sigma_tol.or(file.sigma_tol).unwrap_or(defaults.sigma_tol),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        samples: samples.or(file.samples).unwrap_or(defaults.samples),
    };
    let artifacts = reproduce(&config)?;
    let out = &args.out;
    write_atomic(
        &out.join("two_state_kl0.csv"),
        csv(
            &["theta", "phi_kl0", "reference"],
            &[
                artifacts.kl0.grid().nodes(),
                artifacts.kl0.values(),
                artifacts.kl0_reference.values(),
            ],
        )
        .as_bytes(),
    )?;
    for (nu, result) in &artifacts.sweep {
        write_atomic(
            &out.join(format!("arma_{}.csv", file_tag(*nu))),
            spectrum_csv(result, &artifacts.arma_psi).as_bytes(),
        )?;
    }
    write_json(&out.join("summary.json"), &artifacts.report)?;
    for check in &artifacts.report.checks {
        println!(
            "{} {}: {:.3e} (tolerance {:.3e})",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.tolerance
        );
    }
    let failed = artifacts.report.failed();
    if failed.is_empty() {
        Ok(())
    } else {
        let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
        Err(Failure::Check(format!("failing checks: {}", names.join(", "))))
    }
}
