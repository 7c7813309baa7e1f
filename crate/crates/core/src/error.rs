use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {size} must be even and at least 4")]
    InvalidGrid { size: usize },

    #[error("spectra are sampled on different grids ({left} vs {right} nodes)")]
    GridMismatch { left: usize, right: usize },

    #[error("spectral density is not positive at theta = {theta} (value {value})")]
    NonPositiveDensity { theta: f64, value: f64 },

    #[error("spectral density is not even: node {index} differs from its mirror")]
    AsymmetricDensity { index: usize },

    #[error("invalid rational spec: {0}")]
    InvalidRationalSpec(String),

    #[error("invalid divergence: {0}")]
    InvalidDivergence(String),

    #[error("invalid nu: {0}")]
    InvalidNu(String),

    #[error("max lag {max_lag} must be below half the grid size {size}")]
    MaxLagTooLarge { max_lag: usize, size: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("state dimension n = {n} must be greater than 1")]
    DimensionTooSmall { n: usize },

    #[error("A is not a stability matrix (spectral radius {spectral_radius})")]
    UnstableBank { spectral_radius: f64 },

    #[error("(A, B) is not reachable (controllability rank {rank} < {n})")]
    UnreachableBank { rank: usize, n: usize },

    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("inconsistent filter bank: {0}")]
    InconsistentBank(String),

    #[error("covariance target is not feasible: {0}")]
    Infeasible(String),

    #[error("multiplier is not admissible (margin {margin:e})")]
    Inadmissible { margin: f64 },

    #[error("Newton iteration did not converge in {iterations} iterations (gradient norm {grad_norm:e})")]
    MaxIterations { iterations: usize, grad_norm: f64 },

    #[error("step length underflow (boundary margin {margin:e}, gradient norm {grad_norm:e})")]
    StepUnderflow { margin: f64, grad_norm: f64 },

    #[error("Hessian is not positive definite; Newton system cannot be solved")]
    HessianSolve,

    #[error("|B'G| vanishes at theta = {theta}")]
    KernelBlowup { theta: f64 },

    #[error("ARMA model is not stable or causal: {0}")]
    UnstableModel(String),

    #[error("covariance estimate is degenerate: {0}")]
    DegenerateCovariance(String),
}
