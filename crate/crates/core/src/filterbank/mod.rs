//! The filter bank `G(z) = (zI - A)^{-1} B`, the operator `Gamma`, its
//! range, feasibility of a target covariance and `Sigma`-normalization.

mod bank;
mod gamma;
mod range;

pub use bank::{
    build_filter_bank, covariance_lag_bank, evaluate_bank, matrix_from_rows, matrix_to_rows,
    normalize_bank, zeroth_moment_constraint, FilterBank, FilterBankSpec,
};
pub use gamma::{
    feasibility_check, gamma_apply, orthogonality_null_check, project_range_gamma, FeasibilityReport,
    GammaOperator, DEFAULT_FEASIBILITY_TOL,
};
pub use range::{range_gamma_basis, stein_range_residual, RangeBasis};
