//! Frequency grids, grid-sampled spectral densities and the divergence
//! families used to compare them.

mod density;
mod divergence;
mod grid;

pub use density::{eval_rational_spec, RationalSpec, SpectralDensity};
pub(crate) use density::mirror_half;
pub use divergence::{divergence, s_nu, DivergenceSpec, Nu};
pub use grid::{covariance_lags, quadrature, trig_coefficients, FrequencyGrid, DEFAULT_GRID_SIZE};
