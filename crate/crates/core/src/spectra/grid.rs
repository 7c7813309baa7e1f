use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const DEFAULT_GRID_SIZE: usize = 2048;

/// Uniform nodes `theta_k = 2*pi*k/size` on `[0, 2*pi)`.
///
/// The size is even so that `0` and `pi` are both nodes and every node `k`
/// has its mirror `size - k`. Nodes are shared, so clones are cheap.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    nodes: Arc<[f64]>,
}

impl FrequencyGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 4 || !size.is_multiple_of(2) {
            return Err(Error::InvalidGrid { size });
        }
        let step = 2.0 * PI / size as f64;
        let nodes: Vec<f64> = (0..size).map(|k| step * k as f64).collect();
        Ok(Self {
            nodes: nodes.into(),
        })
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.nodes[k]
    }

    /// Index of the node at `2*pi - theta_k`.
    pub fn mirror(&self, k: usize) -> usize {
        (self.size() - k) % self.size()
    }

    /// Samples `f` on the grid.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes.iter().map(|&t| f(t)).collect()
    }
}

impl PartialEq for FrequencyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.size() == other.size()
    }
}

/// Integral over the circle w.r.t. `dtheta / 2pi`.
///
/// On a uniform periodic grid the trapezoid rule is the sample mean, which
/// is exact for trigonometric polynomials of degree below `size / 2`.
pub fn quadrature(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Cosine coefficients `c_0..=c_max_lag` with `f(theta) ~ sum_k c_k cos(k theta)`.
///
/// `c_k = 2 * quadrature(f cos(k .))` for `k > 0`, `c_0` is the mean.
pub fn trig_coefficients(grid: &FrequencyGrid, values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let lags = covariance_lags(grid, values, max_lag)?;
    Ok(lags
        .into_iter()
        .enumerate()
        .map(|(k, c)| if k == 0 { c } else { 2.0 * c })
        .collect())
}

/// Autocovariance lags `r_k = quadrature(f cos(k .))`, `k = 0..=max_lag`.
pub fn covariance_lags(grid: &FrequencyGrid, values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let size = grid.size();
    if values.len() != size {
        return Err(Error::DimensionMismatch(format!(
            "{} samples on a grid of {} nodes",
            values.len(),
            size
        )));
    }
    if max_lag >= size / 2 {
        return Err(Error::MaxLagTooLarge { max_lag, size });
    }
    let step = 2.0 * PI / size as f64;
    Ok((0..=max_lag)
        .map(|k| {
            // index arithmetic keeps cos(k theta_j) exact up to one rounding
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * (step * ((k * j) % size) as f64).cos())
                .sum();
            s / size as f64
        })
        .collect())
}
