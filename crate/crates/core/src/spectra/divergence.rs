use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::density::SpectralDensity;
use super::grid::quadrature;
use crate::error::{Error, Result};

/// Members of the divergence families evaluated on grid spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameter", rename_all = "lowercase")]
pub enum DivergenceSpec {
    /// Alpha family; `alpha = 0` and `alpha = 1` are the two KL limits.
    Alpha(f64),
    /// `int Phi1 log(Phi1/Phi2) - Phi1 + Phi2`.
    Kl,
    /// `int Phi1 log(Phi1/Phi2)`; only a divergence for equal zeroth moments.
    Kl0,
    /// `int (sqrt(Phi1) - sqrt(Phi2))^2`.
    Hellinger,
    /// `1/2 int (Phi1 - Phi2)^2 / Phi2`, the alpha = 2 member.
    Pearson,
    /// Beta family, `beta` not in `{0, 1}`.
    Beta(f64),
}

impl DivergenceSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DivergenceSpec::Alpha(a) if !a.is_finite() => {
                Err(Error::InvalidDivergence(format!("alpha = {a}")))
            }
            DivergenceSpec::Beta(b) if !b.is_finite() || b == 0.0 || b == 1.0 => {
                Err(Error::InvalidDivergence(format!("beta = {b} (must avoid 0 and 1)")))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            DivergenceSpec::Alpha(a) => format!("alpha({a})"),
            DivergenceSpec::Kl => "kl".into(),
            DivergenceSpec::Kl0 => "kl0".into(),
            DivergenceSpec::Hellinger => "hellinger".into(),
            DivergenceSpec::Pearson => "pearson".into(),
            DivergenceSpec::Beta(b) => format!("beta({b})"),
        }
    }
}

fn kl(p: f64, q: f64) -> f64 {
    p * (p / q).ln() - p + q
}

fn pointwise(spec: DivergenceSpec, p: f64, q: f64) -> f64 {
    match spec {
        DivergenceSpec::Alpha(0.0) => kl(q, p),
        DivergenceSpec::Alpha(1.0) => kl(p, q),
        DivergenceSpec::Alpha(a) => {
            p.powf(a) * q.powf(1.0 - a) / (a * (a - 1.0)) - p / (a - 1.0) + q / a
        }
        DivergenceSpec::Kl => kl(p, q),
        DivergenceSpec::Kl0 => p * (p / q).ln(),
        DivergenceSpec::Hellinger => (p.sqrt() - q.sqrt()).powi(2),
        DivergenceSpec::Pearson => 0.5 * (p - q).powi(2) / q,
        DivergenceSpec::Beta(b) => {
            let pb = p.powf(b);
            (pb - p * q.powf(b - 1.0)) / (b - 1.0) - (pb - q.powf(b)) / b
        }
    }
}

/// `S(Phi1 || Phi2)` for the requested family, by quadrature.
pub fn divergence(phi1: &SpectralDensity, phi2: &SpectralDensity, spec: DivergenceSpec) -> Result<f64> {
    spec.validate()?;
    phi1.check_same_grid(phi2)?;
    let integrand: Vec<f64> = phi1
        .values()
        .iter()
        .zip(phi2.values())
        .map(|(&p, &q)| pointwise(spec, p, q))
        .collect();
    Ok(quadrature(&integrand))
}

/// The order `nu` of the parametrization `alpha = 1 - 1/nu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Nu {
    Finite(i64),
    Infinite,
}

impl Nu {
    pub fn finite(value: i64) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidNu("nu = 0 is excluded".into()));
        }
        Ok(Nu::Finite(value))
    }

    /// Rejects the orders for which the dual problem can lose its minimizer.
    pub fn ensure_solvable(self) -> Result<Self> {
        match self {
            Nu::Finite(v) if v < 1 => Err(Error::InvalidNu(format!(
                "nu = {v}: the dual solver only handles nu >= 1 or infinity"
            ))),
            _ => Ok(self),
        }
    }

    pub fn alpha(self) -> f64 {
        match self {
            Nu::Finite(v) => 1.0 - 1.0 / v as f64,
            Nu::Infinite => 1.0,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Nu::Infinite)
    }
}

impl fmt::Display for Nu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nu::Finite(v) => write!(f, "{v}"),
            Nu::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Nu {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "∞" => Ok(Nu::Infinite),
            other => other
                .parse::<i64>()
                .map_err(|_| Error::InvalidNu(format!("cannot parse '{other}'")))
                .and_then(Nu::finite),
        }
    }
}

impl Serialize for Nu {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Nu::Finite(v) => s.serialize_i64(*v),
            Nu::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Nu {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(v) => Nu::finite(v),
            Raw::Str(s) => s.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// The objective of the approximation problem for order `nu`.
///
/// `nu = 1` is `S_KL(Psi || Phi)`, `nu = inf` is `S_KL(Phi || Psi)`, and
/// other integers use the alpha member with `alpha = 1 - 1/nu`.
pub fn s_nu(phi: &SpectralDensity, psi: &SpectralDensity, nu: Nu) -> Result<f64> {
    phi.check_same_grid(psi)?;
    if nu == Nu::Finite(0) {
        return Err(Error::InvalidNu("nu = 0 is excluded".into()));
    }
    let branch = |p: f64, q: f64| -> f64 {
        match nu {
            Nu::Finite(1) => kl(q, p),
            Nu::Finite(v) => {
                let v = v as f64;
                v * v / (1.0 - v) * p.powf((v - 1.0) / v) * q.powf(1.0 / v) + v * p + v / (v - 1.0) * q
            }
            Nu::Infinite => kl(p, q),
        }
    };
    let integrand: Vec<f64> = phi
        .values()
        .iter()
        .zip(psi.values())
        .map(|(&p, &q)| branch(p, q))
        .collect();
    Ok(quadrature(&integrand))
}
