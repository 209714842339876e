//! JSON experiment configurations. Unknown keys are rejected.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use roughinc::drivers::{AnalyticPath, DriverKind, DriverSpec, FbmMethod};
use roughinc::norms::holder_seminorm;
use roughinc::rdi::{RdiConfig, RdiMode};
use roughinc::{DyadicGrid, Path};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn default_dim() -> usize {
    1
}

fn default_horizon() -> f64 {
    1.0
}

/// A sampled driver on the level-`level` grid of `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverConfig {
    /// `fbm`, `fourier` or `analytic`.
    pub kind: String,
    #[serde(default)]
    pub hurst: Option<f64>,
    /// `covariance` (default) or `circulant`, for `fbm`.
    #[serde(default)]
    pub method: Option<String>,
    /// Number of modes, for `fourier`.
    #[serde(default)]
    pub terms: Option<usize>,
    /// `line`, `sine`, `polynomial` or `circle`, for `analytic`.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    pub level: u32,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Rescale the sample to this Hölder seminorm at exponent `holder_exponent`.
    #[serde(default)]
    pub holder_scale: Option<f64>,
    #[serde(default)]
    pub holder_exponent: Option<f64>,
}

impl DriverConfig {
    pub fn spec(&self) -> CliResult<DriverSpec> {
        let need_hurst = || self.hurst.ok_or_else(|| CliError::Config(format!("driver kind '{}' needs hurst", self.kind)));
        let kind = match self.kind.as_str() {
            "fbm" => DriverKind::Fbm {
                hurst: need_hurst()?,
                method: match &self.method {
                    Some(m) => m.parse::<FbmMethod>()?,
                    None => FbmMethod::default(),
                },
            },
            "fourier" => DriverKind::Fourier {
                hurst: need_hurst()?,
                terms: self.terms.ok_or_else(|| CliError::Config("fourier driver needs terms".into()))?,
            },
            "analytic" => {
                let name = self.name.as_deref().ok_or_else(|| CliError::Config("analytic driver needs name".into()))?;
                DriverKind::Analytic(name.parse::<AnalyticPath>()?)
            }
            other => return Err(CliError::Config(format!("unknown driver kind '{other}'"))),
        };
        Ok(DriverSpec { kind, dim: self.dim, seed: self.seed, grid: DyadicGrid::new(self.horizon, self.level)? })
    }

    pub fn sample(&self) -> CliResult<Path> {
        let x = self.spec()?.sample()?;
        match (self.holder_scale, self.holder_exponent) {
            (None, None) => Ok(x),
            (Some(target), Some(alpha)) => {
                let h = holder_seminorm(&x, alpha)?;
                if h == 0.0 {
                    return Err(CliError::Config("cannot rescale a constant driver".into()));
                }
                Ok(x.scaled(target / h))
            }
            _ => Err(CliError::Config("holder_scale and holder_exponent go together".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverCommand {
    pub driver: DriverConfig,
    /// Also emit the piecewise-linear lift with this exponent.
    #[serde(default)]
    pub lift_alpha: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsCommand {
    /// CSV file with columns `t, x1, ..., xd`.
    pub input: PathBuf,
    pub p: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateCommand {
    /// `young` or `rough`.
    pub mode: String,
    pub driver: DriverConfig,
    /// One-form expression `G`; the integral is `int G(x) dx`.
    pub form: String,
    /// Variation exponent of the integrand (Young).
    #[serde(default)]
    pub q: Option<f64>,
    /// Hölder exponent of the driver (Young) or of the lift (rough).
    pub alpha: f64,
    /// `finest` or `extrapolated` (Young).
    #[serde(default)]
    pub limit: Option<String>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YdiCommand {
    pub driver: DriverConfig,
    /// Set-valued map expression.
    pub map: String,
    pub exponents: Exponents,
    pub xi: Vec<f64>,
    #[serde(default)]
    pub min_level: u32,
    /// Defaults to the driver level.
    #[serde(default)]
    pub max_level: Option<u32>,
    pub residual_tol: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionCommand {
    /// Time map expression (`arg=time`).
    pub map: String,
    /// Starting point in `F(0)`; defaults to the point of `F(0)` nearest the origin.
    #[serde(default)]
    pub xi: Option<Vec<f64>>,
    pub level: u32,
    pub q: f64,
    /// Hölder constant used by the certificate; measured on the grid when absent.
    #[serde(default)]
    pub gamma_norm: Option<f64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdiCommand {
    pub driver: DriverConfig,
    pub map: String,
    pub form: String,
    pub xi: Vec<f64>,
    pub alpha: f64,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    pub velocity_bound: f64,
    #[serde(default)]
    pub cone_slope: Option<f64>,
    #[serde(default)]
    pub damping: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub fp_tol: Option<f64>,
    /// `lsc` (default) or `usc`.
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub max_halvings: Option<u32>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RdiCommand {
    pub fn solver_config(&self) -> CliResult<RdiConfig> {
        let base = RdiConfig::new(self.xi.clone(), self.alpha, self.velocity_bound);
        let cfg = RdiConfig {
            beta: self.beta.unwrap_or(base.beta),
            gamma: self.gamma.unwrap_or(base.gamma),
            cone_slope: self.cone_slope.unwrap_or(base.cone_slope),
            damping: self.damping.unwrap_or(base.damping),
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            fp_tol: self.fp_tol.unwrap_or(base.fp_tol),
            mode: match &self.mode {
                Some(m) => m.parse::<RdiMode>()?,
                None => RdiMode::default(),
            },
            max_halvings: self.max_halvings.unwrap_or(base.max_halvings),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load<T: DeserializeOwned>(file: &FsPath) -> CliResult<T> {
    let text = fs::read_to_string(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let ok = r#"{"kind": "analytic", "name": "sine", "level": 3}"#;
        assert!(serde_json::from_str::<DriverConfig>(ok).is_ok());
        let bad = r#"{"kind": "analytic", "name": "sine", "level": 3, "colour": 1}"#;
        assert!(serde_json::from_str::<DriverConfig>(bad).is_err());
    }

    #[test]
    fn driver_rules() {
        let mut c: DriverConfig = serde_json::from_str(r#"{"kind": "fbm", "level": 4}"#).unwrap();
        assert!(matches!(c.spec(), Err(CliError::Config(_))));
        c.hurst = Some(0.7);
        c.holder_scale = Some(1.0);
        assert!(c.sample().is_err());
        c.holder_exponent = Some(0.6);
        let x = c.sample().unwrap();
        assert!((holder_seminorm(&x, 0.6).unwrap() - 1.0).abs() < 1e-12);
    }
}
