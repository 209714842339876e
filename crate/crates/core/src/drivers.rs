//! Driving signals: fractional Brownian motion, random Fourier series and
//! analytic paths, sampled on dyadic grids.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)` with standard
//! normals drawn by `rand_distr::StandardNormal`. Normals are consumed in
//! time order, all components of one time step before the next step.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::DyadicGrid;
use crate::path::Path;

/// Highest grid level accepted by the covariance-factorization sampler.
pub const COVARIANCE_LEVEL_CAP: u32 = 12;

/// How fractional Gaussian noise is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbmMethod {
    /// Exact sequential factorization of the Toeplitz covariance
    /// (Durbin-Levinson), `O(n^2)` time, `O(n)` memory.
    #[default]
    Covariance,
    /// Circulant embedding with FFTs, `O(n log n)`.
    Circulant,
}

impl FromStr for FbmMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "covariance" => Ok(FbmMethod::Covariance),
            "circulant" => Ok(FbmMethod::Circulant),
            other => Err(Error::Parse(format!("unknown fbm method {other:?}"))),
        }
    }
}

/// Deterministic paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticPath {
    /// `t`
    Line,
    /// `sin t`
    Sine,
    /// `t^2`
    Polynomial,
    /// `(sin t, cos t)`
    Circle,
}

impl AnalyticPath {
    pub fn dim(self) -> usize {
        match self {
            AnalyticPath::Circle => 2,
            _ => 1,
        }
    }

    pub fn eval(self, t: f64) -> Vec<f64> {
        match self {
            AnalyticPath::Line => vec![t],
            AnalyticPath::Sine => vec![t.sin()],
            AnalyticPath::Polynomial => vec![t * t],
            AnalyticPath::Circle => vec![t.sin(), t.cos()],
        }
    }
}

impl FromStr for AnalyticPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(AnalyticPath::Line),
            "sine" => Ok(AnalyticPath::Sine),
            "polynomial" => Ok(AnalyticPath::Polynomial),
            "circle" => Ok(AnalyticPath::Circle),
            other => Err(Error::Parse(format!("unknown analytic path {other:?}"))),
        }
    }
}

impl fmt::Display for AnalyticPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnalyticPath::Line => "line",
            AnalyticPath::Sine => "sine",
            AnalyticPath::Polynomial => "polynomial",
            AnalyticPath::Circle => "circle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriverKind {
    Fbm { hurst: f64, method: FbmMethod },
    /// `sum_{k <= terms} k^-(H + 1/2) (a_k cos 2 pi k t + b_k sin 2 pi k t)`.
    Fourier { hurst: f64, terms: usize },
    Analytic(AnalyticPath),
}

/// Everything needed to reproduce a driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverSpec {
    pub kind: DriverKind,
    pub dim: usize,
    pub seed: u64,
    pub grid: DyadicGrid,
}

impl DriverSpec {
    pub fn sample(&self) -> Result<Path> {
        match self.kind {
            DriverKind::Fbm { hurst, method } => sample_fbm(hurst, self.dim, self.grid, self.seed, method),
            DriverKind::Fourier { hurst, terms } => sample_fourier(hurst, terms, self.dim, self.grid, self.seed),
            DriverKind::Analytic(name) => {
                if name.dim() != self.dim {
                    return Err(Error::DimensionMismatch { expected: name.dim(), got: self.dim });
                }
                analytic(name, self.grid)
            }
        }
    }
}

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst index {h} outside (0, 1)")));
    }
    Ok(())
}

/// Autocovariance of fractional Gaussian noise with step `step`.
pub fn fgn_autocovariance(hurst: f64, step: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    let lag = |x: f64| x.abs().powf(h2);
    0.5 * step.powf(h2) * (lag(k + 1.0) - 2.0 * lag(k) + lag(k - 1.0))
}

/// Independent fBm components with covariance `(s^2H + t^2H - |t-s|^2H) / 2`,
/// started at zero.
pub fn sample_fbm(hurst: f64, dim: usize, grid: DyadicGrid, seed: u64, method: FbmMethod) -> Result<Path> {
    check_hurst(hurst)?;
    if dim == 0 {
        return Err(Error::InvalidParameter("driver dimension must be positive".into()));
    }
    let n = grid.intervals();
    let noise = match method {
        FbmMethod::Covariance => {
            if grid.level() > COVARIANCE_LEVEL_CAP {
                return Err(Error::InvalidParameter(format!(
                    "covariance sampling is capped at level {COVARIANCE_LEVEL_CAP}; use the circulant method"
                )));
            }
            durbin_levinson(hurst, grid.step(), n, dim, seed)
        }
        FbmMethod::Circulant => circulant(hurst, grid.step(), n, dim, seed)?,
    };
    let mut data = vec![0.0; (n + 1) * dim];
    for i in 0..n {
        for c in 0..dim {
            data[(i + 1) * dim + c] = data[i * dim + c] + noise[i * dim + c];
        }
    }
    Path::on_grid(grid, dim, data)
}

fn durbin_levinson(hurst: f64, step: f64, n: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma: Vec<f64> = (0..n).map(|k| fgn_autocovariance(hurst, step, k)).collect();
    let mut out = vec![0.0; n * dim];
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut var = gamma[0];
    for i in 0..n {
        if i > 0 {
            let dot: f64 = (1..i).map(|j| phi[j - 1] * gamma[i - j]).sum();
            let kappa = (gamma[i] - dot) / var;
            prev.clear();
            prev.extend_from_slice(&phi);
            for j in 1..i {
                phi[j - 1] = prev[j - 1] - kappa * prev[i - j - 1];
            }
            phi.push(kappa);
            var *= 1.0 - kappa * kappa;
        }
        let sd = var.max(0.0).sqrt();
        for c in 0..dim {
            let mean: f64 = (1..=i).map(|j| phi[j - 1] * out[(i - j) * dim + c]).sum();
            let z: f64 = rng.sample(StandardNormal);
            out[i * dim + c] = mean + sd * z;
        }
    }
    out
}

fn circulant(hurst: f64, step: f64, n: usize, dim: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|k| {
            let lag = if k <= n { k } else { m - k };
            Complex::new(fgn_autocovariance(hurst, step, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let top = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let mut scale = Vec::with_capacity(m);
    for c in &row {
        if c.re < -1e-10 * top {
            return Err(Error::InvalidParameter("circulant embedding is not nonnegative".into()));
        }
        scale.push((c.re.max(0.0) / m as f64).sqrt());
    }
    let mut out = vec![0.0; n * dim];
    for c in 0..dim {
        let mut buf: Vec<Complex<f64>> = scale
            .iter()
            .map(|s| {
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                Complex::new(s * a, s * b)
            })
            .collect();
        fft.process(&mut buf);
        for i in 0..n {
            out[i * dim + c] = buf[i].re;
        }
    }
    Ok(out)
}

/// Random Fourier series with standard normal coefficients.
pub fn sample_fourier(hurst: f64, terms: usize, dim: usize, grid: DyadicGrid, seed: u64) -> Result<Path> {
    check_hurst(hurst)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![(0.0, 0.0); terms * dim];
    for c in coeffs.iter_mut() {
        *c = (rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
    fourier_series(hurst, &coeffs, dim, grid)
}

/// Fourier series with given coefficients; `coeffs[(k - 1) * dim + c]` is
/// the `(cos, sin)` pair of frequency `k` in component `c`.
pub fn fourier_series(hurst: f64, coeffs: &[(f64, f64)], dim: usize, grid: DyadicGrid) -> Result<Path> {
    check_hurst(hurst)?;
    if dim == 0 || coeffs.len() % dim != 0 {
        return Err(Error::DimensionMismatch { expected: dim, got: coeffs.len() });
    }
    let terms = coeffs.len() / dim;
    Path::from_fn(grid, dim, |t| {
        (0..dim)
            .map(|c| {
                (1..=terms)
                    .map(|k| {
                        let (a, b) = coeffs[(k - 1) * dim + c];
                        let w = 2.0 * std::f64::consts::PI * k as f64 * t;
                        (k as f64).powf(-(hurst + 0.5)) * (a * w.cos() + b * w.sin())
                    })
                    .sum()
            })
            .collect()
    })
}

pub fn analytic(name: AnalyticPath, grid: DyadicGrid) -> Result<Path> {
    Path::from_fn(grid, name.dim(), |t| name.eval(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_paths() {
        let g = DyadicGrid::new(1.0, 3).unwrap();
        let line = analytic("line".parse().unwrap(), g).unwrap();
        assert_eq!(line.point(4), &[0.5]);
        let sine = analytic(AnalyticPath::Sine, g).unwrap();
        assert_eq!(sine.point(8), &[1f64.sin()]);
        assert!("spiral".parse::<AnalyticPath>().is_err());
        let spec = DriverSpec { kind: DriverKind::Analytic(AnalyticPath::Circle), dim: 1, seed: 0, grid: g };
        assert!(spec.sample().is_err());
    }

    #[test]
    fn zero_fourier_coefficients() {
        let g = DyadicGrid::new(1.0, 4).unwrap();
        let p = fourier_series(0.4, &[(0.0, 0.0); 6], 2, g).unwrap();
        assert!(p.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn seeds_reproduce() {
        let g = DyadicGrid::new(1.0, 6).unwrap();
        for method in [FbmMethod::Covariance, FbmMethod::Circulant] {
            let a = sample_fbm(0.3, 2, g, 11, method).unwrap();
            let b = sample_fbm(0.3, 2, g, 11, method).unwrap();
            let c = sample_fbm(0.3, 2, g, 12, method).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
            assert_eq!(a.point(0), &[0.0, 0.0]);
        }
        assert!(sample_fbm(1.0, 1, g, 0, FbmMethod::Covariance).is_err());
        let big = DyadicGrid::new(1.0, COVARIANCE_LEVEL_CAP + 1).unwrap();
        assert!(sample_fbm(0.5, 1, big, 0, FbmMethod::Covariance).is_err());
    }

    #[test]
    fn durbin_levinson_matches_brownian_case() {
        // H = 1/2: the recursion reduces to independent N(0, h) increments.
        let n = 16;
        let h = 1.0 / n as f64;
        let inc = durbin_levinson(0.5, h, n, 1, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for v in inc {
            let z: f64 = rng.sample(StandardNormal);
            assert!((v - h.sqrt() * z).abs() < 1e-15);
        }
    }

    #[test]
    fn methods_agree_in_distribution() {
        // Endpoint variance t^2H over many seeds, both methods.
        let g = DyadicGrid::new(1.0, 4).unwrap();
        for method in [FbmMethod::Covariance, FbmMethod::Circulant] {
            let samples: Vec<f64> = (0..4000).map(|s| sample_fbm(0.7, 1, g, s, method).unwrap().last()[0]).collect();
            let var = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
            assert!((var - 1.0).abs() < 4.0 * (2.0f64 / 4000.0).sqrt(), "{method:?}: {var}");
        }
    }
}
