//! Path norms: exact p-variation by dynamic programming, Hölder seminorms,
//! oscillation and controls.
//!
//! All routines treat the samples as the whole path, which is exact for the
//! piecewise-constant and piecewise-linear paths produced by the dyadic
//! schemes. Costs are `O(n^2)` in the number of samples.

use crate::error::{Error, Result};
use crate::path::{dist, Path};

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be >= 1, got {p}")));
    }
    Ok(())
}

fn window_indices(path: &Path, a: f64, b: f64) -> Result<(usize, usize)> {
    match (path.index_of(a), path.index_of(b)) {
        (Some(i), Some(j)) if i <= j => Ok((i, j)),
        _ => Err(Error::WindowNotAligned(a, b)),
    }
}

/// `sup_pi sum |x_{t_{k+1}} - x_{t_k}|^p` over sample partitions of `points`,
/// via `V(j) = max_{i<j} V(i) + |x_j - x_i|^p`.
fn pvar_power(points: &[&[f64]], p: f64) -> f64 {
    // Consecutive repeats never change the supremum.
    let mut pts: Vec<&[f64]> = Vec::with_capacity(points.len());
    for &q in points {
        if pts.last().map_or(true, |l| *l != q) {
            pts.push(q);
        }
    }
    let n = pts.len();
    if n < 2 {
        return 0.0;
    }
    let mut best = vec![0.0f64; n];
    for j in 1..n {
        let mut v = f64::NEG_INFINITY;
        for i in 0..j {
            let c = best[i] + dist(pts[i], pts[j]).powf(p);
            if c > v {
                v = c;
            }
        }
        best[j] = v;
    }
    best[n - 1]
}

fn points_of(path: &Path, i0: usize, i1: usize) -> Vec<&[f64]> {
    (i0..=i1).map(|i| path.point(i)).collect()
}

/// p-variation of the whole sampled path.
pub fn p_variation(path: &Path, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(pvar_power(&points_of(path, 0, path.len() - 1), p).powf(1.0 / p))
}

/// p-variation over the window `[a, b]`, whose endpoints must be sample times.
pub fn p_variation_on(path: &Path, p: f64, a: f64, b: f64) -> Result<f64> {
    check_p(p)?;
    let (i, j) = window_indices(path, a, b)?;
    Ok(pvar_power(&points_of(path, i, j), p).powf(1.0 / p))
}

pub(crate) fn p_variation_indices(path: &Path, p: f64, i0: usize, i1: usize) -> f64 {
    pvar_power(&points_of(path, i0, i1), p).powf(1.0 / p)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

pub(crate) fn holder_indices(path: &Path, alpha: f64, i0: usize, i1: usize) -> f64 {
    let mut best = 0.0f64;
    for i in i0..i1 {
        let (ti, xi) = (path.time(i), path.point(i));
        for j in i + 1..=i1 {
            let r = dist(xi, path.point(j)) / (path.time(j) - ti).powf(alpha);
            if r > best {
                best = r;
            }
        }
    }
    best
}

/// `max_{s<t} |x_t - x_s| / (t - s)^alpha` over all sample pairs.
pub fn holder_seminorm(path: &Path, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if path.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    Ok(holder_indices(path, alpha, 0, path.len() - 1))
}

/// Hölder seminorm restricted to the window `[a, b]`.
pub fn holder_seminorm_on(path: &Path, alpha: f64, a: f64, b: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let (i, j) = window_indices(path, a, b)?;
    Ok(holder_indices(path, alpha, i, j))
}

pub(crate) fn oscillation_indices(path: &Path, i0: usize, i1: usize) -> f64 {
    if path.dim() == 1 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in i0..=i1 {
            let v = path.point(i)[0];
            lo = lo.min(v);
            hi = hi.max(v);
        }
        return hi - lo;
    }
    let mut best = 0.0f64;
    for i in i0..=i1 {
        for j in i + 1..=i1 {
            best = best.max(dist(path.point(i), path.point(j)));
        }
    }
    best
}

/// Oscillation over the half-open window `[a, b)`: the largest distance
/// between two samples inside it.
pub fn oscillation(path: &Path, a: f64, b: f64) -> Result<f64> {
    let tol = 1e-12 * b.abs().max(1.0);
    let idx: Vec<usize> = (0..path.len())
        .filter(|&i| path.time(i) >= a - tol && path.time(i) < b - tol)
        .collect();
    match (idx.first(), idx.last()) {
        (Some(&i), Some(&j)) => Ok(oscillation_indices(path, i, j)),
        _ => Err(Error::EmptyWindow),
    }
}

/// Norms of a path for a given `p` and `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub p: f64,
    pub alpha: f64,
    pub p_variation: f64,
    pub holder_seminorm: f64,
    pub sup_norm: f64,
    /// `||y||_{p-var} + ||y||_inf`.
    pub pvar_norm: f64,
    /// `||y||_alpha + ||y||_inf`.
    pub holder_norm: f64,
}

impl NormReport {
    pub fn compute(path: &Path, p: f64, alpha: f64) -> Result<Self> {
        let p_variation = p_variation(path, p)?;
        let holder_seminorm = holder_seminorm(path, alpha)?;
        let sup_norm = path.sup_norm();
        Ok(Self {
            p,
            alpha,
            p_variation,
            holder_seminorm,
            sup_norm,
            pvar_norm: p_variation + sup_norm,
            holder_norm: holder_seminorm + sup_norm,
        })
    }
}

/// Upper bound for `||pm - pn||_{q-var}` by interpolation between the sup
/// distance and the p-variations:
/// `(2 ||pm - pn||_inf)^((q-p)/q) (||pm||_{p-var} + ||pn||_{p-var})^(p/q)`.
pub fn interpolation_qvar_bound(pm: &Path, pn: &Path, p: f64, q: f64) -> Result<f64> {
    check_p(p)?;
    if !(q > p) {
        return Err(Error::InvalidParameter(format!("need q > p, got q = {q}, p = {p}")));
    }
    pm.check_compatible(pn)?;
    if dist(pm.point(0), pn.point(0)) > 1e-12 {
        return Err(Error::GridMismatch);
    }
    let sup = pm.sup_distance(pn)?;
    let vm = p_variation(pm, p)?;
    let vn = p_variation(pn, p)?;
    Ok((2.0 * sup).powf((q - p) / q) * (vm + vn).powf(p / q))
}

/// A two-time function `omega(s, t)` on sample indices.
pub trait Control {
    fn eval(&self, s: usize, t: usize) -> f64;
}

/// `omega(s, t) = ||x||_{alpha, [s, t]}^(1/alpha)`.
pub struct HolderControl<'a> {
    pub path: &'a Path,
    pub alpha: f64,
}

impl Control for HolderControl<'_> {
    fn eval(&self, s: usize, t: usize) -> f64 {
        if t <= s {
            return 0.0;
        }
        holder_indices(self.path, self.alpha, s, t).powf(1.0 / self.alpha)
    }
}

/// `omega(s, t) = ||y||_{p-var, [s, t]}^p`, which is superadditive.
pub struct PVarControl<'a> {
    pub path: &'a Path,
    pub p: f64,
}

impl Control for PVarControl<'_> {
    fn eval(&self, s: usize, t: usize) -> f64 {
        if t <= s {
            return 0.0;
        }
        pvar_power(&points_of(self.path, s, t), self.p)
    }
}
