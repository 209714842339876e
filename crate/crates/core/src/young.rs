//! Sewing of two-parameter germs on dyadic grids and the Young integral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::forms::OneForm;
use crate::grid::DyadicGrid;
use crate::norms::{holder_seminorm, p_variation};
use crate::path::{dist, norm, Path};
use crate::picard::{solve_windows, PicardOptions, PicardReport};

/// A two-index map `(s, t) -> R^d` on grid indices, with declared exponents
/// `(a1, a2)` for its defect, `a1 + a2 > 1`.
pub trait Germ {
    fn dim(&self) -> usize;
    fn exponents(&self) -> (f64, f64);
    /// Value on the pair of grid indices `i <= j`.
    fn eval(&self, i: usize, j: usize) -> Vec<f64>;
}

/// Closure-backed germ.
pub struct FnGerm<F> {
    dim: usize,
    exponents: (f64, f64),
    f: F,
}

impl<F: Fn(usize, usize) -> Vec<f64>> FnGerm<F> {
    pub fn new(dim: usize, exponents: (f64, f64), f: F) -> Self {
        Self { dim, exponents, f }
    }
}

impl<F: Fn(usize, usize) -> Vec<f64>> Germ for FnGerm<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn exponents(&self) -> (f64, f64) {
        self.exponents
    }
    fn eval(&self, i: usize, j: usize) -> Vec<f64> {
        (self.f)(i, j)
    }
}

/// How the sewn path is read off the dyadic sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SewLimit {
    /// The compensated Riemann sum on the finest level used.
    #[default]
    Finest,
    /// Richardson extrapolation of the last two levels, with the rate
    /// `2^(a1 + a2 - 1)` implied by the declared exponents.
    Extrapolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SewOptions {
    /// Stop refining once `|I(level k+1) - I(level k)| < tol` at the horizon.
    pub tol: Option<f64>,
    pub limit: SewLimit,
}

impl Default for SewOptions {
    fn default() -> Self {
        Self { tol: None, limit: SewLimit::Finest }
    }
}

/// Result of [`sew`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sewn {
    /// `t -> I_0^t`, on the finest level actually used.
    pub path: Path,
    /// `|I_0^T(level k+1) - I_0^T(level k)|` for `k = 0, 1, ...`.
    pub refinement_deltas: Vec<f64>,
    /// `I_0^T` at every level `0..=level`.
    pub totals: Vec<Vec<f64>>,
}

fn cumulative(germ: &dyn Germ, grid: &DyadicGrid, level: u32) -> Vec<f64> {
    let d = germ.dim();
    let stride = 1usize << (grid.level() - level);
    let n = 1usize << level;
    let mut out = vec![0.0; (n + 1) * d];
    for k in 0..n {
        let v = germ.eval(k * stride, (k + 1) * stride);
        for c in 0..d {
            out[(k + 1) * d + c] = out[k * d + c] + v[c];
        }
    }
    out
}

/// Sew `germ` along the dyadic refinements of `grid`.
pub fn sew(germ: &dyn Germ, grid: &DyadicGrid, opts: &SewOptions) -> Result<Sewn> {
    let (a1, a2) = germ.exponents();
    if !(a1 + a2 > 1.0) {
        return Err(Error::ExponentCondition(format!("germ exponents sum to {} <= 1", a1 + a2)));
    }
    let d = germ.dim();
    let n = grid.intervals();
    for i in [0, n / 2, n] {
        let v = germ.eval(i, i);
        check_dim(d, v.len())?;
        if norm(&v) != 0.0 {
            return Err(Error::InvalidParameter("germ does not vanish on the diagonal".into()));
        }
    }
    let mut totals: Vec<Vec<f64>> = Vec::new();
    let mut deltas = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut used = grid.level();
    for level in 0..=grid.level() {
        let s = cumulative(germ, grid, level);
        let total = s[s.len() - d..].to_vec();
        if let Some(prev) = totals.last() {
            deltas.push(dist(prev, &total));
        }
        totals.push(total);
        sums.push(s);
        if sums.len() > 2 {
            sums.remove(0);
        }
        if let (Some(tol), Some(&delta)) = (opts.tol, deltas.last()) {
            if delta < tol {
                used = level;
                break;
            }
        }
    }
    let fine = sums.pop().expect("at least one level");
    let values = match (opts.limit, sums.pop()) {
        (SewLimit::Extrapolated, Some(coarse)) => {
            let rate = 2f64.powf(a1 + a2 - 1.0);
            let w = 1.0 / (rate - 1.0);
            let mut out = fine.clone();
            // Even points get the extrapolated value; odd points add the
            // last fine increment to it.
            for k in 0..=(1usize << used) {
                for c in 0..d {
                    out[k * d + c] = if k % 2 == 0 {
                        let (f, g) = (fine[k * d + c], coarse[(k / 2) * d + c]);
                        f + w * (f - g)
                    } else {
                        out[(k - 1) * d + c] + fine[k * d + c] - fine[(k - 1) * d + c]
                    };
                }
            }
            out
        }
        _ => fine,
    };
    let path = Path::on_grid(grid.with_level(used)?, d, values)?;
    Ok(Sewn { path, refinement_deltas: deltas, totals })
}

/// Largest `|mu_su - mu_st - mu_tu| / |u - s|^(a1 + a2)` over `samples`
/// random grid triples `s < t < u`.
pub fn sewing_defect_ratio(germ: &dyn Germ, grid: &DyadicGrid, samples: usize, seed: u64) -> f64 {
    let (a1, a2) = germ.exponents();
    let n = grid.intervals();
    if n < 2 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let mut idx = [rng.gen_range(0..=n), rng.gen_range(0..=n), rng.gen_range(0..=n)];
        idx.sort_unstable();
        let [s, t, u] = idx;
        if s == u {
            continue;
        }
        let whole = germ.eval(s, u);
        let left = germ.eval(s, t);
        let right = germ.eval(t, u);
        let defect: Vec<f64> = (0..whole.len()).map(|c| whole[c] - left[c] - right[c]).collect();
        let len = grid.time(u) - grid.time(s);
        worst = worst.max(norm(&defect) / len.powf(a1 + a2));
    }
    worst
}

/// Declared regularity of the Young pair: `y` of finite `q`-variation and
/// `x` `alpha`-Hölder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YoungBudget {
    pub q: f64,
    pub alpha: f64,
    /// Proceed with a warning when `1/q + alpha <= 1`.
    pub allow_violation: bool,
    pub limit: SewLimit,
}

impl YoungBudget {
    pub fn new(q: f64, alpha: f64) -> Self {
        Self { q, alpha, allow_violation: false, limit: SewLimit::Finest }
    }
}

/// Output dimension of `y dx` when `y` is a scalar or a `d x l` matrix path.
fn product_dim(ydim: usize, l: usize) -> Result<usize> {
    if ydim == 1 {
        Ok(l)
    } else if ydim % l == 0 {
        Ok(ydim / l)
    } else {
        Err(Error::DimensionMismatch { expected: l, got: ydim })
    }
}

/// `m x` for a scalar or row-major `d x l` matrix `m`.
pub(crate) fn apply(m: &[f64], x: &[f64], out: &mut [f64]) {
    let l = x.len();
    if m.len() == 1 {
        for (o, v) in out.iter_mut().zip(x) {
            *o += m[0] * v;
        }
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o += m[i * l..(i + 1) * l].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// The Young germ `y_s (x_t - x_s)`.
pub struct YoungGerm<'a> {
    y: &'a Path,
    x: &'a Path,
    exponents: (f64, f64),
    out_dim: usize,
}

impl<'a> YoungGerm<'a> {
    pub fn new(y: &'a Path, x: &'a Path, exponents: (f64, f64)) -> Result<Self> {
        y.check_same_times(x)?;
        let out_dim = product_dim(y.dim(), x.dim())?;
        Ok(Self { y, x, exponents, out_dim })
    }
}

impl Germ for YoungGerm<'_> {
    fn dim(&self) -> usize {
        self.out_dim
    }
    fn exponents(&self) -> (f64, f64) {
        self.exponents
    }
    fn eval(&self, i: usize, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        apply(self.y.point(i), &self.x.increment(i, j), &mut out);
        out
    }
}

/// `t -> int_0^t y dx` by sewing `y_s x_{st}`.
///
/// `y` is scalar or a `d x l` matrix path; `x` is `l`-dimensional and both
/// share one dyadic grid.
pub fn young_integral(y: &Path, x: &Path, budget: &YoungBudget) -> Result<Path> {
    let grid = x.grid().ok_or(Error::GridMismatch)?;
    let excess = 1.0 / budget.q + budget.alpha - 1.0;
    if !(budget.q >= 1.0 && budget.alpha > 0.0 && budget.alpha <= 1.0) {
        return Err(Error::InvalidParameter("need q >= 1 and alpha in (0, 1]".into()));
    }
    if excess <= 0.0 {
        let msg = format!("1/q + alpha = {} <= 1", excess + 1.0);
        if !budget.allow_violation {
            return Err(Error::ExponentCondition(msg));
        }
        log::warn!("young integral outside its regularity budget: {msg}");
    }
    let germ = YoungGerm::new(y, x, (1.0 / budget.q, budget.alpha))?;
    let germ_exps = if excess > 0.0 { germ.exponents } else { (1.0, 1.0) };
    let germ = YoungGerm { exponents: germ_exps, ..germ };
    let opts = SewOptions { tol: None, limit: budget.limit };
    Ok(sew(&germ, &grid, &opts)?.path)
}

/// Measured regularity of a Young pair on its grid: the `q`-variation of
/// `y` and the `alpha`-Hölder seminorm of `x`.
pub fn young_regularity(y: &Path, x: &Path, q: f64, alpha: f64) -> Result<(f64, f64)> {
    Ok((p_variation(y, q)?, holder_seminorm(x, alpha)?))
}

/// Solution of a single-valued Young equation.
#[derive(Debug, Clone, PartialEq)]
pub struct YoungOdeSolution {
    pub path: Path,
    pub report: PicardReport,
}

/// Fixed point of `z -> xi + int sigma(z) dx` by Picard iteration.
///
/// The integral uses the trapezoid germ `(sigma(z_s) + sigma(z_t)) x_st / 2`,
/// which has the same sewing limit as `sigma(z_s) x_st` and is second-order
/// accurate on smooth data. Windows that stall are halved and concatenated.
pub fn young_ode_solve(sigma: &OneForm, x: &Path, xi: &[f64], opts: &PicardOptions) -> Result<YoungOdeSolution> {
    let grid = x.grid().ok_or(Error::GridMismatch)?;
    let d = sigma.state_dim();
    check_dim(d, xi.len())?;
    check_dim(sigma.driver_dim(), x.dim())?;
    let (data, report) = solve_windows(grid.intervals(), d, xi, opts, |a, b, x0, cur| {
        let g: Vec<Vec<f64>> = cur.chunks(d).map(|z| sigma.eval(z)).collect();
        let mut out = Vec::with_capacity(cur.len());
        out.extend_from_slice(x0);
        let mut acc = x0.to_vec();
        for k in 0..b - a {
            let dx = x.increment(a + k, a + k + 1);
            let mut inc = vec![0.0; d];
            apply(&g[k], &dx, &mut inc);
            apply(&g[k + 1], &dx, &mut inc);
            for c in 0..d {
                acc[c] += 0.5 * inc[c];
            }
            out.extend_from_slice(&acc);
        }
        out
    });
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence("young equation iterates diverged".into()));
    }
    if !report.converged {
        log::warn!("young equation: Picard iteration did not reach tolerance (last step {})", report.last_step);
    }
    Ok(YoungOdeSolution { path: Path::on_grid(grid, d, data)?, report })
}
