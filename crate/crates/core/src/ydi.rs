//! Young differential inclusions `dz in F(z) dx`: dyadic approximations,
//! the small-horizon estimates and Cauchy certification across levels.

use crate::error::{check_dim, Error, Result};
use crate::grid::DyadicGrid;
use crate::norms::{holder_seminorm, interpolation_qvar_bound, oscillation_indices, p_variation, p_variation_indices};
use crate::path::{norm, Path};
use crate::sets::SetValuedMap;
use crate::young::apply;

/// Exponents and stopping rules of the inclusion solver.
#[derive(Debug, Clone, PartialEq)]
pub struct YdiConfig {
    /// Hölder exponent of the driver, in `(1/2, 1]`.
    pub alpha: f64,
    /// Working exponent in `(1/(1 + gamma), alpha)`.
    pub beta: f64,
    /// Hölder exponent of the map, in `(1/alpha - 1, 1]`.
    pub gamma: f64,
    /// `p > 1/(gamma beta)`.
    pub p: f64,
    /// `q > p` with `gamma/q + alpha > 1`.
    pub q: f64,
    pub min_level: u32,
    pub max_level: u32,
    /// Certificate threshold between consecutive levels.
    pub residual_tol: f64,
    pub xi: Vec<f64>,
}

impl YdiConfig {
    pub fn validate(&self) -> Result<()> {
        let YdiConfig { alpha, beta, gamma, p, q, .. } = *self;
        let bad = |m: String| Err(Error::ExponentCondition(m));
        if !(alpha > 0.5 && alpha <= 1.0) {
            return bad(format!("alpha = {alpha} outside (1/2, 1]"));
        }
        if !(gamma > 1.0 / alpha - 1.0 && gamma <= 1.0) {
            return bad(format!("gamma = {gamma} outside (1/alpha - 1, 1]"));
        }
        if !(beta > 1.0 / (1.0 + gamma) && beta < alpha) {
            return bad(format!("beta = {beta} outside (1/(1 + gamma), alpha)"));
        }
        if !(p > 1.0 / (gamma * beta)) {
            return bad(format!("p = {p} must exceed 1/(gamma beta) = {}", 1.0 / (gamma * beta)));
        }
        if !(q > p && gamma / q + alpha > 1.0) {
            return bad(format!("q = {q} must exceed p and satisfy gamma/q + alpha > 1"));
        }
        if self.min_level > self.max_level {
            return Err(Error::InvalidParameter("min_level exceeds max_level".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidParameter("residual_tol must be positive".into()));
        }
        if self.xi.is_empty() {
            return Err(Error::InvalidParameter("empty initial condition".into()));
        }
        Ok(())
    }
}

/// The four-term horizon below which the small-time estimates hold.
/// Terms with a vanishing norm are `+inf`.
pub fn horizon_t0(alpha: f64, beta: f64, gamma: f64, f_sup: f64, f_gamma: f64, x_alpha: f64) -> Result<f64> {
    if !(alpha > beta) {
        return Err(Error::ExponentCondition(format!("need alpha > beta, got {alpha} <= {beta}")));
    }
    if f_sup < 0.0 || f_gamma < 0.0 || x_alpha < 0.0 {
        return Err(Error::InvalidParameter("norms must be nonnegative".into()));
    }
    let gap = alpha - beta;
    let power = |base: f64, e: f64| if base == 0.0 { f64::INFINITY } else { base.powf(e) };
    let terms = [
        1.0,
        power(2.0 * f_sup * x_alpha, -2.0 / gap),
        power(2.0 * f_gamma * x_alpha / (1.0 - 2f64.powf(-(alpha + beta * gamma - 1.0))), -2.0 / gap),
        power(f_gamma / (1.0 - 2f64.powf(-gamma * beta)), -4.0 / (gamma * gap)),
    ];
    Ok(terms.into_iter().fold(f64::INFINITY, f64::min))
}

/// A level-`m` approximate solution.
#[derive(Debug, Clone, PartialEq)]
pub struct YdiSolution {
    /// `z` on the level-`m` grid.
    pub z: Path,
    /// Velocity `v` (matrices `d x l`, row-major) at the level-`m` grid
    /// times, left-constant in between; `v_T` repeats the last value.
    pub v: Path,
    pub level: u32,
    /// Number of concatenated windows.
    pub windows: usize,
    /// `max dist(v_t, F(z_t))` over grid times in `[0, T)`.
    pub inclusion_residual: f64,
    /// `dist(v_T, F(z_T))` for the repeated terminal value.
    pub endpoint_gap: f64,
    pub pvar_v: Option<f64>,
    /// `(level, certificate against the previous level)`.
    pub certificates: Vec<(u32, f64)>,
    pub certified: bool,
    /// Horizon of the small-time regime, when computed.
    pub t0: Option<f64>,
    /// Whether each window is no longer than `T0`.
    pub within_t0: bool,
}

/// Run the level-`m` recursion on `windows` equal consecutive windows.
/// Each window restarts the ancestor structure; its first velocity is the
/// projection of the previous velocity (of `0` for the first window).
fn recursion(map: &dyn SetValuedMap, x: &Path, xi: &[f64], window_level: u32) -> Result<(Path, Path, usize)> {
    let grid = x.grid().ok_or(Error::GridMismatch)?;
    let m = grid.level();
    let window_level = window_level.min(m);
    let d = xi.len();
    let l = x.dim();
    let vd = map.meta().value_dim;
    check_dim(d * l, vd)?;
    let n = grid.intervals();
    let per = 1usize << (m - window_level);
    let local = DyadicGrid::new(grid.horizon() / (1u64 << window_level) as f64, m - window_level)?;
    let mut z = vec![0.0; (n + 1) * d];
    let mut v = vec![0.0; (n + 1) * vd];
    z[..d].copy_from_slice(xi);
    let mut prev_v = vec![0.0; vd];
    for i in 0..n {
        let j = i % per;
        let zi = z[i * d..(i + 1) * d].to_vec();
        let anchor = if j == 0 { prev_v.clone() } else { v[(i - j + local.ancestor_index(j)?) * vd..][..vd].to_vec() };
        let vi = map.eval(grid.time(i), &zi).project(&anchor)?;
        let mut next = zi;
        apply(&vi, &x.increment(i, i + 1), &mut next);
        z[(i + 1) * d..(i + 2) * d].copy_from_slice(&next);
        v[i * vd..(i + 1) * vd].copy_from_slice(&vi);
        prev_v = vi;
    }
    v.copy_within((n - 1) * vd..n * vd, n * vd);
    Ok((Path::on_grid(grid, d, z)?, Path::on_grid(grid, vd, v)?, 1usize << window_level))
}

fn residuals(map: &dyn SetValuedMap, z: &Path, v: &Path) -> Result<(f64, f64)> {
    let n = z.len() - 1;
    let mut worst = 0.0f64;
    for i in 0..n {
        worst = worst.max(map.eval(z.time(i), z.point(i)).dist_to(v.point(i))?);
    }
    let gap = map.eval(z.time(n), z.point(n)).dist_to(v.point(n))?;
    Ok((worst, gap))
}

/// The level-`m` scheme on a single window: `v_0 = proj(0, F(xi))` and
/// `v_{t_i} = proj(v_{s(t_i)}, F(z_{t_i}))`, `z_{t_{i+1}} = z_{t_i} + v_{t_i} x_{t_i t_{i+1}}`.
pub fn ydi_approximate(map: &dyn SetValuedMap, x: &Path, xi: &[f64], m: u32) -> Result<YdiSolution> {
    approximate_windows(map, x, xi, m, 0)
}

fn approximate_windows(map: &dyn SetValuedMap, x: &Path, xi: &[f64], m: u32, window_level: u32) -> Result<YdiSolution> {
    let xm = x.coarsen(m)?;
    let (z, v, windows) = recursion(map, &xm, xi, window_level)?;
    let (inclusion_residual, endpoint_gap) = residuals(map, &z, &v)?;
    Ok(YdiSolution {
        z,
        v,
        level: m,
        windows,
        inclusion_residual,
        endpoint_gap,
        pvar_v: None,
        certificates: Vec::new(),
        certified: false,
        t0: None,
        within_t0: false,
    })
}

/// `max dist(v_t, F(z_t))` over grid times in `[0, T)`.
pub fn inclusion_residual(sol: &YdiSolution, map: &dyn SetValuedMap) -> Result<f64> {
    Ok(residuals(map, &sol.z, &sol.v)?.0)
}

/// Largest defect of the dyadic representation
/// `z_st = v_s x_st + sum_k sum_i (v_{s^{k+1}_{2i+1}} - v_{s^k_i}) x_{s^{k+1}_{2i+1} s^k_{i+1}}`
/// over consecutive points `s, t` of level `n`.
pub fn representation_check(sol: &YdiSolution, x: &Path, n: u32) -> Result<f64> {
    let m = sol.level;
    if n > m {
        return Err(Error::InvalidParameter(format!("level {n} above solution level {m}")));
    }
    let xm = x.coarsen(m)?;
    let d = sol.z.dim();
    let stride = 1usize << (m - n);
    let mut worst = 0.0f64;
    for a in (0..sol.z.len() - 1).step_by(stride) {
        let mut rhs = vec![0.0; d];
        apply(sol.v.point(a), &xm.increment(a, a + stride), &mut rhs);
        for k in 0..(m - n) {
            let h = stride >> k;
            for i in 0..(1usize << k) {
                let left = a + i * h;
                let mid = left + h / 2;
                let dv: Vec<f64> = sol.v.point(mid).iter().zip(sol.v.point(left)).map(|(p, q)| p - q).collect();
                apply(&dv, &xm.increment(mid, left + h), &mut rhs);
            }
        }
        let lhs = sol.z.increment(a, a + stride);
        let gap: Vec<f64> = lhs.iter().zip(&rhs).map(|(p, q)| p - q).collect();
        worst = worst.max(norm(&gap));
    }
    Ok(worst)
}

/// One checked inequality: worst left side, matching right side, and the
/// smallest margin `rhs - lhs` over all levels.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub pass: bool,
    pub worst_margin: f64,
    /// `(level, lhs, rhs)` per level.
    pub levels: Vec<(u32, f64, f64)>,
}

impl BoundCheck {
    fn from_levels(levels: Vec<(u32, f64, f64)>) -> Self {
        let worst_margin = levels.iter().map(|(_, l, r)| r - l).fold(f64::INFINITY, f64::min);
        Self { pass: levels.iter().all(|(_, l, r)| l <= r), worst_margin, levels }
    }
}

/// The small-horizon estimates checked on `[0, S]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub horizon: f64,
    pub t0: f64,
    /// `sup |z_st| <= S^((alpha - beta)/2) (S 2^-n)^beta` on level-`n` pairs.
    pub uniform_z: BoundCheck,
    /// `sup Osc(v, [s, t)) <= S^((alpha - beta) gamma / 4) (S 2^-n)^(gamma beta)`.
    pub oscillation: BoundCheck,
    /// `|v|_{p-var, [0, S]} <= (1 - 2^(-gamma beta p))^(-1/p) S^((alpha - beta) gamma / 4 + gamma beta)`.
    pub pvar_bound: BoundCheck,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.uniform_z.pass && self.oscillation.pass && self.pvar_bound.pass
    }
}

/// Norms entering the horizon formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub f_sup: f64,
    pub f_gamma: f64,
    pub x_alpha: f64,
}

/// Check the three small-horizon estimates for `sol` on `[0, S]`, where
/// `S = T 2^-k` is a dyadic sub-horizon with `S <= T0`. Levels `n` are
/// counted relative to `[0, S]`.
pub fn bound_report(sol: &YdiSolution, cfg: &YdiConfig, inputs: &BoundInputs, horizon: f64) -> Result<BoundReport> {
    let t0 = horizon_t0(cfg.alpha, cfg.beta, cfg.gamma, inputs.f_sup, inputs.f_gamma, inputs.x_alpha)?;
    if horizon > t0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} exceeds T0 = {t0}")));
    }
    let grid = sol.z.grid().ok_or(Error::GridMismatch)?;
    let ratio = grid.horizon() / horizon;
    let k = ratio.log2().round();
    if !(k >= 0.0 && (2f64.powf(k) - ratio).abs() <= 1e-9 * ratio && k as u32 <= sol.level) {
        return Err(Error::InvalidParameter(format!("horizon {horizon} is not a dyadic fraction of the grid")));
    }
    let levels = sol.level - k as u32;
    let count = 1usize << levels;
    let s = horizon;
    let (a, b, g) = (cfg.alpha, cfg.beta, cfg.gamma);
    let mut uz = Vec::new();
    let mut osc = Vec::new();
    for n in 0..=levels {
        let stride = 1usize << (levels - n);
        let (mut zmax, mut omax) = (0.0f64, 0.0f64);
        for start in (0..count).step_by(stride) {
            zmax = zmax.max(norm(&sol.z.increment(start, start + stride)));
            omax = omax.max(oscillation_indices(&sol.v, start, start + stride - 1));
        }
        let cell = s * 2f64.powi(-(n as i32));
        uz.push((n, zmax, s.powf((a - b) / 2.0) * cell.powf(b)));
        osc.push((n, omax, s.powf((a - b) * g / 4.0) * cell.powf(g * b)));
    }
    let pv = p_variation_indices(&sol.v, cfg.p, 0, count - 1);
    let rhs = (1.0 / (1.0 - 2f64.powf(-g * b * cfg.p))).powf(1.0 / cfg.p) * s.powf((a - b) * g / 4.0 + g * b);
    Ok(BoundReport {
        horizon,
        t0,
        uniform_z: BoundCheck::from_levels(uz),
        oscillation: BoundCheck::from_levels(osc),
        pvar_bound: BoundCheck::from_levels(vec![(levels, pv, rhs)]),
    })
}

/// Levels `min_level..=max_level` of the scheme with Cauchy certification
/// in `q`-variation between consecutive levels. The horizon is split into
/// `2^k` windows with `T 2^-k <= T0` when needed.
pub fn ydi_solve(map: &dyn SetValuedMap, x: &Path, cfg: &YdiConfig) -> Result<YdiSolution> {
    cfg.validate()?;
    let grid = x.grid().ok_or(Error::GridMismatch)?;
    if cfg.max_level > grid.level() {
        return Err(Error::InvalidParameter(format!(
            "max_level {} above driver level {}",
            cfg.max_level,
            grid.level()
        )));
    }
    let meta = map.meta();
    if (meta.gamma - cfg.gamma).abs() > 1e-12 {
        log::warn!("configured gamma {} differs from the map's declared {}", cfg.gamma, meta.gamma);
    }
    if (0..x.len()).all(|i| x.point(i) == x.point(0)) {
        let mut sol = ydi_approximate(map, x, &cfg.xi, 0)?;
        sol.pvar_v = Some(0.0);
        sol.certified = true;
        return Ok(sol);
    }
    let x_alpha = holder_seminorm(&x.coarsen(cfg.max_level)?, cfg.alpha)?;
    let t0 = horizon_t0(cfg.alpha, cfg.beta, cfg.gamma, meta.sup_bound, meta.gamma_norm, x_alpha)?;
    let mut needed = 0u32;
    while grid.horizon() / 2f64.powi(needed as i32) > t0 && needed < 63 {
        needed += 1;
    }
    let window_level = needed.min(cfg.min_level);
    if needed > window_level {
        log::warn!("T0 = {t0:e} needs 2^{needed} windows; using 2^{window_level}, small-horizon estimates not guaranteed");
    } else if window_level > 0 {
        log::info!("T0 = {t0:e}: concatenating {} windows", 1u64 << window_level);
    }
    let start = cfg.min_level;
    let mut prev: Option<YdiSolution> = None;
    let mut certificates = Vec::new();
    for m in start..=cfg.max_level {
        let sol = approximate_windows(map, x, &cfg.xi, m, window_level)?;
        if let Some(p) = &prev {
            let refined = p.v.refine_constant(m)?;
            let cert = interpolation_qvar_bound(&sol.v, &refined, cfg.p, cfg.q)?;
            certificates.push((m, cert));
            if cert < cfg.residual_tol {
                return Ok(finish(sol, certificates, true, cfg.p, t0, needed <= window_level));
            }
        }
        prev = Some(sol);
    }
    let last = prev.expect("at least one level");
    Ok(finish(last, certificates, false, cfg.p, t0, needed <= window_level))
}

fn finish(mut sol: YdiSolution, certificates: Vec<(u32, f64)>, certified: bool, p: f64, t0: f64, within: bool) -> YdiSolution {
    sol.pvar_v = p_variation(&sol.v, p).ok();
    sol.t0 = Some(t0);
    sol.within_t0 = within;
    sol.certificates = certificates;
    sol.certified = certified;
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{BuiltinMap, FnMap, MapMeta, SetValue};

    fn t0_oracle(alpha: f64, beta: f64, gamma: f64, fs: f64, fg: f64, xa: f64) -> f64 {
        // Independent term-by-term evaluation.
        let e = 2.0 / (alpha - beta);
        let t2 = (2.0 * fs * xa).powf(-e);
        let t3 = (2.0 * fg * xa / (1.0 - 0.5f64.powf(alpha + beta * gamma - 1.0))).powf(-e);
        let t4 = (fg / (1.0 - 0.5f64.powf(gamma * beta))).powf(-2.0 * e / gamma);
        [1.0, t2, t3, t4].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn horizon_examples() {
        assert_eq!(horizon_t0(0.75, 0.625, 1.0, 0.0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(horizon_t0(0.75, 0.625, 1.0, 0.1, 0.1, 1.0).unwrap(), 1.0);
        // each term at least one
        assert!(2.0 * 0.1 <= 1.0 && 0.2 <= 1.0 - 2f64.powf(-0.375) && 0.1 <= 1.0 - 2f64.powf(-0.625));
        let all_one = horizon_t0(0.75, 0.625, 1.0, 1.0, 1.0, 1.0).unwrap();
        let terms = [
            1.0,
            2f64.powi(-16),
            (2.0 / (1.0 - 2f64.powf(-0.375))).powi(-16),
            (1.0 / (1.0 - 2f64.powf(-0.625))).powi(-32),
        ];
        let smallest = terms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((all_one - smallest).abs() <= 1e-12 * smallest);
        assert_eq!(smallest, terms[2]);
        for (fs, fg, xa) in [(0.3, 0.2, 1.5), (2.0, 0.01, 0.5), (0.05, 3.0, 2.0)] {
            let v = horizon_t0(0.8, 0.6, 0.9, fs, fg, xa).unwrap();
            let o = t0_oracle(0.8, 0.6, 0.9, fs, fg, xa);
            assert!((v - o).abs() <= 1e-13 * o);
        }
        assert!(horizon_t0(0.6, 0.6, 1.0, 1.0, 1.0, 1.0).is_err());
    }

    fn config() -> YdiConfig {
        YdiConfig {
            alpha: 0.75,
            beta: 0.625,
            gamma: 1.0,
            p: 2.0,
            q: 3.0,
            min_level: 2,
            max_level: 8,
            residual_tol: 1e-3,
            xi: vec![0.3],
        }
    }

    #[test]
    fn config_validation() {
        assert!(config().validate().is_ok());
        for f in [
            |c: &mut YdiConfig| c.alpha = 0.5,
            |c: &mut YdiConfig| c.gamma = 0.3,
            |c: &mut YdiConfig| c.beta = 0.5,
            |c: &mut YdiConfig| c.p = 1.5,
            |c: &mut YdiConfig| c.q = 2.0,
        ] {
            let mut c = config();
            f(&mut c);
            assert!(matches!(c.validate(), Err(Error::ExponentCondition(_))));
        }
    }

    fn driver(level: u32) -> Path {
        let g = DyadicGrid::new(1.0, level).unwrap();
        Path::from_fn(g, 1, |t| vec![(7.0 * t).sin() * 0.8 + t]).unwrap()
    }

    #[test]
    fn constant_singleton_collapses() {
        let map = BuiltinMap::parse("singleton_sine(amp=0, center=0.4)").unwrap();
        let x = driver(8);
        for m in [0, 3, 8] {
            let s = ydi_approximate(&map, &x, &[1.0], m).unwrap();
            let xm = x.coarsen(m).unwrap();
            for i in 0..s.z.len() {
                assert!((s.z.point(i)[0] - 1.0 - 0.4 * (xm.point(i)[0] - xm.point(0)[0])).abs() < 1e-14);
                assert_eq!(s.v.point(i), &[0.4]);
            }
            assert_eq!(s.inclusion_residual, 0.0);
            for n in 0..=m {
                assert!(representation_check(&s, &x, n).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_driver_returns_immediately() {
        let g = DyadicGrid::new(1.0, 6).unwrap();
        let x = Path::constant(g, &[0.0]);
        let map = BuiltinMap::parse("two_point(amp=0.1)").unwrap();
        let s = ydi_solve(&map, &x, &YdiConfig { max_level: 6, ..config() }).unwrap();
        assert_eq!(s.level, 0);
        assert!(s.certified);
        assert!(s.z.data().iter().all(|v| *v == 0.3));
    }

    #[test]
    fn two_point_keeps_its_branch() {
        let c = 0.2;
        let meta = MapMeta { value_dim: 1, gamma: 1.0, gamma_norm: 0.0, sup_bound: c };
        let map = FnMap::new(meta, move |_, _: &[f64]| SetValue::Cloud(vec![vec![-c], vec![c]]));
        let x = driver(8);
        let s = ydi_solve(&map, &x, &config()).unwrap();
        assert!(s.certified);
        for i in 0..s.z.len() {
            assert_eq!(s.v.point(i), &[-c]);
        }
        let xm = x.coarsen(s.level).unwrap();
        let last = xm.len() - 1;
        assert!((s.z.last()[0] - (0.3 - c * (xm.point(last)[0] - xm.point(0)[0]))).abs() < 1e-14);
    }

    #[test]
    fn bounds_and_representation_on_scaled_fixture() {
        let map = BuiltinMap::parse("two_point(amp=0.05, offset=2, gamma_norm=0.1)").unwrap();
        let raw = driver(10);
        let x = raw.scaled(1.0 / holder_seminorm(&raw, 0.75).unwrap());
        let cfg = YdiConfig { max_level: 10, ..config() };
        let inputs = BoundInputs { f_sup: map.meta().sup_bound, f_gamma: 0.1, x_alpha: 1.0 };
        for m in [4, 7, 10] {
            let s = ydi_approximate(&map, &x, &cfg.xi, m).unwrap();
            assert_eq!(s.inclusion_residual, 0.0);
            let r = bound_report(&s, &cfg, &inputs, 1.0).unwrap();
            assert!(r.pass(), "{r:?}");
            for n in 0..=m {
                assert!(representation_check(&s, &x, n).unwrap() < 1e-12);
            }
        }
        let s = ydi_approximate(&map, &x, &cfg.xi, 6).unwrap();
        assert!(bound_report(&s, &cfg, &BoundInputs { f_sup: 10.0, ..inputs }, 1.0).is_err());
        assert!(bound_report(&s, &cfg, &inputs, 0.3).is_err());
        assert!(bound_report(&s, &cfg, &inputs, 0.25).unwrap().pass());
    }

    #[test]
    fn perturbed_velocity_residual() {
        let map = BuiltinMap::parse("two_point(amp=0.5)").unwrap();
        let x = driver(6);
        let mut s = ydi_approximate(&map, &x, &[0.1], 6).unwrap();
        let delta = 1e-3;
        s.v.point_mut(5)[0] += delta;
        assert!((inclusion_residual(&s, &map).unwrap() - delta).abs() < 1e-15);
    }
}
