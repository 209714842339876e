//! Rough differential inclusions `dz in F(t, z) dt + G(z) dX`: a damped
//! fixed-point iteration of `(y, y') -> (xi + int w dt + int G(y) dX, G(y))`
//! where `w` is a causal nearest-point selection of `F(t, y_t)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::forms::OneForm;
use crate::norms::holder_seminorm;
use crate::path::{norm, Path};
use crate::rough::{one_form_integral, picard_map, ControlledPath, RoughPath};
use crate::sets::SetValuedMap;

/// How the first velocity of every grid time is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RdiMode {
    /// Nearest point to the origin; suited to lower semicontinuous maps.
    #[default]
    Lsc,
    /// Minimal-norm element; convex upper semicontinuous maps.
    Usc,
}

impl FromStr for RdiMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsc" => Ok(Self::Lsc),
            "usc" => Ok(Self::Usc),
            other => Err(Error::Parse(format!("unknown mode '{other}' (expected lsc or usc)"))),
        }
    }
}

impl fmt::Display for RdiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lsc => "lsc",
            Self::Usc => "usc",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdiConfig {
    pub xi: Vec<f64>,
    /// Regularity of the rough driver, in `(1/3, 1/2]`.
    pub alpha: f64,
    /// Working exponent in `(1/3, alpha)` with `beta (2 + gamma) > 1`.
    pub beta: f64,
    /// Hölder exponent of the top derivative of `G`.
    pub gamma: f64,
    /// Bound `L` on the norm of every velocity.
    pub velocity_bound: f64,
    /// Cone slope `M > L` used to flag selection jumps.
    pub cone_slope: f64,
    /// Damping weight of the new iterate, in `(0, 1]`.
    pub damping: f64,
    pub max_iters: usize,
    pub fp_tol: f64,
    pub mode: RdiMode,
    /// How many times the horizon may be halved after a failed attempt.
    pub max_halvings: u32,
}

impl RdiConfig {
    pub fn new(xi: Vec<f64>, alpha: f64, velocity_bound: f64) -> Self {
        let beta = (1.0 / 3.0 + alpha) / 2.0;
        Self {
            xi,
            alpha,
            beta,
            gamma: 1.0,
            velocity_bound,
            cone_slope: 2.0 * velocity_bound,
            damping: 0.5,
            max_iters: 200,
            fp_tol: 1e-10,
            mode: RdiMode::Lsc,
            max_halvings: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ExponentCondition(m));
        if !(self.alpha > 1.0 / 3.0 && self.alpha <= 0.5) {
            return bad(format!("alpha = {} outside (1/3, 1/2]", self.alpha));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma = {} outside (0, 1]", self.gamma));
        }
        if !(self.beta > 1.0 / 3.0 && self.beta < self.alpha && self.beta * (2.0 + self.gamma) > 1.0) {
            return bad(format!("beta = {} must lie in (1/3, alpha) with beta (2 + gamma) > 1", self.beta));
        }
        let invalid = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.velocity_bound > 0.0) {
            return invalid("velocity bound must be positive");
        }
        if !(self.cone_slope > self.velocity_bound) {
            return invalid("cone slope must exceed the velocity bound");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return invalid("damping must lie in (0, 1]");
        }
        if !(self.fp_tol > 0.0) || self.max_iters == 0 {
            return invalid("need a positive tolerance and at least one iteration");
        }
        if self.xi.is_empty() {
            return invalid("empty initial condition");
        }
        Ok(())
    }
}

/// Post hoc checks of the ball memberships and the cone condition.
#[derive(Debug, Clone, PartialEq)]
pub struct RdiDiagnostics {
    /// `|z'|_beta + |R|_{2 beta}`.
    pub controlled_norm: f64,
    /// `L` minus the controlled norm.
    pub controlled_margin: f64,
    /// `|z|_beta`.
    pub holder_norm: f64,
    pub holder_margin: f64,
    /// `max |w|`.
    pub velocity_max: f64,
    pub velocity_margin: f64,
    /// Consecutive selections with `|w_{i+1} - w_i| > M dt`.
    pub cone_jumps: usize,
    /// `max |w_{i+1} - w_i| / dt`.
    pub max_jump_rate: f64,
    /// `z_0 = xi` and `z'_0 = G(xi)`.
    pub start_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdiSolution {
    /// `(z, z')` on the grid of `[0, T*]`.
    pub z: ControlledPath,
    /// Absolutely continuous part `x_t = sum w dt`.
    pub drift: Path,
    /// Velocity, constant on grid intervals; the last sample repeats.
    pub velocity: Path,
    pub fixed_point_residual: f64,
    pub inclusion_residual: f64,
    pub iterations: usize,
    pub certified: bool,
    /// Horizon actually solved on.
    pub horizon: f64,
    pub halvings: u32,
    pub diagnostics: RdiDiagnostics,
}

fn left_constant(grid_path: &Path, dim: usize, mut f: impl FnMut(usize) -> Result<Vec<f64>>) -> Result<Path> {
    let n = grid_path.len() - 1;
    let mut data = Vec::with_capacity((n + 1) * dim);
    for i in 0..n {
        let v = f(i)?;
        check_dim(dim, v.len())?;
        data.extend_from_slice(&v);
    }
    data.extend_from_within((n - 1) * dim..n * dim);
    let grid = grid_path.grid().ok_or(Error::GridMismatch)?;
    Path::on_grid(grid, dim, data)
}

/// First selection: `proj(0, F)` in `lsc` mode, the minimal-norm element in `usc` mode.
pub fn seed_selection(map: &dyn SetValuedMap, y: &Path, mode: RdiMode) -> Result<Path> {
    let d = y.dim();
    left_constant(y, d, |i| {
        let value = map.eval(y.time(i), y.point(i));
        match mode {
            RdiMode::Lsc => value.project(&vec![0.0; d]),
            RdiMode::Usc => Ok(value.min_norm_selection()),
        }
    })
}

/// `w(t_i) = proj(prev_w(t_i), F(t_i, y_{t_i}))`, rejecting velocities above `L`.
pub fn phi_selection(map: &dyn SetValuedMap, y: &Path, prev_w: &Path, cfg: &RdiConfig) -> Result<Path> {
    y.check_compatible(prev_w)?;
    let limit = cfg.velocity_bound * (1.0 + 1e-12);
    left_constant(y, y.dim(), |i| {
        let w = map.eval(y.time(i), y.point(i)).project(prev_w.point(i))?;
        let size = norm(&w);
        if size > limit {
            return Err(Error::BoundExceeded { norm: size, bound: cfg.velocity_bound });
        }
        Ok(w)
    })
}

/// `x_{t_i} = sum_{k < i} w_{t_k} (t_{k+1} - t_k)`.
pub fn drift_of(w: &Path) -> Result<Path> {
    let d = w.dim();
    let mut data = vec![0.0; w.len() * d];
    for i in 1..w.len() {
        let dt = w.time(i) - w.time(i - 1);
        for c in 0..d {
            data[i * d + c] = data[(i - 1) * d + c] + w.point(i - 1)[c] * dt;
        }
    }
    Path::new(w.times().to_vec(), d, data).map(|p| match w.grid() {
        Some(g) => Path::on_grid(g, d, p.data().to_vec()).expect("same shape"),
        None => p,
    })
}

fn inclusion_gap(map: &dyn SetValuedMap, z: &Path, w: &Path) -> Result<f64> {
    (0..z.len() - 1).try_fold(0.0f64, |m, i| Ok(m.max(map.eval(z.time(i), z.point(i)).dist_to(w.point(i))?)))
}

fn matching_head(rough: &RoughPath, z: &Path) -> Result<RoughPath> {
    let (rg, zg) = (rough.grid(), z.grid().ok_or(Error::GridMismatch)?);
    if rg.level() < zg.level() {
        return Err(Error::GridMismatch);
    }
    let rp = rough.head(rg.level() - zg.level())?;
    rp.path().check_same_times(z)?;
    Ok(rp)
}

/// `(sup |z - xi - x - int G(z) dX|, max dist(w(t_i), F(t_i, z_{t_i})))`.
/// A longer rough path is restricted to the solution's horizon.
pub fn rdi_residuals(sol: &RdiSolution, map: &dyn SetValuedMap, g: &OneForm, rough: &RoughPath) -> Result<(f64, f64)> {
    let rp = matching_head(rough, &sol.z.y)?;
    let integral = one_form_integral(g, &rp, &sol.z.y, &sol.z.y_prime)?;
    let z = &sol.z.y;
    let d = z.dim();
    let mut fp = 0.0f64;
    for i in 0..z.len() {
        for c in 0..d {
            let expect = z.point(0)[c] + sol.drift.point(i)[c] + integral.point(i)[c];
            fp = fp.max((z.point(i)[c] - expect).abs());
        }
    }
    Ok((fp, inclusion_gap(map, z, &sol.velocity)?))
}

/// Ball and cone checks for a computed solution.
pub fn rdi_diagnostics(
    z: &ControlledPath,
    w: &Path,
    g: &OneForm,
    rough: &RoughPath,
    cfg: &RdiConfig,
) -> Result<RdiDiagnostics> {
    let rp = matching_head(rough, &z.y)?;
    let beta = cfg.beta;
    let remainder = ControlledPath::new(z.y.clone(), z.y_prime.clone(), beta, 2.0 * beta)?.remainder_holder(&rp, 2.0 * beta);
    let controlled_norm = holder_seminorm(&z.y_prime, beta)? + remainder;
    let holder_norm = holder_seminorm(&z.y, beta)?;
    let velocity_max = (0..w.len()).map(|i| norm(w.point(i))).fold(0.0, f64::max);
    let (mut cone_jumps, mut max_jump_rate) = (0usize, 0.0f64);
    for i in 0..w.len().saturating_sub(2) {
        let dt = w.time(i + 1) - w.time(i);
        let jump: Vec<f64> = w.point(i + 1).iter().zip(w.point(i)).map(|(a, b)| a - b).collect();
        let rate = norm(&jump) / dt;
        max_jump_rate = max_jump_rate.max(rate);
        if rate > cfg.cone_slope {
            cone_jumps += 1;
        }
    }
    let start_ok = z.y.point(0) == cfg.xi.as_slice() && z.y_prime.point(0) == g.eval(&cfg.xi).as_slice();
    let l = cfg.velocity_bound;
    Ok(RdiDiagnostics {
        controlled_norm,
        controlled_margin: l - controlled_norm,
        holder_norm,
        holder_margin: l - holder_norm,
        velocity_max,
        velocity_margin: l - velocity_max,
        cone_jumps,
        max_jump_rate,
        start_ok,
    })
}

struct Attempt {
    y: Path,
    y_prime: Path,
    w: Path,
    drift: Path,
    iterations: usize,
    converged: bool,
}

fn attempt(map: &dyn SetValuedMap, g: &OneForm, rp: &RoughPath, cfg: &RdiConfig) -> Result<Attempt> {
    let grid = rp.grid();
    let mut y = Path::constant(grid, &cfg.xi);
    let mut y_prime = Path::constant(grid, &g.eval(&cfg.xi));
    let mut prev_w = seed_selection(map, &y, cfg.mode)?;
    let theta = cfg.damping;
    for it in 1..=cfg.max_iters {
        let w = phi_selection(map, &y, &prev_w, cfg)?;
        let drift = drift_of(&w)?;
        let (py, pyp) = picard_map(g, rp, &cfg.xi, Some(&drift), &y, &y_prime)?;
        let step = py.sup_distance(&y)?.max(pyp.sup_distance(&y_prime)?);
        if !step.is_finite() {
            break;
        }
        if step < cfg.fp_tol {
            return Ok(Attempt { y, y_prime, w, drift, iterations: it, converged: true });
        }
        let mix = |a: &Path, b: &Path| -> Result<Path> {
            let data = a.data().iter().zip(b.data()).map(|(u, v)| (1.0 - theta) * u + theta * v).collect();
            Path::on_grid(grid, a.dim(), data)
        };
        y = mix(&y, &py)?;
        y_prime = mix(&y_prime, &pyp)?;
        y_prime.point_mut(0).copy_from_slice(&g.eval(&cfg.xi));
        prev_w = w;
        log::debug!("fixed-point iteration {it}: step {step:e}");
    }
    let w = phi_selection(map, &y, &prev_w, cfg)?;
    let drift = drift_of(&w)?;
    Ok(Attempt { y, y_prime, w, drift, iterations: cfg.max_iters, converged: false })
}

/// Damped fixed-point iteration on `[0, T]`, halving the horizon after a
/// failed attempt up to `max_halvings` times.
pub fn rdi_fixed_point(map: &dyn SetValuedMap, g: &OneForm, rough: &RoughPath, cfg: &RdiConfig) -> Result<RdiSolution> {
    cfg.validate()?;
    let d = cfg.xi.len();
    check_dim(d, g.state_dim())?;
    check_dim(rough.dim(), g.driver_dim())?;
    check_dim(d, map.meta().value_dim)?;
    if (rough.alpha() - cfg.alpha).abs() > 1e-12 {
        log::warn!("rough path exponent {} differs from configured alpha {}", rough.alpha(), cfg.alpha);
    }
    if cfg.mode == RdiMode::Usc && g.bounds().order < 2 {
        log::warn!("usc mode with a one-form declared only once differentiable");
    }
    let max_halvings = cfg.max_halvings.min(rough.grid().level());
    for k in 0..=max_halvings {
        let rp = rough.head(k)?;
        let a = attempt(map, g, &rp, cfg)?;
        if !a.converged {
            log::info!("no fixed point on horizon {}; halving", rp.grid().horizon());
            continue;
        }
        let z = ControlledPath::new(a.y, a.y_prime, cfg.alpha, 2.0 * cfg.alpha)?;
        let diagnostics = rdi_diagnostics(&z, &a.w, g, &rp, cfg)?;
        let mut sol = RdiSolution {
            z,
            drift: a.drift,
            velocity: a.w,
            fixed_point_residual: f64::NAN,
            inclusion_residual: f64::NAN,
            iterations: a.iterations,
            certified: false,
            horizon: rp.grid().horizon(),
            halvings: k,
            diagnostics,
        };
        let (fp, inc) = rdi_residuals(&sol, map, g, &rp)?;
        sol.fixed_point_residual = fp;
        sol.inclusion_residual = inc;
        sol.certified = fp < cfg.fp_tol && inc < cfg.fp_tol;
        return Ok(sol);
    }
    Err(Error::NoConvergence(format!(
        "no fixed point within {} iterations after {max_halvings} halvings",
        cfg.max_iters
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drivers::{sample_fbm, FbmMethod};
    use crate::grid::DyadicGrid;
    use crate::rough::{lift_piecewise_linear, rde_solve, RdeOptions};
    use crate::sets::{FnMap, MapMeta, SetValue};

    fn meta(sup: f64) -> MapMeta {
        MapMeta { value_dim: 1, gamma: 1.0, gamma_norm: 0.0, sup_bound: sup }
    }

    fn cfg() -> RdiConfig {
        RdiConfig { fp_tol: 1e-12, ..RdiConfig::new(vec![0.5], 0.45, 1.0) }
    }

    fn rough(level: u32) -> RoughPath {
        let g = DyadicGrid::new(1.0, level).unwrap();
        lift_piecewise_linear(&sample_fbm(0.45, 1, g, 3, FbmMethod::Covariance).unwrap(), 0.45).unwrap()
    }

    #[test]
    fn config_rules() {
        assert!(cfg().validate().is_ok());
        assert!(RdiConfig { beta: 0.32, ..cfg() }.validate().is_err());
        assert!(RdiConfig { cone_slope: 1.0, ..cfg() }.validate().is_err());
        assert!(RdiConfig { damping: 0.0, ..cfg() }.validate().is_err());
        assert_eq!("usc".parse::<RdiMode>().unwrap(), RdiMode::Usc);
        assert!("both".parse::<RdiMode>().is_err());
    }

    #[test]
    fn selection_examples() {
        let g = DyadicGrid::new(1.0, 4).unwrap();
        let y = Path::constant(g, &[0.0]);
        let c = FnMap::new(meta(0.3), |_, _: &[f64]| SetValue::point(vec![0.3]));
        let w = phi_selection(&c, &y, &Path::constant(g, &[0.0]), &cfg()).unwrap();
        let x = drift_of(&w).unwrap();
        for i in 0..g.len() {
            assert_eq!(w.point(i), &[0.3]);
            assert!((x.point(i)[0] - 0.3 * g.time(i)).abs() < 1e-15);
        }
        let bx = FnMap::new(meta(1.0), |_, _: &[f64]| SetValue::Box { lower: vec![-1.0], upper: vec![1.0] });
        assert!(seed_selection(&bx, &y, RdiMode::Usc).unwrap().data().iter().all(|v| *v == 0.0));
        let two = FnMap::new(meta(1.0), |_, _: &[f64]| SetValue::Cloud(vec![vec![-1.0], vec![1.0]]));
        let w = phi_selection(&two, &y, &Path::constant(g, &[1.0]), &cfg()).unwrap();
        assert!(w.data().iter().all(|v| *v == 1.0));
        let big = FnMap::new(meta(2.0), |_, _: &[f64]| SetValue::point(vec![2.0]));
        assert!(matches!(phi_selection(&big, &y, &y, &cfg()), Err(Error::BoundExceeded { .. })));
    }

    #[test]
    fn constant_form_one_iteration() {
        let rp = rough(8);
        let zero = FnMap::new(meta(0.0), |_, _: &[f64]| SetValue::point(vec![0.0]));
        let g = OneForm::constant(1, 1, vec![0.7]).unwrap();
        let s = rdi_fixed_point(&zero, &g, &rp, &RdiConfig { damping: 1.0, ..cfg() }).unwrap();
        assert!(s.certified && s.iterations <= 2);
        let x = rp.path();
        for i in 0..x.len() {
            assert!((s.z.y.point(i)[0] - 0.5 - 0.7 * x.point(i)[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn time_singleton_matches_quadrature() {
        let rp = rough(10);
        let f = FnMap::new(meta(1.0), |t: f64, _: &[f64]| SetValue::point(vec![(3.0 * t).cos()]));
        let s = rdi_fixed_point(&f, &OneForm::zero(1, 1), &rp, &cfg()).unwrap();
        assert!(s.certified);
        let h = rp.grid().step();
        // Left-point sums of cos(3t) against the closed form.
        for i in 0..rp.grid().len() {
            let t = rp.grid().time(i);
            let exact = 0.5 + (3.0 * t).sin() / 3.0;
            assert!((s.z.y.point(i)[0] - exact).abs() <= 1.5 * h * t + 1e-12);
        }
    }

    #[test]
    fn stationary_box() {
        let rp = rough(8);
        let bx = FnMap::new(meta(1.0), |_, _: &[f64]| SetValue::Box { lower: vec![-1.0], upper: vec![1.0] });
        let c = RdiConfig { mode: RdiMode::Usc, ..cfg() };
        let s = rdi_fixed_point(&bx, &OneForm::zero(1, 1), &rp, &c).unwrap();
        assert!(s.certified);
        assert!(s.z.y.data().iter().all(|v| *v == 0.5));
        assert!(s.velocity.data().iter().all(|v| *v == 0.0));
        assert_eq!((s.fixed_point_residual, s.inclusion_residual), (0.0, 0.0));
        let mut p = s.clone();
        p.velocity.point_mut(3)[0] = 1.25;
        assert!((rdi_residuals(&p, &bx, &OneForm::zero(1, 1), &rp).unwrap().1 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn zero_velocity_reproduces_rde() {
        let rp = rough(9);
        let g = OneForm::parse("rational(scale=0.1)").unwrap();
        let zero = FnMap::new(meta(0.0), |_, _: &[f64]| SetValue::point(vec![0.0]));
        let s = rdi_fixed_point(&zero, &g, &rp, &cfg()).unwrap();
        assert!(s.certified, "{} {}", s.fixed_point_residual, s.inclusion_residual);
        assert_eq!(s.halvings, 0);
        let r = rde_solve(&g, &rp, &[0.5], None, &RdeOptions::default()).unwrap();
        assert!(s.z.y.sup_distance(&r.solution.y).unwrap() < 1e-10);
        assert!(s.diagnostics.start_ok);
    }
}
