use crate::error::{check_dim, Error, Result};
use crate::forms::OneForm;
use crate::path::Path;
use crate::picard::{solve_windows, PicardOptions, PicardReport};

use super::controlled::compensated;
use super::{ControlledPath, RoughPath};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RdeOptions {
    pub picard: PicardOptions,
}

/// Solution of `y = xi + drift + int G(y) dX`.
#[derive(Debug, Clone, PartialEq)]
pub struct RdeSolution {
    /// `(y, G(y))`.
    pub solution: ControlledPath,
    pub report: PicardReport,
    /// `sup |y - xi - drift - int G(y) dX|` recomputed on the whole horizon.
    pub residual: f64,
    /// `sup |y|`, to compare against the declared domain of `G`.
    pub range: f64,
    /// Set when the solution leaves the ball where the bounds of `G` hold.
    pub range_excursion: bool,
}

fn check_inputs(g: &OneForm, rough: &RoughPath, xi: &[f64], drift: Option<&Path>) -> Result<()> {
    check_dim(g.state_dim(), xi.len())?;
    check_dim(g.driver_dim(), rough.dim())?;
    if let Some(dr) = drift {
        check_dim(g.state_dim(), dr.dim())?;
        dr.check_same_times(rough.path())?;
    }
    Ok(())
}

/// `t -> int_0^t G(y) dX` from the compensated germ
/// `G(y_s) X_st + (DG(y_s) y'_s) XX_st` on consecutive intervals.
pub fn one_form_integral(g: &OneForm, rough: &RoughPath, y: &Path, y_prime: &Path) -> Result<Path> {
    let (d, l) = (g.state_dim(), g.driver_dim());
    check_dim(d, y.dim())?;
    check_dim(d * l, y_prime.dim())?;
    y.check_same_times(rough.path())?;
    let n = rough.intervals();
    let mut out = vec![0.0; (n + 1) * d];
    let mut yp_form = vec![0.0; d * l * l];
    for k in 0..n {
        let yk = y.point(k);
        let gy = g.eval(yk);
        let jac = g.jacobian(yk);
        let ypk = y_prime.point(k);
        for a in 0..d * l {
            for kk in 0..l {
                yp_form[a * l + kk] = (0..d).map(|m| jac[a * d + m] * ypk[m * l + kk]).sum();
            }
        }
        let mut mu = vec![0.0; d];
        compensated(&gy, &yp_form, &rough.path().increment(k, k + 1), rough.second_on(k), &mut mu);
        for c in 0..d {
            out[(k + 1) * d + c] = out[k * d + c] + mu[c];
        }
    }
    Path::on_grid(rough.grid(), d, out)
}

/// `(y, y') -> (xi + drift + int G(y) dX, G(y))`, the Picard map.
pub fn picard_map(
    g: &OneForm,
    rough: &RoughPath,
    xi: &[f64],
    drift: Option<&Path>,
    y: &Path,
    y_prime: &Path,
) -> Result<(Path, Path)> {
    check_inputs(g, rough, xi, drift)?;
    let integral = one_form_integral(g, rough, y, y_prime)?;
    let d = xi.len();
    let mut data = integral.data().to_vec();
    for i in 0..y.len() {
        for c in 0..d {
            let dr = drift.map_or(0.0, |p| p.point(i)[c] - p.point(0)[c]);
            data[i * d + c] += xi[c] + dr;
        }
    }
    let gy: Vec<f64> = (0..y.len()).flat_map(|i| g.eval(y.point(i))).collect();
    Ok((Path::on_grid(rough.grid(), d, data)?, Path::on_grid(rough.grid(), d * g.driver_dim(), gy)?))
}

/// Solve `y_t = xi + drift_{0t} + int_0^t G(y) dX` by windowed Picard
/// iteration; the Gubinelli derivative is `G(y)`.
pub fn rde_solve(g: &OneForm, rough: &RoughPath, xi: &[f64], drift: Option<&Path>, opts: &RdeOptions) -> Result<RdeSolution> {
    check_inputs(g, rough, xi, drift)?;
    let (d, l) = (g.state_dim(), g.driver_dim());
    let x = rough.path();
    let (data, report) = solve_windows(rough.intervals(), d, xi, &opts.picard, |a, b, x0, cur| {
        let mut out = Vec::with_capacity(cur.len());
        out.extend_from_slice(x0);
        let mut acc = x0.to_vec();
        for k in 0..b - a {
            let yk = &cur[k * d..(k + 1) * d];
            let gy = g.eval(yk);
            let yp = g.second_order(yk);
            let mut mu = vec![0.0; d];
            compensated(&gy, &yp, &x.increment(a + k, a + k + 1), rough.second_on(a + k), &mut mu);
            for c in 0..d {
                let dr = drift.map_or(0.0, |p| p.point(a + k + 1)[c] - p.point(a + k)[c]);
                acc[c] += mu[c] + dr;
            }
            out.extend_from_slice(&acc);
        }
        out
    });
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence("rough equation iterates diverged".into()));
    }
    let y = Path::on_grid(rough.grid(), d, data)?;
    let gy: Vec<f64> = (0..y.len()).flat_map(|i| g.eval(y.point(i))).collect();
    let y_prime = Path::on_grid(rough.grid(), d * l, gy)?;
    let (image, _) = picard_map(g, rough, xi, drift, &y, &y_prime)?;
    let residual = image.sup_distance(&y)?;
    if !report.converged {
        log::warn!("rough equation: Picard iteration did not reach tolerance (last step {})", report.last_step);
    }
    let range = y.sup_norm();
    let range_excursion = range > g.bounds().domain_radius;
    let alpha = rough.alpha();
    let solution = ControlledPath::new(y, y_prime, alpha, 2.0 * alpha)?;
    Ok(RdeSolution { solution, report, residual, range, range_excursion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicGrid;
    use crate::rough::lift_piecewise_linear;

    #[test]
    fn zero_and_constant_forms() {
        let g = DyadicGrid::new(1.0, 8).unwrap();
        let x = Path::from_fn(g, 2, |t| vec![(4.0 * t).sin(), t * t]).unwrap();
        let r = lift_piecewise_linear(&x, 0.5).unwrap();
        let drift = Path::from_fn(g, 1, |t| vec![3.0 * t]).unwrap();
        let s = rde_solve(&OneForm::zero(1, 2), &r, &[1.0], Some(&drift), &RdeOptions::default()).unwrap();
        for i in 0..g.len() {
            assert!((s.solution.y.point(i)[0] - 1.0 - 3.0 * g.time(i)).abs() < 1e-14);
        }
        let c = OneForm::constant(1, 2, vec![2.0, -1.0]).unwrap();
        let s = rde_solve(&c, &r, &[0.5], None, &RdeOptions::default()).unwrap();
        assert!(s.report.converged && s.report.iterations <= 3);
        for i in 0..g.len() {
            let p = x.point(i);
            let e = 0.5 + 2.0 * (p[0] - x.point(0)[0]) - (p[1] - x.point(0)[1]);
            assert!((s.solution.y.point(i)[0] - e).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_equation_on_smooth_driver() {
        let g = DyadicGrid::new(1.0, 14).unwrap();
        let x = Path::from_fn(g, 1, |t| vec![t.sin()]).unwrap();
        let r = lift_piecewise_linear(&x, 0.5).unwrap();
        let s = rde_solve(&OneForm::parse("linear").unwrap(), &r, &[1.3], None, &RdeOptions::default()).unwrap();
        let err = (0..g.len())
            .map(|i| (s.solution.y.point(i)[0] - 1.3 * g.time(i).sin().exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
        assert!(s.residual < 1e-10);
    }
}
