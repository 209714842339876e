use crate::error::{check_dim, Error, Result};
use crate::forms::SmoothMap;
use crate::norms::holder_seminorm;
use crate::path::{norm, Path};
use crate::young::{sew, Germ, SewOptions};

use super::RoughPath;

/// A path `y` controlled by a rough path, with Gubinelli derivative `y'`.
///
/// `y` has dimension `n` and `y'` stores `n x l` matrices row-major,
/// `y'[a * l + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledPath {
    pub y: Path,
    pub y_prime: Path,
    pub alpha: f64,
    /// Declared order of the remainder, `theta > alpha`.
    pub theta: f64,
}

impl ControlledPath {
    pub fn new(y: Path, y_prime: Path, alpha: f64, theta: f64) -> Result<Self> {
        y.check_same_times(&y_prime)?;
        if y_prime.dim() % y.dim() != 0 {
            return Err(Error::DimensionMismatch { expected: y.dim(), got: y_prime.dim() });
        }
        if !(theta > alpha && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("need theta > alpha > 0, got {theta}, {alpha}")));
        }
        Ok(Self { y, y_prime, alpha, theta })
    }

    /// The driver itself as a controlled path, `(X, I)`.
    pub fn of_driver(rough: &RoughPath) -> Self {
        let x = rough.path().clone();
        let l = x.dim();
        let eye: Vec<f64> = (0..l * l).map(|k| if k / l == k % l { 1.0 } else { 0.0 }).collect();
        let y_prime = Path::constant(rough.grid(), &eye);
        let alpha = rough.alpha();
        Self { y: x, y_prime, alpha, theta: 2.0 * alpha }
    }

    pub fn dim(&self) -> usize {
        self.y.dim()
    }

    pub fn driver_dim(&self) -> usize {
        self.y_prime.dim() / self.y.dim()
    }

    /// `R_{t_i t_j} = y_{t_i t_j} - y'_{t_i} X_{t_i t_j}`.
    pub fn remainder(&self, rough: &RoughPath, i: usize, j: usize) -> Vec<f64> {
        let dx = rough.path().increment(i, j);
        let l = dx.len();
        let yp = self.y_prime.point(i);
        self.y
            .increment(i, j)
            .iter()
            .enumerate()
            .map(|(a, v)| v - (0..l).map(|k| yp[a * l + k] * dx[k]).sum::<f64>())
            .collect()
    }

    /// `|R|_theta` over every pair of grid points.
    pub fn remainder_holder(&self, rough: &RoughPath, theta: f64) -> f64 {
        let times = self.y.times();
        let n = self.y.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let r = norm(&self.remainder(rough, i, j));
                worst = worst.max(r / (times[j] - times[i]).powf(theta));
            }
        }
        worst
    }

    /// `|y'|_{theta - alpha} + |R|_theta`.
    pub fn seminorm(&self, rough: &RoughPath) -> Result<f64> {
        Ok(holder_seminorm(&self.y_prime, self.theta - self.alpha)? + self.remainder_holder(rough, self.theta))
    }
}

/// `(f(y), Df(y) y')` with remainder order `min(theta, alpha (1 + eps))`,
/// `eps` being the Hölder exponent of `Df`.
pub fn compose_controlled(f: &dyn SmoothMap, yc: &ControlledPath, eps: f64) -> Result<ControlledPath> {
    let n = yc.dim();
    check_dim(f.in_dim(), n)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("derivative exponent {eps} outside (0, 1]")));
    }
    let domain = f.bounds().domain_radius;
    let reach = yc.y.sup_norm();
    if reach > domain {
        return Err(Error::BoundExceeded { norm: reach, bound: domain });
    }
    let m = f.out_dim();
    let l = yc.driver_dim();
    let len = yc.y.len();
    let mut fy = Vec::with_capacity(len * m);
    let mut fyp = Vec::with_capacity(len * m * l);
    for i in 0..len {
        let y = yc.y.point(i);
        let yp = yc.y_prime.point(i);
        let jac = f.jacobian(y);
        fy.extend(f.eval(y));
        for r in 0..m {
            for k in 0..l {
                fyp.push((0..n).map(|c| jac[r * n + c] * yp[c * l + k]).sum::<f64>());
            }
        }
    }
    let times = yc.y.times().to_vec();
    let (y, y_prime) = match yc.y.grid() {
        Some(g) => (Path::on_grid(g, m, fy)?, Path::on_grid(g, m * l, fyp)?),
        None => (Path::new(times.clone(), m, fy)?, Path::new(times, m * l, fyp)?),
    };
    let theta = yc.theta.min(yc.alpha * (1.0 + eps));
    ControlledPath::new(y, y_prime, yc.alpha, theta)
}

/// Result of [`rough_integral`].
#[derive(Debug, Clone, PartialEq)]
pub struct RoughIntegral {
    /// `(int Y dX, Y)`.
    pub integral: ControlledPath,
    /// `max |int_s^t Y dX - Y_s X_st - Y'_s XX_st| / |t - s|^(alpha + theta)`
    /// over all dyadic windows.
    pub local_constant: f64,
    /// Refinement deltas of the dyadic sums at the horizon.
    pub refinement_deltas: Vec<f64>,
}

/// Compensated germ `Y_s X_st + Y'_s XX_st` for `Y` with values in
/// `L(R^l, R^d)` and `Y'` in `L(R^l, L(R^l, R^d))`, indexed
/// `Y'[(i l + j) l + k]`; the second-order term is
/// `sum_{j,k} Y'_{ij,k} XX^{kj}`.
pub(crate) fn compensated(y: &[f64], yp: &[f64], dx: &[f64], area: &[f64], out: &mut [f64]) {
    let l = dx.len();
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..l {
            acc += y[i * l + j] * dx[j];
            for k in 0..l {
                acc += yp[(i * l + j) * l + k] * area[k * l + j];
            }
        }
        *o += acc;
    }
}

struct RoughGerm<'a> {
    yc: &'a ControlledPath,
    rough: &'a RoughPath,
    /// `pyramid[level]` is the second level on the dyadic intervals of `level`.
    pyramid: Vec<Vec<f64>>,
    d: usize,
}

impl Germ for RoughGerm<'_> {
    fn dim(&self) -> usize {
        self.d
    }
    fn exponents(&self) -> (f64, f64) {
        (self.yc.alpha, self.yc.theta)
    }
    fn eval(&self, i: usize, j: usize) -> Vec<f64> {
        let l = self.rough.dim();
        let mut out = vec![0.0; self.d];
        if i == j {
            return out;
        }
        let span = j - i;
        let m = self.rough.grid().level();
        let area = if span.is_power_of_two() && i % span == 0 {
            let level = m - span.trailing_zeros();
            let k = i / span;
            self.pyramid[level as usize][k * l * l..(k + 1) * l * l].to_vec()
        } else {
            self.rough.chen_extend(i, j).expect("valid window").1
        };
        let dx = self.rough.path().increment(i, j);
        compensated(self.yc.y.point(i), self.yc.y_prime.point(i), &dx, &area, &mut out);
        out
    }
}

/// `int Y dX` for a controlled integrand `(Y, Y')`, sewn from the
/// compensated germ; the result is controlled with derivative `Y`.
pub fn rough_integral(yc: &ControlledPath, rough: &RoughPath) -> Result<RoughIntegral> {
    let l = rough.dim();
    rough.path().check_same_times(&yc.y)?;
    let grid = rough.grid();
    if yc.dim() % l != 0 {
        return Err(Error::DimensionMismatch { expected: l, got: yc.dim() });
    }
    check_dim(yc.dim() * l, yc.y_prime.dim())?;
    let budget = yc.alpha + yc.theta;
    if budget <= 1.0 {
        return Err(Error::ExponentCondition(format!("alpha + theta = {budget} <= 1")));
    }
    let d = yc.dim() / l;
    let m = grid.level();
    let pyramid = (0..=m).map(|k| rough.dyadic_second(k)).collect::<Result<Vec<_>>>()?;
    let germ = RoughGerm { yc, rough, pyramid, d };
    let sewn = sew(&germ, &grid, &SewOptions::default())?;
    let z = sewn.path;

    let mut local = 0.0f64;
    for level in 0..m {
        let stride = 1usize << (m - level);
        for k in 0..(1usize << level) {
            let (i, j) = (k * stride, (k + 1) * stride);
            let mu = germ.eval(i, j);
            let inc = z.increment(i, j);
            let gap: Vec<f64> = inc.iter().zip(&mu).map(|(a, b)| a - b).collect();
            local = local.max(norm(&gap) / (grid.time(j) - grid.time(i)).powf(budget));
        }
    }
    let theta = (2.0 * yc.alpha).min(budget);
    let integral = ControlledPath::new(z, yc.y.clone(), yc.alpha, theta.max(yc.alpha + 1e-12))?;
    Ok(RoughIntegral { integral, local_constant: local, refinement_deltas: sewn.refinement_deltas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{Affine, Identity};
    use crate::grid::DyadicGrid;
    use crate::rough::lift_piecewise_linear;

    fn lifted(level: u32) -> RoughPath {
        let g = DyadicGrid::new(1.0, level).unwrap();
        let x = Path::from_fn(g, 2, |t| vec![t.sin(), t.cos()]).unwrap();
        lift_piecewise_linear(&x, 0.5).unwrap()
    }

    #[test]
    fn compose_identity_constant_linear() {
        let r = lifted(4);
        let yc = ControlledPath::of_driver(&r);
        let same = compose_controlled(&Identity(2), &yc, 1.0).unwrap();
        assert_eq!((&same.y, &same.y_prime), (&yc.y, &yc.y_prime));
        let c = compose_controlled(&Affine::constant(2, vec![1.0, 2.0, 3.0]), &yc, 1.0).unwrap();
        assert!(c.y_prime.data().iter().all(|v| *v == 0.0));
        assert_eq!(c.y.point(7), &[1.0, 2.0, 3.0]);
        let a = Affine::linear(vec![1.0, 2.0, -1.0, 0.5], 2).unwrap();
        let lin = compose_controlled(&a, &yc, 1.0).unwrap();
        // remainder of the original path is mapped linearly by A
        for (i, j) in [(0, 5), (3, 16), (8, 9)] {
            let r0 = yc.remainder(&r, i, j);
            let r1 = lin.remainder(&r, i, j);
            let expect = a.eval(&r0);
            for c in 0..2 {
                assert!((r1[c] - expect[c]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_and_linear_integrands() {
        let g = DyadicGrid::new(1.0, 10).unwrap();
        let x = Path::from_fn(g, 1, |t| vec![t]).unwrap();
        let r = lift_piecewise_linear(&x, 0.5).unwrap();
        let c = ControlledPath::new(Path::constant(g, &[2.0]), Path::constant(g, &[0.0]), 0.5, 1.0).unwrap();
        let i = rough_integral(&c, &r).unwrap();
        assert!((i.integral.y.last()[0] - 2.0).abs() < 1e-14);
        let yc = ControlledPath::of_driver(&r);
        let i = rough_integral(&yc, &r).unwrap();
        for k in 0..g.len() {
            let t = g.time(k);
            assert!((i.integral.y.point(k)[0] - 0.5 * t * t).abs() < 1e-14);
        }
        assert!(i.local_constant < 1e-12);
        assert_eq!(i.integral.y_prime, yc.y);
    }

    #[test]
    fn exponent_budget_is_enforced() {
        let r = lifted(3);
        let mut yc = ControlledPath::of_driver(&r);
        yc.alpha = 0.34;
        yc.theta = 0.5;
        assert!(matches!(rough_integral(&yc, &r), Err(Error::ExponentCondition(_))));
    }
}
