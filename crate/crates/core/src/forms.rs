//! Smooth maps with derivatives, and one-forms `G: R^d -> L(R^l, R^d)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Declared size and regularity of a smooth map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBounds {
    /// Number of bounded derivatives the map is declared to have (1 or 2).
    pub order: u32,
    /// `sup |f|`; `INFINITY` when unbounded.
    pub sup: f64,
    /// `sup |Df|`.
    pub sup_derivative: f64,
    /// Lipschitz constant of the top declared derivative.
    pub top_lipschitz: f64,
    /// Radius of the ball on which the bounds hold.
    pub domain_radius: f64,
}

impl SmoothBounds {
    pub const UNBOUNDED: SmoothBounds = SmoothBounds {
        order: 2,
        sup: f64::INFINITY,
        sup_derivative: f64::INFINITY,
        top_lipschitz: f64::INFINITY,
        domain_radius: f64::INFINITY,
    };
}

/// A differentiable map `R^n -> R^m`.
///
/// The Jacobian is row-major: `jac[r * n + c] = d f_r / d y_c`.
pub trait SmoothMap: Send + Sync {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn eval(&self, y: &[f64]) -> Vec<f64>;
    fn jacobian(&self, y: &[f64]) -> Vec<f64>;
    fn bounds(&self) -> SmoothBounds {
        SmoothBounds::UNBOUNDED
    }
}

/// `y -> y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identity(pub usize);

impl SmoothMap for Identity {
    fn in_dim(&self) -> usize {
        self.0
    }
    fn out_dim(&self) -> usize {
        self.0
    }
    fn eval(&self, y: &[f64]) -> Vec<f64> {
        y.to_vec()
    }
    fn jacobian(&self, _y: &[f64]) -> Vec<f64> {
        let n = self.0;
        (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect()
    }
}

/// `y -> A y + b` with `A` row-major `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub matrix: Vec<f64>,
    pub offset: Vec<f64>,
    in_dim: usize,
}

impl Affine {
    pub fn new(matrix: Vec<f64>, offset: Vec<f64>) -> Result<Self> {
        let out = offset.len();
        if out == 0 || matrix.is_empty() || matrix.len() % out != 0 {
            return Err(Error::InvalidParameter("matrix shape does not match the offset".into()));
        }
        let in_dim = matrix.len() / out;
        Ok(Self { matrix, offset, in_dim })
    }

    pub fn linear(matrix: Vec<f64>, out_dim: usize) -> Result<Self> {
        Self::new(matrix, vec![0.0; out_dim])
    }

    /// The constant map `y -> c` on `R^in_dim`.
    pub fn constant(in_dim: usize, value: Vec<f64>) -> Self {
        let matrix = vec![0.0; value.len() * in_dim];
        Self { matrix, offset: value, in_dim }
    }
}

impl SmoothMap for Affine {
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.offset.len()
    }
    fn eval(&self, y: &[f64]) -> Vec<f64> {
        self.offset
            .iter()
            .enumerate()
            .map(|(r, b)| b + (0..self.in_dim).map(|c| self.matrix[r * self.in_dim + c] * y[c]).sum::<f64>())
            .collect()
    }
    fn jacobian(&self, _y: &[f64]) -> Vec<f64> {
        self.matrix.clone()
    }
    fn bounds(&self) -> SmoothBounds {
        let op = self.matrix.iter().map(|a| a * a).sum::<f64>().sqrt();
        let sup = if op == 0.0 {
            self.offset.iter().map(|a| a * a).sum::<f64>().sqrt()
        } else {
            f64::INFINITY
        };
        SmoothBounds { order: 2, sup, sup_derivative: op, top_lipschitz: 0.0, domain_radius: f64::INFINITY }
    }
}

/// Closure-backed smooth map.
pub struct FnSmoothMap<F, J> {
    in_dim: usize,
    out_dim: usize,
    f: F,
    jac: J,
    bounds: SmoothBounds,
}

impl<F, J> FnSmoothMap<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(in_dim: usize, out_dim: usize, f: F, jac: J, bounds: SmoothBounds) -> Self {
        Self { in_dim, out_dim, f, jac, bounds }
    }
}

impl<F, J> SmoothMap for FnSmoothMap<F, J>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
    J: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn in_dim(&self) -> usize {
        self.in_dim
    }
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn eval(&self, y: &[f64]) -> Vec<f64> {
        (self.f)(y)
    }
    fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        (self.jac)(y)
    }
    fn bounds(&self) -> SmoothBounds {
        self.bounds
    }
}

/// Largest deviation between the Jacobian and central finite differences
/// at `y`, relative to `1 + |jac|`.
pub fn jacobian_defect(map: &dyn SmoothMap, y: &[f64], h: f64) -> f64 {
    let (n, m) = (map.in_dim(), map.out_dim());
    let jac = map.jacobian(y);
    let mut worst = 0.0f64;
    for c in 0..n {
        let mut up = y.to_vec();
        let mut down = y.to_vec();
        up[c] += h;
        down[c] -= h;
        let (fu, fd) = (map.eval(&up), map.eval(&down));
        for r in 0..m {
            let fd_est = (fu[r] - fd[r]) / (2.0 * h);
            let exact = jac[r * n + c];
            worst = worst.max((fd_est - exact).abs() / (1.0 + exact.abs()));
        }
    }
    worst
}

/// A one-form `G: R^d -> L(R^l, R^d)`, values row-major `g[i * l + j]`.
#[derive(Clone)]
pub struct OneForm {
    map: Arc<dyn SmoothMap>,
    driver_dim: usize,
}

impl fmt::Debug for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OneForm")
            .field("state_dim", &self.state_dim())
            .field("driver_dim", &self.driver_dim)
            .field("bounds", &self.bounds())
            .finish()
    }
}

impl OneForm {
    pub fn new(map: Arc<dyn SmoothMap>, driver_dim: usize) -> Result<Self> {
        let d = map.in_dim();
        if driver_dim == 0 || d == 0 {
            return Err(Error::InvalidParameter("one-form dimensions must be positive".into()));
        }
        if map.out_dim() != d * driver_dim {
            return Err(Error::DimensionMismatch { expected: d * driver_dim, got: map.out_dim() });
        }
        Ok(Self { map, driver_dim })
    }

    pub fn state_dim(&self) -> usize {
        self.map.in_dim()
    }

    pub fn driver_dim(&self) -> usize {
        self.driver_dim
    }

    pub fn map(&self) -> &dyn SmoothMap {
        self.map.as_ref()
    }

    pub fn eval(&self, y: &[f64]) -> Vec<f64> {
        self.map.eval(y)
    }

    pub fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        self.map.jacobian(y)
    }

    pub fn bounds(&self) -> SmoothBounds {
        self.map.bounds()
    }

    /// Gubinelli derivative of `G(y)` when `y' = G(y)`:
    /// `out[(i l + j) l + k] = sum_m dG_ij/dy_m (y) G_mk(y)`.
    pub fn second_order(&self, y: &[f64]) -> Vec<f64> {
        let (d, l) = (self.state_dim(), self.driver_dim);
        let g = self.eval(y);
        let jac = self.jacobian(y);
        let mut out = vec![0.0; d * l * l];
        for a in 0..d * l {
            for k in 0..l {
                out[a * l + k] = (0..d).map(|m| jac[a * d + m] * g[m * l + k]).sum();
            }
        }
        out
    }

    /// The zero form.
    pub fn zero(d: usize, l: usize) -> Self {
        Self::new(Arc::new(Affine::constant(d, vec![0.0; d * l])), l).expect("consistent")
    }

    /// The constant form `G = C`.
    pub fn constant(d: usize, l: usize, c: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(d * l, c.len())?;
        Self::new(Arc::new(Affine::constant(d, c)), l)
    }

    /// Parse `family(key=value, ...)`.
    ///
    /// Every family acts componentwise, `G_ij(y) = s(y_i)` for all `j`:
    /// `zero`, `constant(value=c)`, `linear(scale=a)` with `s(u) = a u`,
    /// `rational(scale=a)` with `s(u) = a / (1 + u^2)`, and
    /// `sine(scale=a)` with `s(u) = a sin u`. Keys `dim` and `ell` set `d`
    /// and `l` (default 1).
    pub fn parse(expr: &str) -> Result<Self> {
        let expr = expr.trim();
        let (name, body) = match expr.find('(') {
            Some(open) if expr.ends_with(')') => (expr[..open].trim(), &expr[open + 1..expr.len() - 1]),
            None => (expr, ""),
            _ => return Err(Error::Parse(format!("malformed one-form {expr:?}"))),
        };
        let mut kv = BTreeMap::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {item:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("{}: not a number", k.trim())))?;
            if kv.insert(k.trim().to_string(), v).is_some() {
                return Err(Error::Parse(format!("duplicate key {:?}", k.trim())));
            }
        }
        let count = |v: Option<f64>, key: &str| -> Result<usize> {
            match v {
                None => Ok(1),
                Some(x) if x >= 1.0 && x.fract() == 0.0 => Ok(x as usize),
                Some(_) => Err(Error::Parse(format!("{key} must be a positive integer"))),
            }
        };
        let d = count(kv.remove("dim"), "dim")?;
        let l = count(kv.remove("ell"), "ell")?;
        let profile = match name {
            "zero" => Componentwise::Linear(0.0),
            "constant" => Componentwise::Constant(kv.remove("value").unwrap_or(1.0)),
            "linear" => Componentwise::Linear(kv.remove("scale").unwrap_or(1.0)),
            "rational" => Componentwise::Rational(kv.remove("scale").unwrap_or(1.0)),
            "sine" => Componentwise::Sine(kv.remove("scale").unwrap_or(1.0)),
            other => return Err(Error::Parse(format!("unknown one-form family {other:?}"))),
        };
        if let Some(k) = kv.keys().next() {
            return Err(Error::Parse(format!("unknown key {k:?} for {name}")));
        }
        Self::new(Arc::new(ComponentwiseForm { profile, d, l }), l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Componentwise {
    Constant(f64),
    Linear(f64),
    Rational(f64),
    Sine(f64),
}

impl Componentwise {
    fn value(self, u: f64) -> f64 {
        match self {
            Componentwise::Constant(c) => c,
            Componentwise::Linear(a) => a * u,
            Componentwise::Rational(a) => a / (1.0 + u * u),
            Componentwise::Sine(a) => a * u.sin(),
        }
    }

    fn slope(self, u: f64) -> f64 {
        match self {
            Componentwise::Constant(_) => 0.0,
            Componentwise::Linear(a) => a,
            Componentwise::Rational(a) => -2.0 * a * u / ((1.0 + u * u) * (1.0 + u * u)),
            Componentwise::Sine(a) => a * u.cos(),
        }
    }

    /// `(sup |s|, sup |s'|, sup |s''|)`.
    fn bounds(self) -> (f64, f64, f64) {
        match self {
            Componentwise::Constant(c) => (c.abs(), 0.0, 0.0),
            Componentwise::Linear(a) if a == 0.0 => (0.0, 0.0, 0.0),
            Componentwise::Linear(a) => (f64::INFINITY, a.abs(), 0.0),
            Componentwise::Rational(a) => (a.abs(), a.abs() * 3.0 * 3f64.sqrt() / 8.0, 2.0 * a.abs()),
            Componentwise::Sine(a) => (a.abs(), a.abs(), a.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ComponentwiseForm {
    profile: Componentwise,
    d: usize,
    l: usize,
}

impl SmoothMap for ComponentwiseForm {
    fn in_dim(&self) -> usize {
        self.d
    }
    fn out_dim(&self) -> usize {
        self.d * self.l
    }
    fn eval(&self, y: &[f64]) -> Vec<f64> {
        (0..self.d * self.l).map(|a| self.profile.value(y[a / self.l])).collect()
    }
    fn jacobian(&self, y: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut jac = vec![0.0; d * self.l * d];
        for a in 0..d * self.l {
            let i = a / self.l;
            jac[a * d + i] = self.profile.slope(y[i]);
        }
        jac
    }
    fn bounds(&self) -> SmoothBounds {
        let (s0, s1, s2) = self.profile.bounds();
        let fan = (self.l as f64).sqrt();
        SmoothBounds {
            order: 2,
            sup: s0 * fan * (self.d as f64).sqrt(),
            sup_derivative: s1 * fan,
            top_lipschitz: s2 * fan,
            domain_radius: f64::INFINITY,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_and_identity() {
        let a = Affine::linear(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(a.eval(&[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(Identity(2).jacobian(&[0.0, 0.0]), vec![1.0, 0.0, 0.0, 1.0]);
        let c = Affine::constant(3, vec![5.0]);
        assert_eq!(c.eval(&[1.0, 2.0, 3.0]), vec![5.0]);
        assert_eq!(c.bounds().sup, 5.0);
        assert!(Affine::new(vec![1.0; 3], vec![0.0; 2]).is_err());
    }

    #[test]
    fn parsed_forms_have_consistent_jacobians() {
        for e in ["rational(scale=0.1)", "sine(scale=2, dim=2, ell=3)", "linear(scale=-1.5, dim=3)", "constant(value=4)"] {
            let g = OneForm::parse(e).unwrap();
            let y: Vec<f64> = (0..g.state_dim()).map(|i| 0.3 + 0.7 * i as f64).collect();
            assert!(jacobian_defect(g.map(), &y, 1e-6) < 1e-7, "{e}");
        }
        let g = OneForm::parse("rational(scale=0.1)").unwrap();
        assert_eq!(g.eval(&[0.0]), vec![0.1]);
        assert!((g.bounds().sup_derivative - 0.1 * 0.649_519_052_838_329).abs() < 1e-15);
        assert!(OneForm::parse("cosine").is_err());
        assert!(OneForm::parse("linear(scale=1, foo=2)").is_err());
        assert!(OneForm::parse("linear(dim=0.5)").is_err());
    }

    #[test]
    fn second_order_matches_chain_rule() {
        // G(y) = y (scalar): DG G = y.
        let g = OneForm::parse("linear").unwrap();
        assert_eq!(g.second_order(&[3.0]), vec![3.0]);
        let g = OneForm::parse("sine(dim=2, ell=2)").unwrap();
        let y = [0.4, -1.1];
        let s = g.second_order(&y);
        // G_ij = sin y_i, so (DG G)_{ij,k} = cos y_i sin y_i.
        for i in 0..2 {
            for jk in 0..4 {
                assert!((s[i * 4 + jk] - y[i].cos() * y[i].sin()).abs() < 1e-15);
            }
        }
    }
}
