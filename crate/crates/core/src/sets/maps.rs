use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::path::dist;

use super::value::SetValue;

/// Declared regularity and size of a set-valued map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMeta {
    /// Dimension of the set values (`d * l` for matrix-valued maps).
    pub value_dim: usize,
    /// Hölder exponent in the Hausdorff metric.
    pub gamma: f64,
    /// Declared Hölder constant `||F||_gamma`.
    pub gamma_norm: f64,
    /// Declared bound on the norm of every element of every value.
    pub sup_bound: f64,
}

/// A compact-set-valued map `(t, z) -> F(t, z)`.
///
/// Implementations must be pure: the same arguments give the same value.
pub trait SetValuedMap: Send + Sync {
    fn meta(&self) -> MapMeta;
    fn eval(&self, t: f64, z: &[f64]) -> SetValue;
}

/// A compact-set-valued map of time only, `t -> F(t)` on `[0, 1]`.
pub trait TimeSetMap: Send + Sync {
    fn meta(&self) -> MapMeta;
    fn eval(&self, t: f64) -> SetValue;
}

/// Closure-backed map with declared metadata.
pub struct FnMap<F> {
    meta: MapMeta,
    f: F,
}

impl<F> FnMap<F> {
    pub fn new(meta: MapMeta, f: F) -> Self {
        Self { meta, f }
    }
}

impl<F> SetValuedMap for FnMap<F>
where
    F: Fn(f64, &[f64]) -> SetValue + Send + Sync,
{
    fn meta(&self) -> MapMeta {
        self.meta
    }
    fn eval(&self, t: f64, z: &[f64]) -> SetValue {
        (self.f)(t, z)
    }
}

/// Closure-backed time map with declared metadata.
pub struct FnTimeMap<F> {
    meta: MapMeta,
    f: F,
}

impl<F> FnTimeMap<F> {
    pub fn new(meta: MapMeta, f: F) -> Self {
        Self { meta, f }
    }
}

impl<F> TimeSetMap for FnTimeMap<F>
where
    F: Fn(f64) -> SetValue + Send + Sync,
{
    fn meta(&self) -> MapMeta {
        self.meta
    }
    fn eval(&self, t: f64) -> SetValue {
        (self.f)(t)
    }
}

/// `max hausdorff(F(t, a), F(t, b)) / |a - b|^gamma` over the given state
/// pairs: a lower-bound witness for `||F||_gamma`.
pub fn estimate_gamma_norm(map: &dyn SetValuedMap, t: f64, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("empty sample list".into()));
    }
    let gamma = map.meta().gamma;
    pairs.iter().try_fold(0.0f64, |m, (a, b)| {
        let d = dist(a, b);
        if d == 0.0 {
            return Ok(m);
        }
        let h = map.eval(t, a).hausdorff(&map.eval(t, b))?;
        Ok(m.max(h / d.powf(gamma)))
    })
}

/// Same witness for a time map over pairs of times.
pub fn estimate_time_gamma_norm(map: &dyn TimeSetMap, pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("empty sample list".into()));
    }
    let gamma = map.meta().gamma;
    let values: BTreeMap<u64, SetValue> = pairs
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .map(|t| (t.to_bits(), map.eval(t)))
        .collect();
    pairs.iter().try_fold(0.0f64, |m, &(a, b)| {
        if a == b {
            return Ok(m);
        }
        let h = values[&a.to_bits()].hausdorff(&values[&b.to_bits()])?;
        Ok(m.max(h / (a - b).abs().powf(gamma)))
    })
}

/// Profile shared by the builtin families: `s(u)` is either
/// `sin(freq u + phase)` or a lacunary Weierstrass sum
/// `sum_{k < terms} 2^(-k gamma) cos(2^k pi u)`, which is exactly
/// `gamma`-Hölder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Sine { freq: f64, phase: f64 },
    Weierstrass { gamma: f64, terms: u32 },
}

impl Profile {
    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Profile::Sine { freq, phase } => (freq * u + phase).sin(),
            Profile::Weierstrass { gamma, terms } => (0..terms)
                .map(|k| {
                    let f = (1u64 << k) as f64;
                    f.powf(-gamma) * (f * std::f64::consts::PI * u).cos()
                })
                .sum(),
        }
    }

    /// Hölder exponent and a valid Hölder constant of the profile.
    pub fn regularity(&self) -> (f64, f64) {
        match *self {
            Profile::Sine { freq, .. } => (1.0, freq.abs()),
            Profile::Weierstrass { gamma, .. } => {
                let a = 2f64.powf(1.0 - gamma);
                let c = std::f64::consts::PI * a / (a - 1.0) + 2.0 / (1.0 - 2f64.powf(-gamma));
                (gamma, c)
            }
        }
    }

    pub fn sup(&self) -> f64 {
        match *self {
            Profile::Sine { .. } => 1.0,
            Profile::Weierstrass { gamma, terms } => {
                (0..terms).map(|k| ((1u64 << k) as f64).powf(-gamma)).sum()
            }
        }
    }
}

/// What the profile reads: the time, or the state component `k / l` for
/// value component `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Argument {
    State,
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `{ amp s(u) }`.
    SingletonSine,
    /// `{ amp s(u), amp (offset + s(u)) }`.
    TwoPoint { offset: f64 },
    /// `Ball(center + amp s(u), radius)`.
    Ball { radius: f64 },
    /// `Box[center + amp s(u) - half_width, center + amp s(u) + half_width]`.
    Box { half_width: f64 },
    /// Convex hull of `center + amp s(u) +- radius e_i`.
    Hull { radius: f64 },
}

/// A builtin set-valued map, usable both as a state map and as a time map.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinMap {
    pub family: Family,
    pub amp: f64,
    pub center: f64,
    pub profile: Profile,
    pub argument: Argument,
    pub value_dim: usize,
    /// Driver dimension `l`: value component `k` reads state component `k / l`.
    pub ell: usize,
    meta: MapMeta,
    source: String,
}

impl BuiltinMap {
    fn moving(&self, t: f64, z: &[f64]) -> Vec<f64> {
        (0..self.value_dim)
            .map(|k| {
                let u = match self.argument {
                    Argument::Time => t,
                    Argument::State => z.get(k / self.ell).copied().unwrap_or(0.0),
                };
                self.center + self.amp * self.profile.eval(u)
            })
            .collect()
    }

    fn value(&self, t: f64, z: &[f64]) -> SetValue {
        let c = self.moving(t, z);
        match self.family {
            Family::SingletonSine => SetValue::point(c),
            Family::TwoPoint { offset } => {
                let shift = self.amp * offset;
                let other = c.iter().map(|x| x + shift).collect();
                SetValue::Cloud(vec![c, other])
            }
            Family::Ball { radius } => SetValue::Ball { center: c, radius },
            Family::Box { half_width } => SetValue::Box {
                lower: c.iter().map(|x| x - half_width).collect(),
                upper: c.iter().map(|x| x + half_width).collect(),
            },
            Family::Hull { radius } => {
                let n = c.len();
                let mut vs = Vec::with_capacity(2 * n);
                for i in 0..n {
                    for s in [-1.0, 1.0] {
                        let mut v = c.clone();
                        v[i] += s * radius;
                        vs.push(v);
                    }
                }
                SetValue::Hull(vs)
            }
        }
    }

    pub fn meta(&self) -> MapMeta {
        self.meta
    }

    /// The expression this map was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Parse `family(key=value, ...)`.
    ///
    /// Families: `singleton_sine`, `two_point`, `ball`, `box`, `hull`.
    /// Keys: `amp`, `center`, `freq`, `phase`, `offset` (two_point),
    /// `radius` (ball, hull), `half_width` (box), `shape` (`sine` or
    /// `weierstrass`), `gamma` and `terms` (weierstrass), `arg` (`state` or
    /// `time`), `dim` (value dimension), `ell` (driver dimension), and the
    /// declared-norm overrides `gamma_norm` and `sup_bound`.
    pub fn parse(expr: &str) -> Result<Self> {
        let expr = expr.trim();
        let open = expr.find('(').ok_or_else(|| Error::Parse(format!("missing '(' in {expr:?}")))?;
        if !expr.ends_with(')') {
            return Err(Error::Parse(format!("missing ')' in {expr:?}")));
        }
        let name = expr[..open].trim();
        let body = &expr[open + 1..expr.len() - 1];
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {item:?}")))?;
            if kv.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("duplicate key {:?}", k.trim())));
            }
        }
        let mut take = |key: &str| kv.remove(key);
        let num = |v: Option<String>, key: &str, default: f64| -> Result<f64> {
            match v {
                None => Ok(default),
                Some(s) => s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{key}: not a number: {s:?}"))),
            }
        };
        let family = match name {
            "singleton_sine" => Family::SingletonSine,
            "two_point" => Family::TwoPoint { offset: num(take("offset"), "offset", 1.0)? },
            "ball" => Family::Ball { radius: num(take("radius"), "radius", 1.0)? },
            "box" => Family::Box { half_width: num(take("half_width"), "half_width", 1.0)? },
            "hull" => Family::Hull { radius: num(take("radius"), "radius", 1.0)? },
            other => return Err(Error::Parse(format!("unknown map family {other:?}"))),
        };
        match family {
            Family::Ball { radius } | Family::Hull { radius } if !(radius >= 0.0) => {
                return Err(Error::Parse("radius must be nonnegative".into()))
            }
            Family::Box { half_width } if !(half_width >= 0.0) => {
                return Err(Error::Parse("half_width must be nonnegative".into()))
            }
            _ => {}
        }
        let amp = num(take("amp"), "amp", 1.0)?;
        let center = num(take("center"), "center", 0.0)?;
        let shape = take("shape").unwrap_or_else(|| "sine".into());
        let profile = match shape.as_str() {
            "sine" => Profile::Sine {
                freq: num(take("freq"), "freq", 1.0)?,
                phase: num(take("phase"), "phase", 0.0)?,
            },
            "weierstrass" => {
                let gamma = num(take("gamma"), "gamma", 0.5)?;
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::Parse("weierstrass gamma must lie in (0, 1)".into()));
                }
                let terms = num(take("terms"), "terms", 20.0)?;
                if !(terms >= 1.0 && terms <= 52.0 && terms.fract() == 0.0) {
                    return Err(Error::Parse("terms must be an integer in [1, 52]".into()));
                }
                Profile::Weierstrass { gamma, terms: terms as u32 }
            }
            other => return Err(Error::Parse(format!("unknown shape {other:?}"))),
        };
        let argument = match take("arg").as_deref() {
            None | Some("state") => Argument::State,
            Some("time") => Argument::Time,
            Some(other) => return Err(Error::Parse(format!("unknown arg {other:?}"))),
        };
        let value_dim = num(take("dim"), "dim", 1.0)?;
        let ell = num(take("ell"), "ell", 1.0)?;
        if !(value_dim >= 1.0 && value_dim.fract() == 0.0 && ell >= 1.0 && ell.fract() == 0.0) {
            return Err(Error::Parse("dim and ell must be positive integers".into()));
        }
        let (value_dim, ell) = (value_dim as usize, ell as usize);
        if value_dim % ell != 0 {
            return Err(Error::Parse("dim must be a multiple of ell".into()));
        }
        let gamma_override = take("gamma_norm");
        let sup_override = take("sup_bound");
        if let Some(k) = kv.keys().next() {
            return Err(Error::Parse(format!("unknown key {k:?} for {name}")));
        }

        let (gamma, h) = profile.regularity();
        let n = value_dim as f64;
        let fan = match argument {
            Argument::State => (ell as f64).sqrt(),
            Argument::Time => n.sqrt(),
        };
        let gamma_norm = amp.abs() * h * fan;
        let moving = (center.abs() + amp.abs() * profile.sup()) * n.sqrt();
        let sup_bound = match family {
            Family::SingletonSine => moving,
            Family::TwoPoint { offset } => moving + amp.abs() * offset.abs() * n.sqrt(),
            Family::Ball { radius } | Family::Hull { radius } => moving + radius,
            Family::Box { half_width } => moving + half_width * n.sqrt(),
        };
        let meta = MapMeta {
            value_dim,
            gamma,
            gamma_norm: num(gamma_override, "gamma_norm", gamma_norm)?,
            sup_bound: num(sup_override, "sup_bound", sup_bound)?,
        };
        Ok(Self { family, amp, center, profile, argument, value_dim, ell, meta, source: expr.to_string() })
    }
}

impl fmt::Display for BuiltinMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl std::str::FromStr for BuiltinMap {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl SetValuedMap for BuiltinMap {
    fn meta(&self) -> MapMeta {
        BuiltinMap::meta(self)
    }
    fn eval(&self, t: f64, z: &[f64]) -> SetValue {
        self.value(t, z)
    }
}

impl TimeSetMap for BuiltinMap {
    fn meta(&self) -> MapMeta {
        BuiltinMap::meta(self)
    }
    fn eval(&self, t: f64) -> SetValue {
        self.value(t, &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_families() {
        let m = BuiltinMap::parse("two_point(amp=0.05, offset=2)").unwrap();
        let v = SetValuedMap::eval(&m, 0.0, &[std::f64::consts::FRAC_PI_2]);
        assert_eq!(v, SetValue::Cloud(vec![vec![0.05], vec![0.05 * 3.0]]));
        assert!((m.meta().sup_bound - 0.15).abs() < 1e-15);
        assert!((m.meta().gamma_norm - 0.05).abs() < 1e-15);

        let b = BuiltinMap::parse("box(half_width=0.2, amp=0)").unwrap();
        assert_eq!(
            SetValuedMap::eval(&b, 0.3, &[5.0]),
            SetValue::Box { lower: vec![-0.2], upper: vec![0.2] }
        );
        let h = BuiltinMap::parse("hull(radius=1, amp=0, dim=2, ell=2)").unwrap();
        assert!(matches!(SetValuedMap::eval(&h, 0.0, &[0.0]), SetValue::Hull(ref v) if v.len() == 4));
        let w = BuiltinMap::parse("singleton_sine(shape=weierstrass, gamma=0.8, arg=time)").unwrap();
        assert_eq!(w.meta().gamma, 0.8);
        let o = BuiltinMap::parse("ball(radius=0.1, gamma_norm=0.5, sup_bound=2)").unwrap();
        assert_eq!((o.meta().gamma_norm, o.meta().sup_bound), (0.5, 2.0));
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "nope(amp=1)",
            "ball(radius=-1)",
            "ball(radius=1",
            "two_point(amp)",
            "two_point(amp=x)",
            "two_point(colour=3)",
            "ball(amp=1, amp=2)",
            "box(dim=3, ell=2)",
            "singleton_sine(shape=weierstrass, gamma=1.5)",
        ] {
            assert!(matches!(BuiltinMap::parse(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn gamma_norm_estimates() {
        let sine = BuiltinMap::parse("singleton_sine(amp=1)").unwrap();
        let pairs: Vec<(Vec<f64>, Vec<f64>)> =
            (0..200).map(|k| (vec![k as f64 * 0.05], vec![k as f64 * 0.05 + 0.01])).collect();
        let est = estimate_gamma_norm(&sine, 0.0, &pairs).unwrap();
        assert!(est <= 1.0 && est > 0.99);
        let constant = BuiltinMap::parse("singleton_sine(amp=0, center=3)").unwrap();
        assert_eq!(estimate_gamma_norm(&constant, 0.0, &pairs).unwrap(), 0.0);
        let ball = BuiltinMap::parse("ball(radius=1, amp=0)").unwrap();
        assert_eq!(estimate_gamma_norm(&ball, 0.0, &pairs).unwrap(), 0.0);
        assert!(estimate_gamma_norm(&ball, 0.0, &[]).is_err());
    }

    #[test]
    fn weierstrass_constant_dominates_measurement() {
        let m = BuiltinMap::parse("singleton_sine(shape=weierstrass, gamma=0.7, terms=14, arg=time)").unwrap();
        let ts: Vec<f64> = (0..=256).map(|i| i as f64 / 256.0).collect();
        let mut pairs = Vec::new();
        for i in 0..ts.len() {
            for j in i + 1..ts.len() {
                pairs.push((ts[i], ts[j]));
            }
        }
        let est = estimate_time_gamma_norm(&m, &pairs).unwrap();
        assert!(est > 0.5 && est <= m.meta().gamma_norm, "{est}");
    }
}
