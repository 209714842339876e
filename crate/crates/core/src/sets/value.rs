use std::cmp::Ordering;

use crate::error::{check_dim, Error, Result};
use crate::path::{dist, norm};

use super::hull::min_norm_point;

/// Default number of sample points used by the Hausdorff distance when no
/// exact formula applies.
pub const DEFAULT_HAUSDORFF_RESOLUTION: usize = 1 << 10;

/// A nonempty compact subset of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum SetValue {
    /// Finitely many points (not convex in general).
    Cloud(Vec<Vec<f64>>),
    Ball { center: Vec<f64>, radius: f64 },
    /// Axis-aligned box `lower <= x <= upper`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Convex hull of finitely many vertices.
    Hull(Vec<Vec<f64>>),
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

impl SetValue {
    pub fn cloud(points: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_points(&points)?;
        Ok(SetValue::Cloud(points))
    }

    pub fn hull(vertices: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_points(&vertices)?;
        Ok(SetValue::Hull(vertices))
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || center.is_empty() {
            return Err(Error::InvalidParameter(format!("invalid ball radius {radius}")));
        }
        Ok(SetValue::Ball { center, radius })
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() || lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter("box needs lower <= upper".into()));
        }
        Ok(SetValue::Box { lower, upper })
    }

    /// Singleton `{p}`.
    pub fn point(p: Vec<f64>) -> Self {
        SetValue::Cloud(vec![p])
    }

    fn check_points(points: &[Vec<f64>]) -> Result<()> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty point set".into()))?;
        if first.is_empty() {
            return Err(Error::InvalidParameter("zero-dimensional point".into()));
        }
        for p in points {
            check_dim(first.len(), p.len())?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SetValue::Cloud(p) | SetValue::Hull(p) => p[0].len(),
            SetValue::Ball { center, .. } => center.len(),
            SetValue::Box { lower, .. } => lower.len(),
        }
    }

    pub fn is_convex(&self) -> bool {
        match self {
            SetValue::Cloud(p) => p.len() == 1,
            _ => true,
        }
    }

    /// Largest norm of an element.
    pub fn max_norm(&self) -> f64 {
        match self {
            SetValue::Cloud(p) | SetValue::Hull(p) => p.iter().map(|x| norm(x)).fold(0.0, f64::max),
            SetValue::Ball { center, radius } => norm(center) + radius,
            SetValue::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// A nearest point of the set; ties between cloud points go to the
    /// lexicographically smallest.
    pub fn project(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), p.len())?;
        Ok(match self {
            SetValue::Cloud(points) => {
                let mut best: Option<(&Vec<f64>, f64)> = None;
                for q in points {
                    let d = dist(p, q);
                    best = match best {
                        None => Some((q, d)),
                        Some((b, bd)) => {
                            if d < bd || (d == bd && lex_cmp(q, b) == Ordering::Less) {
                                Some((q, d))
                            } else {
                                Some((b, bd))
                            }
                        }
                    };
                }
                best.expect("nonempty cloud").0.clone()
            }
            SetValue::Ball { center, radius } => {
                let d = dist(p, center);
                if d <= *radius {
                    p.to_vec()
                } else {
                    center
                        .iter()
                        .zip(p)
                        .map(|(c, x)| c + radius * (x - c) / d)
                        .collect()
                }
            }
            SetValue::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| x.clamp(*l, *u))
                .collect(),
            SetValue::Hull(vertices) => {
                let shifted: Vec<Vec<f64>> = vertices
                    .iter()
                    .map(|v| v.iter().zip(p).map(|(a, b)| a - b).collect())
                    .collect();
                let x = min_norm_point(&shifted);
                x.iter().zip(p).map(|(a, b)| a + b).collect()
            }
        })
    }

    /// Euclidean distance from `p` to the set.
    pub fn dist_to(&self, p: &[f64]) -> Result<f64> {
        check_dim(self.dim(), p.len())?;
        Ok(match self {
            SetValue::Cloud(points) => points.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min),
            SetValue::Ball { center, radius } => (dist(p, center) - radius).max(0.0),
            SetValue::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(x, (l, u))| {
                    let e = if x < l { l - x } else if x > u { x - u } else { 0.0 };
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            SetValue::Hull(_) => dist(p, &self.project(p)?),
        })
    }

    /// Element of minimal norm (the projection of the origin).
    pub fn min_norm_selection(&self) -> Vec<f64> {
        self.project(&vec![0.0; self.dim()]).expect("dimension matches")
    }

    /// Vertices of a polytope value (`None` for balls and for boxes of
    /// dimension above 16).
    fn vertices(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            SetValue::Cloud(p) | SetValue::Hull(p) => Some(p.clone()),
            SetValue::Ball { .. } => None,
            SetValue::Box { lower, upper } => {
                let d = lower.len();
                if d > 16 {
                    return None;
                }
                Some(
                    (0..1usize << d)
                        .map(|mask| {
                            (0..d)
                                .map(|k| if mask >> k & 1 == 1 { upper[k] } else { lower[k] })
                                .collect()
                        })
                        .collect(),
                )
            }
        }
    }

    fn interval(&self) -> (f64, f64) {
        match self {
            SetValue::Cloud(p) | SetValue::Hull(p) => p
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[0]), hi.max(x[0]))),
            SetValue::Ball { center, radius } => (center[0] - radius, center[0] + radius),
            SetValue::Box { lower, upper } => (lower[0], upper[0]),
        }
    }

    /// A finite subset used to approximate a supremum over the set.
    ///
    /// Balls contribute the center plus `resolution` points spread over
    /// concentric spheres; boxes a tensor lattice of about `resolution`
    /// points; hulls their vertices, edge points and barycentric mixtures.
    pub fn sample_points(&self, resolution: usize) -> Vec<Vec<f64>> {
        let resolution = resolution.max(8);
        match self {
            SetValue::Cloud(p) => p.clone(),
            SetValue::Ball { center, radius } => {
                let d = center.len();
                let dirs = sphere_directions(d, resolution / 4);
                let mut out = vec![center.clone()];
                for shell in [0.25, 0.5, 0.75, 1.0] {
                    for u in &dirs {
                        out.push(center.iter().zip(u).map(|(c, e)| c + shell * radius * e).collect());
                    }
                }
                out
            }
            SetValue::Box { lower, upper } => {
                let d = lower.len();
                let k = ((resolution as f64).powf(1.0 / d as f64).floor() as usize).max(2);
                let total = k.saturating_pow(d as u32).min(1 << 20);
                (0..total)
                    .map(|mut idx| {
                        (0..d)
                            .map(|c| {
                                let i = idx % k;
                                idx /= k;
                                lower[c] + (upper[c] - lower[c]) * i as f64 / (k - 1) as f64
                            })
                            .collect()
                    })
                    .collect()
            }
            SetValue::Hull(v) => {
                let mut out = v.clone();
                let n = v.len();
                let per_edge = (resolution / (n * n).max(1)).max(2);
                for a in 0..n {
                    for b in a + 1..n {
                        for s in 1..per_edge {
                            let w = s as f64 / per_edge as f64;
                            out.push(v[a].iter().zip(&v[b]).map(|(x, y)| (1.0 - w) * x + w * y).collect());
                        }
                    }
                }
                // deterministic low-discrepancy barycentric mixtures
                let mut h = 0.0f64;
                for _ in 0..resolution {
                    let mut w: Vec<f64> = (0..n)
                        .map(|i| {
                            h = (h + 0.618_033_988_749_894_9 * (i + 1) as f64).fract();
                            -(1.0 - h).max(1e-12).ln()
                        })
                        .collect();
                    let s: f64 = w.iter().sum();
                    w.iter_mut().for_each(|x| *x /= s);
                    let d = v[0].len();
                    out.push((0..d).map(|c| (0..n).map(|i| w[i] * v[i][c]).sum()).collect());
                }
                out
            }
        }
    }

    /// `sup_{a in self} d(a, other)`.
    pub fn directed_hausdorff(&self, other: &SetValue, resolution: usize) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        let sup_over = |pts: &[Vec<f64>]| -> Result<f64> {
            pts.iter().try_fold(0.0f64, |m, a| Ok(m.max(other.dist_to(a)?)))
        };
        if let SetValue::Cloud(points) = self {
            return sup_over(points);
        }
        if self.dim() == 1 {
            let (lo, hi) = self.interval();
            let mut cands = vec![vec![lo], vec![hi]];
            if let SetValue::Cloud(pts) = other {
                let mut xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
                xs.sort_by(f64::total_cmp);
                for w in xs.windows(2) {
                    let mid = 0.5 * (w[0] + w[1]);
                    if mid > lo && mid < hi {
                        cands.push(vec![mid]);
                    }
                }
            }
            return sup_over(&cands);
        }
        if other.is_convex() {
            // the distance to a convex set is convex, so the sup over a
            // polytope is attained at a vertex
            if let Some(vs) = self.vertices() {
                return sup_over(&vs);
            }
            if let (SetValue::Ball { center: c1, radius: r1 }, SetValue::Ball { center: c2, radius: r2 }) =
                (self, other)
            {
                return Ok((dist(c1, c2) + r1 - r2).max(0.0));
            }
        }
        sup_over(&self.sample_points(resolution))
    }

    /// Hausdorff distance, exact for clouds, one-dimensional sets and
    /// polytopes against convex sets; sampled otherwise at the default
    /// resolution.
    pub fn hausdorff(&self, other: &SetValue) -> Result<f64> {
        self.hausdorff_with(other, DEFAULT_HAUSDORFF_RESOLUTION)
    }

    pub fn hausdorff_with(&self, other: &SetValue, resolution: usize) -> Result<f64> {
        Ok(self
            .directed_hausdorff(other, resolution)?
            .max(other.directed_hausdorff(self, resolution)?))
    }
}

/// Deterministic directions on the unit sphere of `R^d`.
fn sphere_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    let count = count.max(2);
    match d {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..count)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let y = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - y * y).sqrt();
                    let th = golden * k as f64;
                    vec![r * th.cos(), y, r * th.sin()]
                })
                .collect()
        }
        _ => {
            let mut out: Vec<Vec<f64>> = Vec::new();
            for k in 0..d {
                for s in [-1.0, 1.0] {
                    let mut e = vec![0.0; d];
                    e[k] = s;
                    out.push(e);
                }
            }
            // Halton-like sequence mapped through a crude Gaussianisation
            let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
            let mut i = 1u64;
            while out.len() < count {
                let v: Vec<f64> = (0..d)
                    .map(|c| {
                        let b = primes[c % primes.len()] + (c / primes.len()) as u64 * 59;
                        let (mut f, mut r, mut n) = (1.0, 0.0, i);
                        while n > 0 {
                            f /= b as f64;
                            r += f * (n % b) as f64;
                            n /= b;
                        }
                        r - 0.5
                    })
                    .collect();
                let nv = norm(&v);
                if nv > 1e-9 {
                    out.push(v.iter().map(|x| x / nv).collect());
                }
                i += 1;
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: f64) -> Vec<f64> {
        vec![v]
    }

    #[test]
    fn dist_examples() {
        let cloud = SetValue::cloud(vec![s(-1.0), s(1.0)]).unwrap();
        assert!((cloud.dist_to(&[0.3]).unwrap() - 0.7).abs() < 1e-15);
        let ball = SetValue::ball(vec![1.0, 2.0], 0.5).unwrap();
        assert_eq!(ball.dist_to(&[1.0, 2.0]).unwrap(), 0.0);
        let b = SetValue::boxed(s(0.0), s(1.0)).unwrap();
        assert_eq!(b.dist_to(&[3.0]).unwrap(), 2.0);
        assert!(matches!(b.dist_to(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn project_examples() {
        let cloud = SetValue::cloud(vec![s(-1.0), s(1.0)]).unwrap();
        assert_eq!(cloud.project(&[0.3]).unwrap(), s(1.0));
        assert_eq!(cloud.project(&[0.0]).unwrap(), s(-1.0));
        let b = SetValue::boxed(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(b.project(&[0.5, 1.5]).unwrap(), vec![0.5, 1.5]);
        assert_eq!(b.project(&[-1.0, 3.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn hausdorff_examples() {
        let a = SetValue::point(s(0.0));
        let b = SetValue::point(s(1.0));
        assert_eq!(a.hausdorff(&b).unwrap(), 1.0);
        let b1 = SetValue::boxed(s(0.0), s(1.0)).unwrap();
        let b2 = SetValue::boxed(s(0.0), s(2.0)).unwrap();
        assert_eq!(b1.hausdorff(&b2).unwrap(), 1.0);
        let c = SetValue::cloud(vec![s(-1.0), s(1.0)]).unwrap();
        assert_eq!(c.hausdorff(&a).unwrap(), 1.0);
        // interval against a two-point cloud: the midpoint is farthest
        let two = SetValue::cloud(vec![s(0.0), s(1.0)]).unwrap();
        assert_eq!(b1.hausdorff(&two).unwrap(), 0.5);
    }

    #[test]
    fn hausdorff_multidimensional() {
        let b1 = SetValue::ball(vec![0.0, 0.0], 1.0).unwrap();
        let b2 = SetValue::ball(vec![3.0, 0.0], 0.5).unwrap();
        assert!((b1.hausdorff(&b2).unwrap() - 3.5).abs() < 1e-15);
        let sq = SetValue::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let pt = SetValue::point(vec![0.0, 0.0]);
        assert!((sq.hausdorff(&pt).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let hull = SetValue::hull(vec![vec![-1.0, -1.0], vec![1.0, -1.0], vec![1.0, 1.0], vec![-1.0, 1.0]])
            .unwrap();
        assert!(sq.hausdorff(&hull).unwrap() < 1e-12);
        // ball vs box: sup of d(., box) over the ball is sqrt(2)*... sampled
        let small = SetValue::boxed(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let h = b1.hausdorff(&small).unwrap();
        assert!((h - 1.0).abs() < 1e-12, "{h}");
    }

    #[test]
    fn min_norm_examples() {
        assert_eq!(SetValue::boxed(s(-1.0), s(2.0)).unwrap().min_norm_selection(), s(0.0));
        let ball = SetValue::ball(vec![3.0, 4.0], 1.0).unwrap();
        let m = ball.min_norm_selection();
        assert!((m[0] - 3.0 * 0.8).abs() < 1e-15 && (m[1] - 4.0 * 0.8).abs() < 1e-15);
        assert_eq!(SetValue::cloud(vec![s(-2.0), s(3.0)]).unwrap().min_norm_selection(), s(-2.0));
    }

    #[test]
    fn hull_projection_lands_in_hull() {
        let h = SetValue::hull(vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]])
            .unwrap();
        let q = h.project(&[1.0, 1.0, 1.0]).unwrap();
        for c in &q {
            assert!((c - 1.0 / 3.0).abs() < 1e-14);
        }
        assert!(h.dist_to(&q).unwrap() < 1e-12);
        assert!(h.dist_to(&[0.1, 0.1, 0.1]).unwrap() < 1e-14);
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(SetValue::cloud(vec![]).is_err());
        assert!(SetValue::ball(vec![0.0], -1.0).is_err());
        assert!(SetValue::boxed(s(1.0), s(0.0)).is_err());
        assert!(SetValue::hull(vec![s(0.0), vec![1.0, 2.0]]).is_err());
    }
}
