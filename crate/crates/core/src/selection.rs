//! Finite-variation selections of Hölder set-valued maps of time on `[0, 1]`.

use crate::error::{Error, Result};
use crate::grid::{index_level, DyadicGrid};
use crate::norms::{oscillation_indices, p_variation};
use crate::path::{dist, Path};
use crate::sets::TimeSetMap;

/// Admissibility slack for the starting point.
pub const START_TOL: f64 = 1e-12;
/// Membership threshold used by the certificate.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// A level-`m` selection: left-constant on the level-`m` grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub f: Path,
    pub level: u32,
    /// `max dist(f(t), F(t))` over grid times in `[0, 1)`.
    pub membership_residual: f64,
    /// `dist(f(1), F(1))` for the repeated terminal value.
    pub endpoint_gap: f64,
    /// `max (|f(t) - f(s(t))| - ||F||_gamma 2^((1 - M(t)) gamma))` over interior grid times.
    pub step_excess: f64,
}

/// Build the level-`m` selection: `f = xi` on `[0, 2^-m)`, then at each
/// grid time `f(t) = proj(f(s(t)), F(t))`, with the value at `1` repeated.
pub fn select_path(map: &dyn TimeSetMap, xi: &[f64], m: u32) -> Result<SelectionResult> {
    let gap = map.eval(0.0).dist_to(xi)?;
    if gap > START_TOL {
        return Err(Error::NotInSet(gap));
    }
    let grid = DyadicGrid::new(1.0, m)?;
    let n = grid.intervals();
    let d = xi.len();
    let meta = map.meta();
    let mut data = vec![0.0; (n + 1) * d];
    data[..d].copy_from_slice(xi);
    let mut membership = 0.0f64;
    let mut step_excess = f64::NEG_INFINITY;
    for i in 1..n {
        let anc = grid.ancestor_index(i)?;
        let prev = data[anc * d..(anc + 1) * d].to_vec();
        let value = map.eval(grid.time(i));
        let next = value.project(&prev)?;
        membership = membership.max(value.dist_to(&next)?);
        let allowed = meta.gamma_norm * 2f64.powf((1.0 - index_level(i, m) as f64) * meta.gamma);
        step_excess = step_excess.max(dist(&next, &prev) - allowed);
        data[i * d..(i + 1) * d].copy_from_slice(&next);
    }
    data.copy_within((n - 1) * d..n * d, n * d);
    let f = Path::on_grid(grid, d, data)?;
    let endpoint_gap = map.eval(1.0).dist_to(f.last())?;
    Ok(SelectionResult { f, level: m, membership_residual: membership, endpoint_gap, step_excess })
}

/// `(2 ||F||_gamma 2^gamma / (1 - 2^-gamma)) (1 - 2^(1 - gamma q))^(-1/q)`.
pub fn selection_bound(gamma: f64, gamma_norm: f64, q: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} outside (0, 1]")));
    }
    if !(q * gamma > 1.0) {
        return Err(Error::ExponentCondition(format!("q = {q} must exceed 1/gamma = {}", 1.0 / gamma)));
    }
    if gamma_norm < 0.0 {
        return Err(Error::InvalidParameter("negative Hölder constant".into()));
    }
    let lead = 2.0 * gamma_norm * 2f64.powf(gamma) / (1.0 - 2f64.powf(-gamma));
    Ok(lead * (1.0 - 2f64.powf(1.0 - gamma * q)).powf(-1.0 / q))
}

/// Per-level oscillation checks: `(r, lhs, rhs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationCheck {
    pub level: u32,
    /// `max_{t in level r} sup_{s in [t, t + 2^-r)} |f(s) - f(t)|`.
    pub increment: f64,
    pub increment_bound: f64,
    /// `max_{t in level r} Osc(f, [t, t + 2^-r))`.
    pub oscillation: f64,
    pub oscillation_bound: f64,
}

impl OscillationCheck {
    pub fn pass(&self) -> bool {
        self.increment <= self.increment_bound && self.oscillation <= self.oscillation_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionCertificate {
    pub q: f64,
    pub q_variation: f64,
    pub bound_rhs: f64,
    pub membership_residual: f64,
    pub oscillation_checks: Vec<OscillationCheck>,
    pub pass: bool,
}

/// Check membership, the `q`-variation bound and both oscillation bounds
/// at every level `r <= m`, using the map's declared Hölder constant.
pub fn certify_selection(res: &SelectionResult, map: &dyn TimeSetMap, q: f64) -> Result<SelectionCertificate> {
    certify_with_norm(res, map.meta().gamma, map.meta().gamma_norm, q)
}

/// As [`certify_selection`] with an explicit `(gamma, ||F||_gamma)`.
pub fn certify_with_norm(res: &SelectionResult, gamma: f64, gamma_norm: f64, q: f64) -> Result<SelectionCertificate> {
    let bound_rhs = selection_bound(gamma, gamma_norm, q)?;
    let q_variation = p_variation(&res.f, q)?;
    let n = res.f.len() - 1;
    let lead = gamma_norm / (1.0 - 2f64.powf(-gamma));
    let oscillation_checks = (0..=res.level)
        .map(|r| {
            let stride = 1usize << (res.level - r);
            let (mut inc, mut osc) = (0.0f64, 0.0f64);
            for a in (0..n).step_by(stride) {
                for j in a..a + stride {
                    inc = inc.max(dist(res.f.point(j), res.f.point(a)));
                }
                osc = osc.max(oscillation_indices(&res.f, a, a + stride - 1));
            }
            let scale = 2f64.powf(-(r as f64) * gamma);
            OscillationCheck {
                level: r,
                increment: inc,
                increment_bound: lead * scale,
                oscillation: osc,
                oscillation_bound: 2.0 * lead * scale,
            }
        })
        .collect::<Vec<_>>();
    let pass = res.membership_residual <= MEMBERSHIP_TOL
        && q_variation <= bound_rhs
        && oscillation_checks.iter().all(OscillationCheck::pass);
    Ok(SelectionCertificate {
        q,
        q_variation,
        bound_rhs,
        membership_residual: res.membership_residual,
        oscillation_checks,
        pass,
    })
}

/// Sup distance between the left-constant extensions of two selections.
pub fn level_distance(a: &SelectionResult, b: &SelectionResult) -> Result<f64> {
    let level = a.level.max(b.level);
    a.f.refine_constant(level)?.sup_distance(&b.f.refine_constant(level)?)
}

/// `||F||_gamma` measured over all pairs of level-`m` grid times.
pub fn measured_gamma_norm(map: &dyn TimeSetMap, m: u32) -> Result<f64> {
    let grid = DyadicGrid::new(1.0, m)?;
    let values = grid.times().into_iter().map(|t| map.eval(t)).collect::<Vec<_>>();
    let gamma = map.meta().gamma;
    let mut best = 0.0f64;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let h = values[i].hausdorff(&values[j])?;
            best = best.max(h / (grid.time(j) - grid.time(i)).powf(gamma));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{BuiltinMap, FnTimeMap, MapMeta, SetValue};

    fn meta(gamma: f64, gamma_norm: f64) -> MapMeta {
        MapMeta { value_dim: 1, gamma, gamma_norm, sup_bound: 10.0 }
    }

    #[test]
    fn bound_examples() {
        assert_eq!(selection_bound(0.5, 0.0, 3.0).unwrap(), 0.0);
        let b = selection_bound(1.0, 1.0, 2.0).unwrap();
        assert!((b - 8.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((selection_bound(0.7, 2.0, 2.0).unwrap() - 2.0 * selection_bound(0.7, 1.0, 2.0).unwrap()).abs() < 1e-13);
        assert!(selection_bound(0.5, 1.0, 2.0).is_err());
        assert!(selection_bound(0.5, 1.0, 1.5).is_err());
    }

    #[test]
    fn singleton_selects_the_only_point() {
        let map = FnTimeMap::new(meta(1.0, 3.0), |t: f64| SetValue::point(vec![(3.0 * t).sin()]));
        let r = select_path(&map, &[0.0], 6).unwrap();
        for i in 0..r.f.len() - 1 {
            assert_eq!(r.f.point(i)[0], (3.0 * r.f.time(i)).sin());
        }
        assert_eq!(r.membership_residual, 0.0);
        assert!(r.step_excess <= 0.0);
        let c = certify_selection(&r, &map, 2.0).unwrap();
        assert!(c.pass, "{c:?}");
    }

    #[test]
    fn constant_two_point_stays() {
        let map = FnTimeMap::new(meta(1.0, 0.0), |_| SetValue::Cloud(vec![vec![0.0], vec![1.0]]));
        let r = select_path(&map, &[0.0], 5).unwrap();
        assert!(r.f.data().iter().all(|v| *v == 0.0));
        let c = certify_selection(&r, &map, 2.0).unwrap();
        assert_eq!(c.q_variation, 0.0);
        assert!(c.pass);
    }

    #[test]
    fn moving_ball_is_followed() {
        let map = FnTimeMap::new(MapMeta { value_dim: 2, ..meta(1.0, 2.0) }, |t: f64| SetValue::Ball {
            center: vec![t.cos(), 2.0 * t],
            radius: 0.1,
        });
        let r = select_path(&map, &[1.0, 0.0], 7).unwrap();
        assert!(r.membership_residual < 1e-15);
        assert!(certify_selection(&r, &map, 1.5).unwrap().pass);
    }

    #[test]
    fn start_must_be_admissible() {
        let map = FnTimeMap::new(meta(1.0, 0.0), |_| SetValue::point(vec![1.0]));
        assert!(matches!(select_path(&map, &[0.5], 3), Err(Error::NotInSet(_))));
    }

    #[test]
    fn weierstrass_two_point_certificate() {
        let map = BuiltinMap::parse("two_point(shape=weierstrass, gamma=0.8, terms=12, arg=time, offset=1)").unwrap();
        let norm = measured_gamma_norm(&map, 8).unwrap();
        assert!(norm > 0.0 && norm <= map.meta().gamma_norm * (1.0 + 1e-12));
        let xi = TimeSetMap::eval(&map, 0.0).project(&[0.0]).unwrap();
        let q = 1.5 / 0.8;
        let mut prev: Option<SelectionResult> = None;
        for m in 4..=8 {
            let r = select_path(&map, &xi, m).unwrap();
            let c = certify_with_norm(&r, 0.8, norm, q).unwrap();
            assert!(c.pass, "{m}: {c:?}");
            if let Some(p) = &prev {
                assert!(level_distance(p, &r).unwrap().is_finite());
            }
            prev = Some(r);
        }
    }
}
