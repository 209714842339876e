use crate::error::{check_dim, Error, Result};
use crate::grid::DyadicGrid;
use crate::norms::holder_seminorm;
use crate::path::{norm, Path};

use super::add_outer;

/// A level-2 rough path sampled on a dyadic grid.
///
/// Only the second level over consecutive grid intervals is stored; every
/// other window is obtained by Chen accumulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughPath {
    x: Path,
    /// `second[i * l^2 + a * l + b]` is the `(a, b)` entry on `[t_i, t_{i+1}]`.
    second: Vec<f64>,
    alpha: f64,
}

/// The canonical lift of the piecewise-linear interpolation of `x`:
/// `XX_{t_i t_{i+1}} = (1/2) dX (x) dX` on each interval.
pub fn lift_piecewise_linear(x: &Path, alpha: f64) -> Result<RoughPath> {
    let l = x.dim();
    let n = x.len() - 1;
    let mut second = vec![0.0; n * l * l];
    for i in 0..n {
        let dx = x.increment(i, i + 1);
        let half: Vec<f64> = dx.iter().map(|v| 0.5 * v).collect();
        add_outer(&half, &dx, &mut second[i * l * l..(i + 1) * l * l]);
    }
    RoughPath::checked(x.clone(), second, alpha)
}

impl RoughPath {
    fn checked(x: Path, second: Vec<f64>, alpha: f64) -> Result<Self> {
        if x.grid().is_none() {
            return Err(Error::GridMismatch);
        }
        if !(alpha > 1.0 / 3.0 && alpha <= 0.5) {
            return Err(Error::InvalidParameter(format!("rough path exponent {alpha} outside (1/3, 1/2]")));
        }
        let l = x.dim();
        check_dim((x.len() - 1) * l * l, second.len())?;
        Ok(Self { x, second, alpha })
    }

    /// Accept externally supplied second-level data. The second value is the
    /// largest weak-geometricity defect `|Sym(XX) - dX (x) dX / 2|` over the
    /// intervals.
    pub fn from_parts(x: Path, second: Vec<f64>, alpha: f64) -> Result<(Self, f64)> {
        let r = Self::checked(x, second, alpha)?;
        let defect = r.symmetric_defect();
        if defect > 1e-12 {
            log::warn!("second level is not weakly geometric (defect {defect:e})");
        }
        Ok((r, defect))
    }

    /// Restriction to the first `2^-k` of the horizon.
    pub fn head(&self, k: u32) -> Result<RoughPath> {
        let g = self.grid();
        if k > g.level() {
            return Err(Error::InvalidParameter(format!("cannot drop {k} levels from a level {} path", g.level())));
        }
        let n = g.intervals() >> k;
        let l = self.dim();
        Self::checked(self.x.slice(0, n), self.second[..n * l * l].to_vec(), self.alpha)
    }

    pub fn path(&self) -> &Path {
        &self.x
    }

    pub fn grid(&self) -> DyadicGrid {
        self.x.grid().expect("checked on construction")
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn intervals(&self) -> usize {
        self.x.len() - 1
    }

    /// Second level on `[t_i, t_{i+1}]`.
    pub fn second_on(&self, i: usize) -> &[f64] {
        let l2 = self.dim() * self.dim();
        &self.second[i * l2..(i + 1) * l2]
    }

    pub fn second_data(&self) -> &[f64] {
        &self.second
    }

    /// `(X_{t_i t_j}, XX_{t_i t_j})` by left-to-right Chen accumulation.
    pub fn chen_extend(&self, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if i > j {
            return Err(Error::InvalidParameter(format!("window {i} > {j}")));
        }
        if j > self.intervals() {
            return Err(Error::InvalidParameter(format!("index {j} beyond the grid")));
        }
        let l = self.dim();
        let mut inc = vec![0.0; l];
        let mut area = vec![0.0; l * l];
        for k in i..j {
            let dx = self.x.increment(k, k + 1);
            add_outer(&inc, &dx, &mut area);
            for (a, b) in area.iter_mut().zip(self.second_on(k)) {
                *a += b;
            }
            for (a, b) in inc.iter_mut().zip(&dx) {
                *a += b;
            }
        }
        Ok((inc, area))
    }

    /// Same as [`RoughPath::chen_extend`] with grid times.
    pub fn chen_extend_times(&self, s: f64, t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.grid();
        if s > t {
            return Err(Error::InvalidParameter(format!("window [{s}, {t}] is reversed")));
        }
        self.chen_extend(g.locate(s)?, g.locate(t)?)
    }

    /// Second level on every interval of the dyadic level `level`, combined
    /// pairwise from the finest level.
    pub fn dyadic_second(&self, level: u32) -> Result<Vec<f64>> {
        let m = self.grid().level();
        if level > m {
            return Err(Error::InvalidParameter(format!("level {level} above grid level {m}")));
        }
        let l = self.dim();
        let l2 = l * l;
        let mut cur = self.second.clone();
        let mut stride = 1usize;
        for _ in level..m {
            let count = cur.len() / l2 / 2;
            let mut next = vec![0.0; count * l2];
            for k in 0..count {
                let out = &mut next[k * l2..(k + 1) * l2];
                for c in 0..l2 {
                    out[c] = cur[2 * k * l2 + c] + cur[(2 * k + 1) * l2 + c];
                }
                let a = 2 * k * stride;
                let left = self.x.increment(a, a + stride);
                let right = self.x.increment(a + stride, a + 2 * stride);
                add_outer(&left, &right, out);
            }
            cur = next;
            stride *= 2;
        }
        Ok(cur)
    }

    /// `max |Sym(XX_{t_i t_{i+1}}) - dX (x) dX / 2|` over intervals.
    pub fn symmetric_defect(&self) -> f64 {
        let l = self.dim();
        (0..self.intervals())
            .map(|i| {
                let dx = self.x.increment(i, i + 1);
                let s = self.second_on(i);
                let mut worst = 0.0f64;
                for a in 0..l {
                    for b in 0..l {
                        let sym = 0.5 * (s[a * l + b] + s[b * l + a]);
                        worst = worst.max((sym - 0.5 * dx[a] * dx[b]).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// `(|X|_alpha, |XX|_{2 alpha})` over all pairs of grid points.
    pub fn holder_norms(&self) -> Result<(f64, f64)> {
        let first = holder_seminorm(&self.x, self.alpha)?;
        let n = self.intervals();
        let times = self.x.times();
        let l = self.dim();
        let mut second = 0.0f64;
        for i in 0..n {
            let mut inc = vec![0.0; l];
            let mut area = vec![0.0; l * l];
            for k in i..n {
                let dx = self.x.increment(k, k + 1);
                add_outer(&inc, &dx, &mut area);
                for (a, b) in area.iter_mut().zip(self.second_on(k)) {
                    *a += b;
                }
                for (a, b) in inc.iter_mut().zip(&dx) {
                    *a += b;
                }
                second = second.max(norm(&area) / (times[k + 1] - times[i]).powf(2.0 * self.alpha));
            }
        }
        Ok((first, second))
    }

    /// Column layout of [`RoughPath::to_table`]: `t`, `x1..xl`, then the
    /// second level on `[t_i, t_{i+1}]` row-major as `xx{a}{b}` (1-based,
    /// zero on the last row).
    pub fn table_header(l: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=l).map(|a| format!("x{a}")));
        for a in 1..=l {
            for b in 1..=l {
                h.push(format!("xx{a}_{b}"));
            }
        }
        h
    }

    pub fn to_table(&self) -> Vec<Vec<f64>> {
        let l = self.dim();
        (0..self.x.len())
            .map(|i| {
                let mut row = vec![self.x.time(i)];
                row.extend_from_slice(self.x.point(i));
                if i < self.intervals() {
                    row.extend_from_slice(self.second_on(i));
                } else {
                    row.extend(std::iter::repeat(0.0).take(l * l));
                }
                row
            })
            .collect()
    }

    /// Inverse of [`RoughPath::to_table`]; returns the weak-geometricity
    /// defect alongside.
    pub fn from_table(rows: &[Vec<f64>], l: usize, alpha: f64) -> Result<(Self, f64)> {
        let width = 1 + l + l * l;
        if rows.len() < 2 {
            return Err(Error::Parse("rough path table needs at least two rows".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != width) {
            return Err(Error::DimensionMismatch { expected: width, got: r.len() });
        }
        let n = rows.len() - 1;
        if !n.is_power_of_two() {
            return Err(Error::Parse("rough path table must have 2^m + 1 rows".into()));
        }
        let horizon = rows[n][0];
        let grid = DyadicGrid::new(horizon, n.trailing_zeros())?;
        for (i, r) in rows.iter().enumerate() {
            if (r[0] - grid.time(i)).abs() > 1e-9 * horizon.max(1.0) {
                return Err(Error::NotOnGrid(r[0]));
            }
        }
        let data = rows.iter().flat_map(|r| r[1..=l].iter().copied()).collect();
        let second = rows[..n].iter().flat_map(|r| r[1 + l..].iter().copied()).collect();
        Self::from_parts(Path::on_grid(grid, l, data)?, second, alpha)
    }
}

/// Largest Chen defect `|XX_rt - XX_rs - XX_st - X_rs (x) X_st|` over every
/// grid triple `r <= s <= t`, with all windows built by accumulation from
/// their left end.
pub fn chen_defect_all_triples(rp: &RoughPath) -> f64 {
    let n = rp.intervals();
    let l = rp.dim();
    let l2 = l * l;
    // table[r][k] = XX over [t_r, t_{r+k}]
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    for r in 0..=n {
        let mut row = vec![0.0; (n - r + 1) * l2];
        let mut inc = vec![0.0; l];
        let mut area = vec![0.0; l2];
        for k in r..n {
            let dx = rp.x.increment(k, k + 1);
            add_outer(&inc, &dx, &mut area);
            for (a, b) in area.iter_mut().zip(rp.second_on(k)) {
                *a += b;
            }
            for (a, b) in inc.iter_mut().zip(&dx) {
                *a += b;
            }
            row[(k + 1 - r) * l2..(k + 2 - r) * l2].copy_from_slice(&area);
        }
        table.push(row);
    }
    let x = &rp.x;
    let mut worst = 0.0f64;
    let mut xrs = vec![0.0; l];
    let mut xst = vec![0.0; l];
    for r in 0..=n {
        for s in r..=n {
            for c in 0..l {
                xrs[c] = x.point(s)[c] - x.point(r)[c];
            }
            let rs = &table[r][(s - r) * l2..(s - r + 1) * l2];
            for t in s..=n {
                for c in 0..l {
                    xst[c] = x.point(t)[c] - x.point(s)[c];
                }
                let rt = &table[r][(t - r) * l2..(t - r + 1) * l2];
                let st = &table[s][(t - s) * l2..(t - s + 1) * l2];
                for a in 0..l {
                    for b in 0..l {
                        let k = a * l + b;
                        let d = rt[k] - rs[k] - st[k] - xrs[a] * xst[b];
                        worst = worst.max(d.abs());
                    }
                }
            }
        }
    }
    worst
}

/// Largest difference between grouping three consecutive windows as
/// `((ab)c)` and `(a(bc))` under Chen's product, over all consecutive
/// interval triples. The pair holds the defect of the full second level
/// and of its antisymmetric part.
pub fn regrouping_defect(rp: &RoughPath) -> (f64, f64) {
    let l = rp.dim();
    let combine = |(xa, aa): (&[f64], &[f64]), (xb, ab): (&[f64], &[f64])| {
        let x: Vec<f64> = xa.iter().zip(xb).map(|(p, q)| p + q).collect();
        let mut area: Vec<f64> = aa.iter().zip(ab).map(|(p, q)| p + q).collect();
        add_outer(xa, xb, &mut area);
        (x, area)
    };
    let mut full = 0.0f64;
    let mut anti = 0.0f64;
    for i in 0..rp.intervals().saturating_sub(2) {
        let parts: Vec<(Vec<f64>, &[f64])> =
            (i..i + 3).map(|k| (rp.x.increment(k, k + 1), rp.second_on(k))).collect();
        let ab = combine((&parts[0].0, parts[0].1), (&parts[1].0, parts[1].1));
        let left = combine((&ab.0, &ab.1), (&parts[2].0, parts[2].1));
        let bc = combine((&parts[1].0, parts[1].1), (&parts[2].0, parts[2].1));
        let right = combine((&parts[0].0, parts[0].1), (&bc.0, &bc.1));
        for a in 0..l {
            for b in 0..l {
                let d = left.1[a * l + b] - right.1[a * l + b];
                let dt = left.1[b * l + a] - right.1[b * l + a];
                full = full.max(d.abs());
                anti = anti.max((0.5 * (d - dt)).abs());
            }
        }
    }
    (full, anti)
}
