use crate::error::{check_dim, Error, Result};
use crate::grid::DyadicGrid;

/// A sampled `R^d`-valued path: strictly increasing time stamps with one
/// `d`-vector per stamp, stored row-major in a flat buffer.
///
/// Matrix-valued paths (values in `L(R^l, R^d)`) use the flattened row-major
/// layout `m[i * l + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    times: Vec<f64>,
    dim: usize,
    data: Vec<f64>,
    grid: Option<DyadicGrid>,
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Path {
    pub fn new(times: Vec<f64>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("path dimension must be positive".into()));
        }
        if times.is_empty() {
            return Err(Error::InvalidParameter("path needs at least one sample".into()));
        }
        check_dim(times.len() * dim, data.len())?;
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "time stamps must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, dim, data, grid: None })
    }

    pub fn on_grid(grid: DyadicGrid, dim: usize, data: Vec<f64>) -> Result<Self> {
        let mut p = Self::new(grid.times(), dim, data)?;
        p.grid = Some(grid);
        Ok(p)
    }

    pub fn from_fn(grid: DyadicGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.len() * dim);
        for t in grid.times() {
            let v = f(t);
            check_dim(dim, v.len())?;
            data.extend(v);
        }
        Self::on_grid(grid, dim, data)
    }

    /// Path of scalar samples on a grid.
    pub fn scalar(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        Self::on_grid(grid, 1, values)
    }

    pub fn constant(grid: DyadicGrid, value: &[f64]) -> Self {
        let data = value.iter().copied().cycle().take(value.len() * grid.len()).collect();
        Self::on_grid(grid, value.len(), data).expect("consistent by construction")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn grid(&self) -> Option<DyadicGrid> {
        self.grid
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// `x_j - x_i`.
    pub fn increment(&self, i: usize, j: usize) -> Vec<f64> {
        self.point(j).iter().zip(self.point(i)).map(|(b, a)| b - a).collect()
    }

    pub fn sup_norm(&self) -> f64 {
        (0..self.len()).map(|i| norm(self.point(i))).fold(0.0, f64::max)
    }

    /// Sup distance to another path sampled at the same times.
    pub fn sup_distance(&self, other: &Path) -> Result<f64> {
        self.check_compatible(other)?;
        Ok((0..self.len())
            .map(|i| dist(self.point(i), other.point(i)))
            .fold(0.0, f64::max))
    }

    /// Same dimension and same time stamps.
    pub fn check_compatible(&self, other: &Path) -> Result<()> {
        check_dim(self.dim, other.dim)?;
        self.check_same_times(other)
    }

    /// Same time stamps, any dimensions.
    pub fn check_same_times(&self, other: &Path) -> Result<()> {
        if self.times.len() != other.times.len()
            || self
                .times
                .iter()
                .zip(&other.times)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
        {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Pointwise `self - other`.
    pub fn sub(&self, other: &Path) -> Result<Path> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Path { times: self.times.clone(), dim: self.dim, data, grid: self.grid })
    }

    pub fn scaled(&self, c: f64) -> Path {
        let data = self.data.iter().map(|a| a * c).collect();
        Path { times: self.times.clone(), dim: self.dim, data, grid: self.grid }
    }

    /// Samples `i0..=i1` as a new path (the grid tag is dropped unless the
    /// window is a dyadic sub-horizon starting at zero).
    pub fn slice(&self, i0: usize, i1: usize) -> Path {
        let times = self.times[i0..=i1].to_vec();
        let data = self.data[i0 * self.dim..(i1 + 1) * self.dim].to_vec();
        let grid = self.grid.and_then(|g| {
            let n = i1 - i0;
            if i0 == 0 && n.is_power_of_two() && n <= g.intervals() {
                DyadicGrid::new(self.times[i1], n.trailing_zeros()).ok()
            } else {
                None
            }
        });
        Path { times, dim: self.dim, data, grid }
    }

    /// Single component as a scalar path.
    pub fn component(&self, k: usize) -> Path {
        let data = (0..self.len()).map(|i| self.point(i)[k]).collect();
        Path { times: self.times.clone(), dim: 1, data, grid: self.grid }
    }

    /// Restriction to a coarser dyadic level (every `2^(m - level)`-th sample).
    pub fn coarsen(&self, level: u32) -> Result<Path> {
        let g = self.grid.ok_or(Error::GridMismatch)?;
        if level > g.level() {
            return Err(Error::InvalidParameter(format!(
                "cannot coarsen level {} path to level {level}",
                g.level()
            )));
        }
        let stride = 1usize << (g.level() - level);
        let coarse = g.with_level(level)?;
        let mut data = Vec::with_capacity(coarse.len() * self.dim);
        for i in 0..coarse.len() {
            data.extend_from_slice(self.point(i * stride));
        }
        Path::on_grid(coarse, self.dim, data)
    }

    /// Left-constant resampling onto a finer dyadic level: the value at a new
    /// time is the value at the last old grid point at or before it, and the
    /// terminal value is kept.
    pub fn refine_constant(&self, level: u32) -> Result<Path> {
        let g = self.grid.ok_or(Error::GridMismatch)?;
        if level < g.level() {
            return Err(Error::InvalidParameter(format!(
                "cannot refine level {} path to level {level}",
                g.level()
            )));
        }
        let stride = 1usize << (level - g.level());
        let fine = g.with_level(level)?;
        let mut data = Vec::with_capacity(fine.len() * self.dim);
        for i in 0..fine.len() {
            let src = if i == fine.intervals() { g.intervals() } else { i / stride };
            data.extend_from_slice(self.point(src));
        }
        Path::on_grid(fine, self.dim, data)
    }

    /// Index of the sample at time `t`, within 1e-9 relative tolerance.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.times.last().copied().unwrap_or(1.0).abs().max(1.0);
        let pos = self.times.partition_point(|&s| s < t - tol);
        (pos < self.times.len() && (self.times[pos] - t).abs() <= tol).then_some(pos)
    }
}
