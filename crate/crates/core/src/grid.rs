//! Uniform dyadic partitions of `[0, T]`.
//!
//! Times are carried as `(index, level)` pairs so that membership in a
//! coarser partition, the level function and the ancestor map are exact
//! integer computations. Only conversion to `f64` touches floating point.

use crate::error::{Error, Result};

/// The partition `{ i 2^-level T : 0 <= i <= 2^level }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicGrid {
    horizon: f64,
    level: u32,
}

/// A point of some dyadic partition: `index * 2^-level * T`.
///
/// Equality is on the reduced representation, so `(2, 2)` and `(1, 1)` are
/// the same time.
#[derive(Debug, Clone, Copy)]
pub struct DyadicTime {
    pub index: u64,
    pub level: u32,
}

impl DyadicTime {
    pub fn new(index: u64, level: u32) -> Self {
        Self { index, level }
    }

    /// Smallest level at which this time is a partition point.
    fn reduced(self) -> (u64, u32) {
        if self.index == 0 {
            return (0, 0);
        }
        let tz = self.index.trailing_zeros().min(self.level);
        (self.index >> tz, self.level - tz)
    }

    /// Index of this time in the partition of level `level`, if it belongs to it.
    pub fn index_at(self, level: u32) -> Option<u64> {
        let (idx, lvl) = self.reduced();
        if lvl > level {
            None
        } else {
            Some(idx << (level - lvl))
        }
    }

    pub fn to_f64(self, horizon: f64) -> f64 {
        horizon * (self.index as f64) / (1u64 << self.level) as f64
    }
}

impl PartialEq for DyadicTime {
    fn eq(&self, other: &Self) -> bool {
        self.reduced() == other.reduced()
    }
}

impl Eq for DyadicTime {}

impl DyadicGrid {
    /// Levels above this would overflow the integer time representation.
    pub const MAX_LEVEL: u32 = 40;

    pub fn new(horizon: f64, level: u32) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if level > Self::MAX_LEVEL {
            return Err(Error::InvalidParameter(format!(
                "level {level} exceeds the maximum {}",
                Self::MAX_LEVEL
            )));
        }
        Ok(Self { horizon, level })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of intervals, `2^level`.
    pub fn intervals(&self) -> usize {
        1usize << self.level
    }

    /// Number of points, `2^level + 1`.
    pub fn len(&self) -> usize {
        self.intervals() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.intervals() as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        if i == self.intervals() {
            self.horizon
        } else {
            self.horizon * i as f64 / self.intervals() as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn dyadic(&self, i: usize) -> DyadicTime {
        DyadicTime::new(i as u64, self.level)
    }

    /// The grid of the same horizon at another level.
    pub fn with_level(&self, level: u32) -> Result<Self> {
        Self::new(self.horizon, level)
    }

    /// Locate a floating-point time on the grid, within a relative tolerance of 1e-9 of a step.
    pub fn locate(&self, t: f64) -> Result<usize> {
        let x = t / self.step();
        let i = x.round();
        if i < 0.0 || i > self.intervals() as f64 || (x - i).abs() > 1e-9 {
            return Err(Error::NotOnGrid(t));
        }
        Ok(i as usize)
    }

    fn check_member(&self, t: DyadicTime) -> Result<()> {
        if t.index_at(self.level).is_none() || t.to_f64(1.0) > 1.0 {
            return Err(Error::NotOnGrid(t.to_f64(self.horizon)));
        }
        Ok(())
    }

    /// `M(t)`: the smallest `j` such that `t` belongs to the level-`j` partition.
    pub fn level_of(&self, t: DyadicTime) -> Result<u32> {
        self.check_member(t)?;
        if t.index == 0 {
            return Err(Error::ZeroTime);
        }
        Ok(t.reduced().1)
    }

    /// The ancestor `s(t)`: the largest point of the level `M(t) - 1`
    /// partition strictly before `t`. Points of the level-0 partition other
    /// than zero have ancestor zero.
    pub fn ancestor(&self, t: DyadicTime) -> Result<DyadicTime> {
        let m = self.level_of(t)?;
        if m == 0 {
            return Ok(DyadicTime::new(0, 0));
        }
        let (odd, _) = t.reduced();
        Ok(DyadicTime::new((odd - 1) / 2, m - 1))
    }

    /// Grid index of the ancestor of grid point `i` (`0 < i`).
    pub fn ancestor_index(&self, i: usize) -> Result<usize> {
        let a = self.ancestor(self.dyadic(i))?;
        Ok(a.index_at(self.level).expect("ancestor lies on a coarser level") as usize)
    }
}

/// Dyadic level of a grid index, `M(t_i)` on a grid of level `level`.
pub(crate) fn index_level(i: usize, level: u32) -> u32 {
    if i == 0 {
        return 0;
    }
    level - (i.trailing_zeros()).min(level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_grid_examples() {
        assert_eq!(DyadicGrid::new(1.0, 0).unwrap().times(), vec![0.0, 1.0]);
        assert_eq!(
            DyadicGrid::new(1.0, 2).unwrap().times(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0]
        );
        assert_eq!(DyadicGrid::new(2.0, 1).unwrap().times(), vec![0.0, 1.0, 2.0]);
        assert!(DyadicGrid::new(0.0, 1).is_err());
        assert!(DyadicGrid::new(-1.0, 1).is_err());
    }

    #[test]
    fn level_of_examples() {
        let g = DyadicGrid::new(1.0, 3).unwrap();
        assert_eq!(g.level_of(DyadicTime::new(1, 1)).unwrap(), 1);
        assert_eq!(g.level_of(DyadicTime::new(3, 3)).unwrap(), 3);
        assert_eq!(g.level_of(DyadicTime::new(1, 0)).unwrap(), 0);
        assert_eq!(g.level_of(DyadicTime::new(0, 3)), Err(Error::ZeroTime));
        assert!(matches!(
            g.level_of(DyadicTime::new(1, 4)),
            Err(Error::NotOnGrid(_))
        ));
    }

    #[test]
    fn ancestor_examples() {
        let g = DyadicGrid::new(1.0, 3).unwrap();
        assert_eq!(g.ancestor(DyadicTime::new(3, 3)).unwrap(), DyadicTime::new(1, 2));
        assert_eq!(g.ancestor(DyadicTime::new(1, 1)).unwrap(), DyadicTime::new(0, 0));
        assert_eq!(g.ancestor(DyadicTime::new(5, 3)).unwrap(), DyadicTime::new(1, 1));
        assert_eq!(g.ancestor(DyadicTime::new(1, 0)).unwrap(), DyadicTime::new(0, 0));
        assert_eq!(g.ancestor(DyadicTime::new(0, 0)), Err(Error::ZeroTime));
    }

    #[test]
    fn ancestor_properties_exhaustive() {
        let g = DyadicGrid::new(1.0, 9).unwrap();
        for i in 1..g.len() {
            let t = g.dyadic(i);
            let a = g.ancestor(t).unwrap();
            let ai = a.index_at(g.level()).unwrap() as usize;
            assert!(ai < i);
            let mt = g.level_of(t).unwrap();
            assert_eq!(mt, index_level(i, g.level()));
            if ai > 0 {
                assert!(g.level_of(a).unwrap() + 1 <= mt);
            }
        }
    }

    #[test]
    fn midpoint_ancestor_is_left_end() {
        for n in 0..8u32 {
            for k in 0..(1u64 << n) {
                let u = DyadicTime::new(2 * k + 1, n + 1);
                let g = DyadicGrid::new(3.0, n + 1).unwrap();
                assert_eq!(g.ancestor(u).unwrap(), DyadicTime::new(k, n));
            }
        }
    }

    #[test]
    fn refinement_nests() {
        let g = DyadicGrid::new(1.5, 6).unwrap();
        let fine = g.with_level(7).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.time(i), fine.time(2 * i));
            assert_eq!(g.dyadic(i).index_at(7), Some(2 * i as u64));
        }
    }
}
