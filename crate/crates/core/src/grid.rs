//! Periodic n-by-n grid on the unit torus [-1/2, 1/2]^2.

use crate::error::{Error, Result};

/// Uniform periodic grid. Node coordinates are x_j = -1/2 + j/n per axis,
/// and the wavenumber of integer mode m is k = 2*pi*m with
/// m in {-n/2, ..., n/2 - 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Grid { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of sample points.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing 1/n.
    #[inline]
    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Node coordinate along one axis.
    #[inline]
    pub fn coord(&self, j: usize) -> f64 {
        -0.5 + j as f64 / self.n as f64
    }

    /// Integer mode number for a transform index in 0..n.
    #[inline]
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Wavenumber 2*pi*m for a transform index.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(idx) as f64
    }

    /// Largest mode magnitude kept by the 2/3 dealiasing rule.
    #[inline]
    pub fn dealias_band(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// True if the mode pair survives the 2/3 rule: max(|m1|,|m2|) <= n/3.
    #[inline]
    pub fn mode_resolved(&self, m1: i64, m2: i64) -> bool {
        3 * m1.abs().max(m2.abs()) <= self.n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_small() {
        assert!(Grid::new(7).is_err());
        assert!(Grid::new(6).is_err());
        assert!(Grid::new(0).is_err());
        assert!(Grid::new(8).is_ok());
    }

    #[test]
    fn mean_mode_is_zero() {
        let g = Grid::new(16).unwrap();
        assert_eq!(g.wavenumber(0), 0.0);
        assert_eq!(g.mode(0), 0);
    }

    #[test]
    fn modes_cover_expected_range() {
        let g = Grid::new(8).unwrap();
        let modes: Vec<i64> = (0..8).map(|i| g.mode(i)).collect();
        assert_eq!(modes, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn coords_span_torus() {
        let g = Grid::new(8).unwrap();
        assert_eq!(g.coord(0), -0.5);
        assert_eq!(g.coord(4), 0.0);
        assert!(g.coord(7) < 0.5);
    }

    #[test]
    fn dealias_band_matches_two_thirds_rule() {
        let g = Grid::new(64).unwrap();
        assert!(g.mode_resolved(21, 21));
        assert!(!g.mode_resolved(22, 0));
        assert_eq!(g.dealias_band(), 21);
    }
}
