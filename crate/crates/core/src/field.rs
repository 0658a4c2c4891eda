//! Sample containers: real scalar/vector fields on the grid and the packed
//! half-spectrum of a real field.

use crate::error::{Error, Result};
use crate::grid::Grid;
use rustfft::num_complex::Complex;

/// Scalar samples on the grid, row-major: `values[i1 * n + i2]` holds the
/// value at (x1, x2) = (coord(i1), coord(i2)).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: Grid) -> Self {
        RealField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        RealField { grid, values: vec![c; grid.len()] }
    }

    /// Builds a field by evaluating `f(x1, x2)` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i1 in 0..n {
            let x1 = grid.coord(i1);
            for i2 in 0..n {
                values.push(f(x1, grid.coord(i2)));
            }
        }
        RealField { grid, values }
    }

    /// Wraps raw samples without validation (hot paths; length must match).
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        RealField { grid, values }
    }

    /// Wraps raw samples, rejecting non-finite entries.
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(values.len(), grid.len()));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { context: "field samples" });
        }
        Ok(RealField { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.grid.n() + i2]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Integral over the torus: the trapezoid rule on a periodic uniform grid
    /// reduces to the mean of the samples (cell area 1/n^2, total area 1).
    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) / self.grid.len() as f64
    }

    /// Mean value; identical to `integral` on the unit torus.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.integral()
    }

    /// L^p norm via grid quadrature, p >= 1.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == 2.0 {
            return self.l2_norm();
        }
        let n2 = self.grid.len() as f64;
        let s = if p == 1.0 {
            pairwise_map_sum(&self.values, |v| v.abs())
        } else {
            pairwise_map_sum(&self.values, |v| v.abs().powf(p))
        };
        (s / n2).powf(1.0 / p)
    }

    pub fn l2_norm(&self) -> f64 {
        (pairwise_map_sum(&self.values, |v| v * v) / self.grid.len() as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Pointwise combination into a new field.
    pub fn zip_map(&self, other: &RealField, mut f: impl FnMut(f64, f64) -> f64) -> RealField {
        debug_assert_eq!(self.grid, other.grid);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        RealField { grid: self.grid, values }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> RealField {
        RealField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, s: f64) -> RealField {
        self.map(|v| v * s)
    }

    pub fn add(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a * b)
    }

    /// Cyclic translation by (s1, s2) grid cells; norms are invariant under it.
    pub fn translate(&self, s1: usize, s2: usize) -> RealField {
        let n = self.grid.n();
        let mut out = RealField::zeros(self.grid);
        for i1 in 0..n {
            for i2 in 0..n {
                let j1 = (i1 + s1) % n;
                let j2 = (i2 + s2) % n;
                out.values[j1 * n + j2] = self.values[i1 * n + i2];
            }
        }
        out
    }
}

/// Two-component vector field; both components share a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: RealField,
    pub y: RealField,
}

impl VectorField {
    pub fn new(x: RealField, y: RealField) -> Result<Self> {
        if x.grid() != y.grid() {
            return Err(Error::GridMismatch(x.grid().n(), y.grid().n()));
        }
        Ok(VectorField { x, y })
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { x: RealField::zeros(grid), y: RealField::zeros(grid) }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.x.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Componentwise integral.
    pub fn integral(&self) -> (f64, f64) {
        (self.x.integral(), self.y.integral())
    }

    /// L^2 norm of the Euclidean magnitude.
    pub fn l2_norm(&self) -> f64 {
        let g = self.grid().len() as f64;
        let s = pairwise_sum2(self.x.values(), self.y.values());
        (s / g).sqrt()
    }

    /// L^p norm of the Euclidean magnitude.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == 2.0 {
            return self.l2_norm();
        }
        let g = self.grid().len() as f64;
        let sx = self.x.values();
        let sy = self.y.values();
        let mut tmp = vec![0.0; sx.len()];
        for i in 0..sx.len() {
            tmp[i] = (sx[i] * sx[i] + sy[i] * sy[i]).sqrt().powf(p);
        }
        (pairwise_sum(&tmp) / g).powf(1.0 / p)
    }

    pub fn max_abs(&self) -> f64 {
        let sx = self.x.values();
        let sy = self.y.values();
        let mut m = 0.0f64;
        for i in 0..sx.len() {
            m = m.max((sx[i] * sx[i] + sy[i] * sy[i]).sqrt());
        }
        m
    }

    pub fn scale(&self, s: f64) -> VectorField {
        VectorField { x: self.x.scale(s), y: self.y.scale(s) }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField { x: self.x.sub(&other.x), y: self.y.sub(&other.y) }
    }
}

/// Packed half-spectrum of a real field. Coefficients follow the convention
/// F(m) = (1/n^2) * sum_j f(x_j) exp(-i k_m . x_j) with x the physical node
/// coordinates, so the (0,0) entry equals the field mean.
///
/// Storage is transposed and Hermitian-packed: `coeffs[j2 * n + j1]` holds
/// mode (m1(j1), m2 = j2) for j2 in 0..=n/2; modes with negative m2 are
/// implied by conjugate symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex<f64>>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField { grid, coeffs: vec![Complex::new(0.0, 0.0); Self::packed_len(grid)] }
    }

    pub(crate) fn from_packed(grid: Grid, coeffs: Vec<Complex<f64>>) -> Self {
        debug_assert_eq!(coeffs.len(), Self::packed_len(grid));
        SpectralField { grid, coeffs }
    }

    #[inline]
    pub(crate) fn packed_len(grid: Grid) -> usize {
        (grid.n() / 2 + 1) * grid.n()
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub(crate) fn packed(&self) -> &[Complex<f64>] {
        &self.coeffs
    }

    #[inline]
    pub(crate) fn packed_mut(&mut self) -> &mut [Complex<f64>] {
        &mut self.coeffs
    }

    /// Coefficient of integer mode (m1, m2), m in {-n/2, ..., n/2 - 1}.
    pub fn coeff(&self, m1: i64, m2: i64) -> Complex<f64> {
        let n = self.grid.n() as i64;
        assert!(m1 >= -n / 2 && m1 < n / 2 && m2 >= -n / 2 && m2 < n / 2);
        if m2 >= 0 {
            let j1 = m1.rem_euclid(n) as usize;
            self.coeffs[m2 as usize * self.grid.n() + j1]
        } else {
            // Conjugate partner; m2 = -n/2 maps onto the stored n/2 row.
            let j2 = (-m2) as usize;
            let j1 = (-m1).rem_euclid(n) as usize;
            self.coeffs[j2 * self.grid.n() + j1].conj()
        }
    }

    /// Mean of the represented field.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Sum of |F(m)|^2 over all modes (conjugate pairs counted twice), which
    /// equals the squared L^2 norm of the field by Parseval.
    pub fn energy(&self) -> f64 {
        let n = self.grid.n();
        let half = n / 2;
        let mut total = 0.0;
        for j2 in 0..=half {
            // Rows 0 and n/2 represent themselves; others also stand for -m2.
            let w = if j2 == 0 || j2 == half { 1.0 } else { 2.0 };
            let row = &self.coeffs[j2 * n..(j2 + 1) * n];
            let mut s = 0.0;
            for c in row {
                s += c.norm_sqr();
            }
            total += w * s;
        }
        total
    }
}

/// Deterministic pairwise summation (fixed reduction tree).
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        let mut s = 0.0;
        for &x in v {
            s += x;
        }
        return s;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

fn pairwise_map_sum(v: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    // Map into fixed-size chunks, then pairwise-reduce the partials.
    let mut partials = Vec::with_capacity(v.len() / 32 + 1);
    for chunk in v.chunks(32) {
        let mut s = 0.0;
        for &x in chunk {
            s += f(x);
        }
        partials.push(s);
    }
    pairwise_sum(&partials)
}

fn pairwise_sum2(a: &[f64], b: &[f64]) -> f64 {
    let mut partials = Vec::with_capacity(a.len() / 32 + 1);
    for (ca, cb) in a.chunks(32).zip(b.chunks(32)) {
        let mut s = 0.0;
        for i in 0..ca.len() {
            s += ca[i] * ca[i] + cb[i] * cb[i];
        }
        partials.push(s);
    }
    pairwise_sum(&partials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_quadrature() {
        let g = Grid::new(8).unwrap();
        let f = RealField::constant(g, 3.0);
        assert!((f.integral() - 3.0).abs() < 1e-15);
        assert!((f.lp_norm(4.0) - 3.0).abs() < 1e-14);
        assert!((f.l2_norm() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn single_mode_l2() {
        let g = Grid::new(32).unwrap();
        let f = RealField::from_fn(g, |x1, _| (2.0 * std::f64::consts::PI * x1).sin());
        // integral of sin^2 over the torus is 1/2
        assert!((f.l2_norm() - (0.5f64).sqrt()).abs() < 1e-13);
        assert!(f.integral().abs() < 1e-14);
    }

    #[test]
    fn from_values_rejects_nan() {
        let g = Grid::new(8).unwrap();
        let mut v = vec![0.0; g.len()];
        v[5] = f64::NAN;
        assert!(RealField::from_values(g, v).is_err());
    }

    #[test]
    fn translation_preserves_norms() {
        let g = Grid::new(16).unwrap();
        let f = RealField::from_fn(g, |x1, x2| (7.0 * x1).sin() + (3.0 * x2).cos() * x1);
        let t = f.translate(3, 11);
        assert!((f.l2_norm() - t.l2_norm()).abs() < 1e-13);
        assert!((f.lp_norm(4.0) - t.lp_norm(4.0)).abs() < 1e-13);
        assert!((f.max_abs() - t.max_abs()).abs() < 1e-15);
    }
}
