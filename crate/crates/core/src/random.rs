//! Reproducible band-limited random fields.
//!
//! Coefficients for modes 0 < max(|m1|,|m2|) <= band are drawn i.i.d.
//! complex Gaussian in a fixed iteration order, Hermitian-symmetrized by
//! construction, and inverted to real samples; everything is a pure function
//! of (grid, seed, band).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;

use crate::field::{RealField, SpectralField, VectorField};
use crate::grid::Grid;
use crate::spectral;

/// What kind of random field to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Scalar,
    Vector,
    PositiveScalar,
}

/// Standard normal via Box-Muller on the ChaCha stream; avoids pulling in
/// a distributions crate and stays reproducible across versions.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Mean-zero band-limited scalar field with unit-variance mode amplitudes.
pub fn scalar_field(grid: Grid, seed: u64, band: usize) -> RealField {
    scalar_with_stream(grid, &mut ChaCha8Rng::seed_from_u64(seed), band)
}

fn scalar_with_stream(grid: Grid, rng: &mut ChaCha8Rng, band: usize) -> RealField {
    let n = grid.n() as i64;
    let band = (band as i64).min(n / 2 - 1);
    let mut spec = SpectralField::zeros(grid);
    let nn = grid.n();
    // Fill the stored half-spectrum (m2 >= 0); rows with m2 = 0 need their
    // own Hermitian pairing in m1, so draw only m1 > 0 there and mirror.
    for m2 in 0..=band {
        for m1 in -band..=band {
            if m2 == 0 && m1 <= 0 {
                continue;
            }
            let re = normal(rng);
            let im = normal(rng);
            let j1 = m1.rem_euclid(n) as usize;
            let c = Complex::new(re, im) * 0.5;
            spec.packed_mut()[m2 as usize * nn + j1] = c;
            if m2 == 0 {
                let j1n = (-m1).rem_euclid(n) as usize;
                spec.packed_mut()[j1n] = c.conj();
            }
        }
    }
    // Normalize so a typical field has O(1) amplitude regardless of band.
    let modes = spec.energy().sqrt();
    let f = spectral::to_real(&spec);
    if modes > 0.0 {
        f.scale(1.0 / modes)
    } else {
        f
    }
}

/// Two independent scalar components from one seed.
pub fn vector_field(grid: Grid, seed: u64, band: usize) -> VectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = scalar_with_stream(grid, &mut rng, band);
    let y = scalar_with_stream(grid, &mut rng, band);
    VectorField { x, y }
}

/// exp of a band-limited field, scaled to unit mass: strictly positive.
pub fn positive_scalar_field(grid: Grid, seed: u64, band: usize) -> RealField {
    let s = scalar_field(grid, seed, band);
    let e = s.map(f64::exp);
    let mass = e.integral();
    e.scale(1.0 / mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_from_seed() {
        let g = Grid::new(32).unwrap();
        let a = scalar_field(g, 7, 8);
        let b = scalar_field(g, 7, 8);
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn distinct_seeds_differ() {
        let g = Grid::new(32).unwrap();
        let a = scalar_field(g, 1, 8);
        let b = scalar_field(g, 2, 8);
        assert!(a.sub(&b).l2_norm() > 0.0);
    }

    #[test]
    fn positive_scalar_is_positive_unit_mass() {
        let g = Grid::new(32).unwrap();
        let r = positive_scalar_field(g, 3, 8);
        assert!(r.min() > 0.0);
        assert!((r.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn band_limit_respected() {
        let g = Grid::new(32).unwrap();
        let f = scalar_field(g, 5, 6);
        let spec = spectral::to_spectral(&f).unwrap();
        for m1 in -16i64..16 {
            for m2 in -16i64..16 {
                if m1.abs().max(m2.abs()) > 6 {
                    assert!(spec.coeff(m1, m2).norm() < 1e-13, "mode ({m1},{m2}) leaked");
                }
            }
        }
    }

    #[test]
    fn mean_is_zero() {
        let g = Grid::new(32).unwrap();
        let f = scalar_field(g, 11, 8);
        assert!(f.mean().abs() < 1e-14);
    }
}
