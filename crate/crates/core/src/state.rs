//! Physical state, constitutive laws, and conserved scalars.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RealField, VectorField};
use crate::grid::Grid;
use crate::random;
use crate::spectral;

/// Model parameters: shear viscosity mu and the exponents of the
/// constitutive laws lambda(rho) = rho^beta, P(rho) = rho^gamma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mu: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Params {
    pub fn new(mu: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParams(format!("mu must be positive, got {mu}")));
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::InvalidParams(format!("beta must exceed 1, got {beta}")));
        }
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Params { mu, beta, gamma })
    }

    /// True when beta > 3/2 and gamma < 4*beta - 3, the regime with a
    /// time-uniform density ceiling and decay to equilibrium.
    pub fn huang_li_regime(&self) -> bool {
        self.beta > 1.5 && self.gamma < 4.0 * self.beta - 3.0
    }
}

/// x^e with fast paths for the small integer and half-integer exponents the
/// solver evaluates billions of times.
#[inline]
pub(crate) fn pow_scalar(x: f64, e: f64) -> f64 {
    if e == 2.0 {
        x * x
    } else if e == 1.0 {
        x
    } else if e == 3.0 {
        x * x * x
    } else if e == 1.5 {
        x * x.sqrt()
    } else if e == 0.5 {
        x.sqrt()
    } else {
        x.powf(e)
    }
}

fn check_positive(rho: &RealField, t: f64) -> Result<()> {
    let n = rho.grid().n();
    for (idx, &v) in rho.values().iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::VacuumBreach { t, i: idx / n, j: idx % n, value: v });
        }
    }
    Ok(())
}

/// P(rho) = rho^gamma, pointwise.
pub fn pressure(rho: &RealField, p: &Params) -> Result<RealField> {
    check_positive(rho, f64::NAN)?;
    Ok(rho.map(|v| pow_scalar(v, p.gamma)))
}

/// lambda(rho) = rho^beta, pointwise.
pub fn bulk_viscosity(rho: &RealField, p: &Params) -> Result<RealField> {
    check_positive(rho, f64::NAN)?;
    Ok(rho.map(|v| pow_scalar(v, p.beta)))
}

/// Conservative state at one time instant: density and momentum m = rho*u.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub rho: RealField,
    pub m: VectorField,
}

impl FluidState {
    pub fn new(t: f64, rho: RealField, m: VectorField) -> Result<Self> {
        if rho.grid() != m.grid() {
            return Err(Error::GridMismatch(rho.grid().n(), m.grid().n()));
        }
        let s = FluidState { t, rho, m };
        s.check_valid()?;
        Ok(s)
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid()
    }

    pub fn check_valid(&self) -> Result<()> {
        check_positive(&self.rho, self.t)?;
        if !self.m.is_finite() {
            return Err(Error::NonFinite { context: "momentum" });
        }
        Ok(())
    }

    /// Velocity u = m / rho, pointwise.
    pub fn velocity(&self) -> VectorField {
        VectorField {
            x: self.m.x.zip_map(&self.rho, |m, r| m / r),
            y: self.m.y.zip_map(&self.rho, |m, r| m / r),
        }
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }

    pub fn momentum(&self) -> (f64, f64) {
        self.m.integral()
    }

    /// E = int( rho |u|^2 / 2 + rho^gamma / (gamma - 1) ).
    pub fn energy(&self, p: &Params) -> Result<f64> {
        check_positive(&self.rho, self.t)?;
        let g = self.grid().len() as f64;
        let rho = self.rho.values();
        let mx = self.m.x.values();
        let my = self.m.y.values();
        let mut parts = Vec::with_capacity(rho.len() / 32 + 1);
        for ((cr, cx), cy) in rho.chunks(32).zip(mx.chunks(32)).zip(my.chunks(32)) {
            let mut s = 0.0;
            for i in 0..cr.len() {
                let kinetic = 0.5 * (cx[i] * cx[i] + cy[i] * cy[i]) / cr[i];
                let internal = pow_scalar(cr[i], p.gamma) / (p.gamma - 1.0);
                s += kinetic + internal;
            }
            parts.push(s);
        }
        Ok(crate::field::pairwise_sum(&parts) / g)
    }
}

/// Initial-data recipes. All of them normalize to unit mass and zero total
/// momentum before returning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    ConstantPlusMode,
    RandomBandLimited,
    MollifiedTarget,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub kind: InitKind,
    pub seed: u64,
    /// Target density mean before normalization.
    pub density_mean: f64,
    /// Max deviation of rho0 from its mean.
    pub density_amplitude: f64,
    /// Max pointwise speed of u0.
    pub velocity_amplitude: f64,
    /// Mode band for the random kinds.
    pub band: usize,
    /// Mollification width for `MollifiedTarget`: modes with
    /// max(|m1|,|m2|) > 1/h are removed from the rough target.
    pub mollify_h: f64,
    /// Admissible bounds for rho0; generation fails if violated.
    pub rho_lower: f64,
    pub rho_upper: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig {
            kind: InitKind::ConstantPlusMode,
            seed: 0,
            density_mean: 1.0,
            density_amplitude: 0.1,
            velocity_amplitude: 0.1,
            band: 8,
            mollify_h: 0.25,
            rho_lower: 1e-8,
            rho_upper: 1e8,
        }
    }
}

impl InitConfig {
    /// Builds the initial state on the given grid.
    pub fn build(&self, grid: Grid) -> Result<FluidState> {
        let (rho, u) = match self.kind {
            InitKind::ConstantPlusMode => self.constant_plus_mode(grid),
            InitKind::RandomBandLimited => self.random_band_limited(grid),
            InitKind::MollifiedTarget => self.mollified_target(grid, self.mollify_h),
        };
        self.finish(rho, u)
    }

    /// Same recipe with an overridden mollification width (ladder rungs).
    pub fn build_with_width(&self, grid: Grid, h: f64) -> Result<FluidState> {
        if self.kind != InitKind::MollifiedTarget {
            return Err(Error::Config(
                "build_with_width requires kind = mollified-target".into(),
            ));
        }
        let (rho, u) = self.mollified_target(grid, h);
        self.finish(rho, u)
    }

    fn constant_plus_mode(&self, grid: Grid) -> (RealField, VectorField) {
        use std::f64::consts::PI;
        let a = self.density_amplitude;
        let v = self.velocity_amplitude;
        let rho = RealField::from_fn(grid, |x1, x2| {
            self.density_mean + a * (2.0 * PI * x1).sin() * (2.0 * PI * x2).cos()
        });
        let u = VectorField {
            x: RealField::from_fn(grid, |_, x2| v * (2.0 * PI * x2).sin()),
            y: RealField::from_fn(grid, |x1, _| v * (2.0 * PI * x1).cos()),
        };
        (rho, u)
    }

    fn random_band_limited(&self, grid: Grid) -> (RealField, VectorField) {
        let noise = random::scalar_field(grid, self.seed, self.band);
        let peak = noise.max_abs().max(f64::MIN_POSITIVE);
        let rho = noise.map(|v| self.density_mean + self.density_amplitude * v / peak);
        let vn = random::vector_field(grid, self.seed.wrapping_add(1), self.band);
        let peak_v = vn.max_abs().max(f64::MIN_POSITIVE);
        let u = vn.scale(self.velocity_amplitude / peak_v);
        (rho, u)
    }

    /// Full-band rough target, sharply truncated to modes <= 1/h. Widths
    /// below the grid scale keep the target unchanged.
    fn mollified_target(&self, grid: Grid, h: f64) -> (RealField, VectorField) {
        let full_band = grid.n() / 2 - 1;
        let rough = random::scalar_field(grid, self.seed, full_band);
        let peak = rough.max_abs().max(f64::MIN_POSITIVE);
        let rho_target = rough.map(|v| self.density_mean + self.density_amplitude * v / peak);
        let vn = random::vector_field(grid, self.seed.wrapping_add(1), full_band);
        let peak_v = vn.max_abs().max(f64::MIN_POSITIVE);
        let u_target = vn.scale(self.velocity_amplitude / peak_v);

        let cutoff = if h <= 0.0 { f64::INFINITY } else { 1.0 / h };
        let rho = mollify(&rho_target, cutoff);
        let u = VectorField { x: mollify(&u_target.x, cutoff), y: mollify(&u_target.y, cutoff) };
        (rho, u)
    }

    /// Normalize: unit mass, zero total momentum; then validate bounds.
    fn finish(&self, rho: RealField, u: VectorField) -> Result<FluidState> {
        let mass = rho.integral();
        if !(mass > 0.0) {
            return Err(Error::Config("generated density has non-positive mass".into()));
        }
        let rho = rho.scale(1.0 / mass);
        let lo = rho.min();
        let hi = rho.max();
        if !(lo > 0.0) || lo < self.rho_lower || hi > self.rho_upper {
            return Err(Error::Config(format!(
                "generated density range [{lo:.6}, {hi:.6}] violates bounds [{}, {}]",
                self.rho_lower, self.rho_upper
            )));
        }
        // Shift u by a constant so int(rho u) = 0; gradients are unchanged.
        let m = VectorField { x: rho.mul(&u.x), y: rho.mul(&u.y) };
        let (px, py) = m.integral();
        let mass1 = rho.integral();
        let ux = u.x.map(|v| v - px / mass1);
        let uy = u.y.map(|v| v - py / mass1);
        let m = VectorField { x: rho.mul(&ux), y: rho.mul(&uy) };
        FluidState::new(0.0, rho, m)
    }
}

/// Sharp spectral truncation keeping modes with max(|m1|,|m2|) <= cutoff.
fn mollify(f: &RealField, cutoff: f64) -> RealField {
    if cutoff.is_infinite() {
        return f.clone();
    }
    let mut spec = spectral::to_spectral(f).expect("finite field");
    let grid = f.grid();
    let n = grid.n();
    let half = n / 2;
    for j2 in 0..=half {
        let m2 = if j2 == half { half as i64 } else { j2 as i64 };
        for j1 in 0..n {
            let m1 = grid.mode(j1);
            if (m1.abs().max(m2.abs()) as f64) > cutoff {
                spec.packed_mut()[j2 * n + j1] = rustfft::num_complex::Complex::new(0.0, 0.0);
            }
        }
    }
    spectral::to_real(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(16).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(1.0, 2.0, 2.0).is_ok());
        assert!(Params::new(0.0, 2.0, 2.0).is_err());
        assert!(Params::new(1.0, 1.0, 2.0).is_err());
        assert!(Params::new(1.0, 2.0, 0.9).is_err());
    }

    #[test]
    fn huang_li_flag() {
        assert!(Params::new(1.0, 2.0, 2.0).unwrap().huang_li_regime());
        assert!(!Params::new(1.0, 1.6, 3.5).unwrap().huang_li_regime());
        assert!(!Params::new(1.0, 1.4, 1.5).unwrap().huang_li_regime());
    }

    #[test]
    fn pressure_trivial_cases() {
        let p = Params::new(1.0, 3.0, 2.0).unwrap();
        let one = RealField::constant(grid(), 1.0);
        assert!(pressure(&one, &p).unwrap().sub(&one).max_abs() < 1e-15);
        let two = RealField::constant(grid(), 2.0);
        let pr = pressure(&two, &p).unwrap();
        assert!((pr.values()[0] - 4.0).abs() < 1e-15);
        let lam = bulk_viscosity(&two, &p).unwrap();
        assert!((lam.values()[0] - 8.0).abs() < 1e-15);
    }

    #[test]
    fn pressure_matches_scalar_power() {
        let p = Params::new(1.0, 2.0, 1.4).unwrap();
        let rho = RealField::from_fn(grid(), |x1, _| {
            1.0 + 0.5 * (2.0 * std::f64::consts::PI * x1).sin()
        });
        let pr = pressure(&rho, &p).unwrap();
        for (a, b) in pr.values().iter().zip(rho.values()) {
            assert!((a - b.powf(1.4)).abs() < 1e-14);
        }
    }

    #[test]
    fn vacuum_rejected_with_location() {
        let p = Params::new(1.0, 2.0, 2.0).unwrap();
        let mut v = vec![1.0; grid().len()];
        v[35] = -0.5;
        let rho = RealField::from_values(grid(), v).unwrap();
        match pressure(&rho, &p) {
            Err(Error::VacuumBreach { i, j, value, .. }) => {
                assert_eq!((i, j), (35 / 16, 35 % 16));
                assert_eq!(value, -0.5);
            }
            other => panic!("expected vacuum breach, got {other:?}"),
        }
    }

    #[test]
    fn energy_rest_state() {
        let p = Params::new(1.0, 2.0, 2.0).unwrap();
        let s = FluidState::new(
            0.0,
            RealField::constant(grid(), 1.0),
            VectorField::zeros(grid()),
        )
        .unwrap();
        assert!((s.energy(&p).unwrap() - 1.0).abs() < 1e-14);
        assert!((s.mass() - 1.0).abs() < 1e-14);
        assert_eq!(s.momentum(), (0.0, 0.0));
    }

    #[test]
    fn energy_uniform_translation() {
        let p = Params::new(1.0, 2.0, 2.0).unwrap();
        let rho = RealField::constant(grid(), 1.0);
        let m = VectorField {
            x: RealField::constant(grid(), 1.0),
            y: RealField::zeros(grid()),
        };
        let s = FluidState::new(0.0, rho, m).unwrap();
        assert!((s.energy(&p).unwrap() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn energy_positive_lower_bound() {
        // E >= int rho^gamma/(gamma-1) > 0 for any valid state
        let p = Params::new(0.5, 2.0, 1.7).unwrap();
        let cfg = InitConfig {
            kind: InitKind::RandomBandLimited,
            seed: 9,
            density_amplitude: 0.3,
            velocity_amplitude: 0.4,
            band: 4,
            ..Default::default()
        };
        let s = cfg.build(grid()).unwrap();
        let internal = s.rho.map(|r| pow_scalar(r, p.gamma)).integral() / (p.gamma - 1.0);
        let e = s.energy(&p).unwrap();
        assert!(e >= internal - 1e-14);
        assert!(internal > 0.0);
    }

    #[test]
    fn init_normalization() {
        for kind in [InitKind::ConstantPlusMode, InitKind::RandomBandLimited] {
            let cfg = InitConfig {
                kind,
                seed: 42,
                density_amplitude: 0.3,
                velocity_amplitude: 0.2,
                band: 5,
                ..Default::default()
            };
            let s = cfg.build(grid()).unwrap();
            assert!((s.mass() - 1.0).abs() < 1e-12, "{kind:?}");
            let (mx, my) = s.momentum();
            assert!(mx.abs() < 1e-12 && my.abs() < 1e-12, "{kind:?}");
            assert!(s.rho.min() > 0.0);
        }
    }

    #[test]
    fn constant_plus_mode_density_range() {
        let cfg = InitConfig {
            kind: InitKind::ConstantPlusMode,
            density_amplitude: 0.3,
            velocity_amplitude: 0.0,
            ..Default::default()
        };
        let g = Grid::new(64).unwrap();
        let s = cfg.build(g).unwrap();
        assert!((s.rho.min() - 0.7).abs() < 1e-12);
        assert!((s.rho.max() - 1.3).abs() < 1e-12);
    }

    #[test]
    fn velocity_recovers_momentum() {
        let cfg = InitConfig {
            kind: InitKind::RandomBandLimited,
            seed: 3,
            density_amplitude: 0.2,
            velocity_amplitude: 0.3,
            band: 4,
            ..Default::default()
        };
        let s = cfg.build(grid()).unwrap();
        let u = s.velocity();
        let m2 = VectorField { x: s.rho.mul(&u.x), y: s.rho.mul(&u.y) };
        assert!(m2.sub(&s.m).max_abs() < 1e-14);
    }

    #[test]
    fn mollified_below_grid_scale_is_identity() {
        let cfg = InitConfig {
            kind: InitKind::MollifiedTarget,
            seed: 17,
            density_amplitude: 0.2,
            velocity_amplitude: 0.1,
            mollify_h: 1e-9,
            ..Default::default()
        };
        let g = Grid::new(32).unwrap();
        let a = cfg.build(g).unwrap();
        let b = cfg.build_with_width(g, 1e-12).unwrap();
        assert!(a.rho.sub(&b.rho).max_abs() < 1e-12);
        assert!(a.m.sub(&b.m).max_abs() < 1e-12);
    }

    #[test]
    fn mollified_widths_differ_above_grid_scale() {
        let cfg = InitConfig {
            kind: InitKind::MollifiedTarget,
            seed: 17,
            density_amplitude: 0.2,
            velocity_amplitude: 0.1,
            mollify_h: 0.25,
            ..Default::default()
        };
        let g = Grid::new(32).unwrap();
        let a = cfg.build_with_width(g, 0.25).unwrap();
        let b = cfg.build_with_width(g, 0.125).unwrap();
        assert!(a.rho.sub(&b.rho).l2_norm() > 1e-6);
    }
}
