//! Empirical verification of the functional-inequality toolbox on random
//! band-limited fields: each inequality is reduced to a constant-free ratio
//! (left side over structural right side), swept over seeds, and reported as
//! an empirical sup/mean. The lab asserts finiteness and stability of the
//! sups, never specific constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RealField, VectorField};
use crate::grid::Grid;
use crate::random::{self, FieldKind};
use crate::spectral;
use crate::state::pow_scalar;

/// Reproducible random field dispatch. Positive-scalar means exp of a
/// band-limited field scaled to unit mass.
pub fn random_field(grid: Grid, seed: u64, band: usize, kind: FieldKind) -> ScalarOrVector {
    match kind {
        FieldKind::Scalar => ScalarOrVector::Scalar(random::scalar_field(grid, seed, band)),
        FieldKind::PositiveScalar => {
            ScalarOrVector::Scalar(random::positive_scalar_field(grid, seed, band))
        }
        FieldKind::Vector => ScalarOrVector::Vector(random::vector_field(grid, seed, band)),
    }
}

pub enum ScalarOrVector {
    Scalar(RealField),
    Vector(VectorField),
}

/// ||f||_{L^q} / ( sqrt(q) ||f||_{L^2}^{2/q} ||f||_{H^1}^{1-2/q} ).
pub fn gns_ratio(f: &RealField, q: f64) -> Result<f64> {
    if q <= 2.0 {
        return Err(Error::InvalidParams(format!("gns requires q > 2, got {q}")));
    }
    let l2 = f.l2_norm();
    if l2 == 0.0 {
        return Err(Error::DegenerateInput("gns_ratio of zero field"));
    }
    let lq = f.lp_norm(q);
    let h1 = spectral::h1_norm(f);
    Ok(lq / (q.sqrt() * l2.powf(2.0 / q) * h1.powf(1.0 - 2.0 / q)))
}

/// For q = 2: the relative residual of the exact identity
/// ||grad f||^2 = ||div f||^2 + ||rot f||^2. For q != 2: the ratio
/// ||grad f||_{L^q} / (||div f||_{L^q} + ||rot f||_{L^q}).
pub fn divcurl_ratio(f: &VectorField, q: f64) -> Result<f64> {
    let gx = spectral::gradient(&f.x);
    let gy = spectral::gradient(&f.y);
    let div = spectral::divergence(f);
    let rot = spectral::rot(f);
    if q == 2.0 {
        let g2 = {
            let a = gx.l2_norm();
            let b = gy.l2_norm();
            a * a + b * b
        };
        if g2 == 0.0 {
            return Err(Error::DegenerateInput("divcurl identity of gradient-free field"));
        }
        let d2 = div.l2_norm().powi(2);
        let r2 = rot.l2_norm().powi(2);
        Ok((g2 - d2 - r2).abs() / g2)
    } else {
        let n2 = f.grid().len() as f64;
        let mut s = 0.0;
        for i in 0..f.grid().len() {
            let fro = gx.x.values()[i] * gx.x.values()[i]
                + gx.y.values()[i] * gx.y.values()[i]
                + gy.x.values()[i] * gy.x.values()[i]
                + gy.y.values()[i] * gy.y.values()[i];
            s += pow_scalar(fro.sqrt(), q);
        }
        let grad_lq = (s / n2).powf(1.0 / q);
        if grad_lq == 0.0 {
            return Err(Error::DegenerateInput("divcurl ratio of gradient-free field"));
        }
        Ok(grad_lq / (div.lp_norm(q) + rot.lp_norm(q)))
    }
}

/// ||f||_inf / ( ||grad f||_{L^2} sqrt(log(e + ||grad f||_{L^q})) +
/// ||f||_{L^2} + 1 ).
pub fn brezis_wainger_ratio(f: &RealField, q: f64) -> Result<f64> {
    if q <= 2.0 {
        return Err(Error::InvalidParams(format!("brezis-wainger requires q > 2, got {q}")));
    }
    let grad = spectral::gradient(f);
    let g2 = grad.l2_norm();
    let gq = grad.lp_norm(q);
    let denom = g2 * (std::f64::consts::E + gq).ln().sqrt() + f.l2_norm() + 1.0;
    Ok(f.max_abs() / denom)
}

/// int exp( |f - fbar|^2 / (c1 ||grad f||_{L^2}^2) ) dx.
pub fn trudinger_integral(f: &RealField, c1: f64) -> Result<f64> {
    let g2 = spectral::gradient(f).l2_norm();
    if g2 == 0.0 {
        return Err(Error::DegenerateInput("trudinger integral of constant field"));
    }
    let fbar = f.mean();
    let scale = 1.0 / (c1 * g2 * g2);
    let mut s = 0.0;
    for &v in f.values() {
        let d = v - fbar;
        s += (d * d * scale).exp();
    }
    Ok(s / f.grid().len() as f64)
}

/// Commutator [g_j, R_i R_j] f_i = sum_ij { g_j R_iR_j(f_i) - R_iR_j(g_j f_i) }.
fn commutator_field(g: &VectorField, f: &VectorField) -> RealField {
    use spectral::Axis;
    let axes = [Axis::X1, Axis::X2];
    let gc = [&g.x, &g.y];
    let fc = [&f.x, &f.y];
    let mut out = RealField::zeros(g.grid());
    for (i, &ai) in axes.iter().enumerate() {
        for (j, &aj) in axes.iter().enumerate() {
            let r = spectral::riesz_composition(ai, aj, fc[i]);
            out = out.add(&gc[j].mul(&r));
            out = out.sub(&spectral::riesz_composition(ai, aj, &gc[j].mul(fc[i])));
        }
    }
    out
}

/// Two commutator ratios:
/// - ||[g_j, R_iR_j] f_i||_{L^q} / ( ||grad g||_{L^2} ||f||_{L^q} ),
///   using ||grad g||_{L^2} as the BMO surrogate;
/// - ||grad([g_j, R_iR_j] f_i)||_{L^{r3}} / ( ||grad g||_{L^{r1}} ||f||_{L^{r2}} )
///   for a Hoelder triple 1/r3 = 1/r1 + 1/r2.
pub fn commutator_ratio(
    g: &VectorField,
    f: &VectorField,
    q: f64,
    triple: (f64, f64, f64),
) -> Result<(f64, f64)> {
    let gnorm = vector_grad_lq(g, 2.0);
    let fq = f.lp_norm(q);
    if gnorm == 0.0 || f.max_abs() == 0.0 {
        return Err(Error::DegenerateInput("commutator ratio of degenerate pair"));
    }
    let c = commutator_field(g, f);
    let first = c.lp_norm(q) / (gnorm * fq);

    let (r1, r2, r3) = triple;
    let grad_c = spectral::gradient(&c);
    let num = grad_c.lp_norm(r3);
    let den = vector_grad_lq(g, r1) * f.lp_norm(r2);
    Ok((first, num / den.max(1e-300)))
}

fn vector_grad_lq(g: &VectorField, q: f64) -> f64 {
    let gx = spectral::gradient(&g.x);
    let gy = spectral::gradient(&g.y);
    let n2 = g.grid().len() as f64;
    let mut s = 0.0;
    for i in 0..g.grid().len() {
        let fro = gx.x.values()[i] * gx.x.values()[i]
            + gx.y.values()[i] * gx.y.values()[i]
            + gy.x.values()[i] * gy.x.values()[i]
            + gy.y.values()[i] * gy.y.values()[i];
        s += pow_scalar(fro.sqrt(), q);
    }
    (s / n2).powf(1.0 / q)
}

/// Weighted endpoint interpolation ratio:
/// ||rho^{1/2q} u||_{L^{2q}}^q over
/// ||sqrt(rho) u|| ||grad u||^{q-1} log(2 + ||grad u||^2 ||rho||_{L^gamma} /
/// ||sqrt(rho) u||^2)^{(q-1)/2} + ||sqrt(rho) u|| |int u|^{q-1}.
pub fn desjardins_ratio(rho: &RealField, u: &VectorField, q: f64, gamma: f64) -> Result<f64> {
    if q <= 1.0 {
        return Err(Error::InvalidParams(format!("desjardins requires q > 1, got {q}")));
    }
    if !(rho.min() > 0.0) {
        return Err(Error::DegenerateInput("desjardins ratio needs positive density"));
    }
    if u.max_abs() == 0.0 {
        return Err(Error::DegenerateInput("desjardins ratio of zero velocity"));
    }
    let n2 = rho.grid().len() as f64;

    // LHS = ( int rho |u|^{2q} )^{1/2}  (i.e. ||rho^{1/2q} u||_{L^{2q}}^q)
    let mut s = 0.0;
    for i in 0..rho.grid().len() {
        let speed2 = u.x.values()[i] * u.x.values()[i] + u.y.values()[i] * u.y.values()[i];
        s += rho.values()[i] * pow_scalar(speed2, q);
    }
    let lhs = (s / n2).sqrt();

    let mut sru = 0.0;
    for i in 0..rho.grid().len() {
        let speed2 = u.x.values()[i] * u.x.values()[i] + u.y.values()[i] * u.y.values()[i];
        sru += rho.values()[i] * speed2;
    }
    let sqrt_rho_u = (sru / n2).sqrt();

    let grad = vector_grad_lq(u, 2.0);
    let rho_gamma = rho.lp_norm(gamma);
    let log_arg = 2.0 + grad * grad * rho_gamma / (sqrt_rho_u * sqrt_rho_u).max(1e-300);
    let term1 = sqrt_rho_u * grad.powf(q - 1.0) * log_arg.ln().powf((q - 1.0) / 2.0);
    let (m1, m2) = u.integral();
    let term2 = sqrt_rho_u * m1.hypot(m2).powf(q - 1.0);
    Ok(lhs / (term1 + term2).max(1e-300))
}

/// Sweep bookkeeping for one inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub name: String,
    pub samples: usize,
    /// Free parameters of the sweep, e.g. [("q", 4.0)].
    pub params: Vec<(String, f64)>,
    pub sup_ratio: f64,
    pub mean_ratio: f64,
    pub argmax_seed: u64,
}

impl RatioReport {
    /// Reduces per-seed ratios (order-independent max / mean).
    pub fn from_samples(
        name: impl Into<String>,
        params: Vec<(String, f64)>,
        ratios: &[(u64, f64)],
    ) -> Self {
        let mut sup = f64::NEG_INFINITY;
        let mut argmax = 0;
        let mut mean = 0.0;
        for &(seed, r) in ratios {
            if r > sup {
                sup = r;
                argmax = seed;
            }
            mean += r;
        }
        mean /= ratios.len().max(1) as f64;
        RatioReport {
            name: name.into(),
            samples: ratios.len(),
            params,
            sup_ratio: sup,
            mean_ratio: mean,
            argmax_seed: argmax,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.sup_ratio.is_finite() && self.mean_ratio.is_finite()
    }
}

/// Trudinger calibration: smallest c1 on the grid for which the seed sup of
/// the integral is stable under doubling the sample count (< 5% drift).
pub fn trudinger_calibrate(
    grid: Grid,
    band: usize,
    seeds: usize,
    c1_grid: &[f64],
) -> Result<(f64, f64)> {
    for &c1 in c1_grid {
        let sup_n = trudinger_sup(grid, band, seeds, c1)?;
        let sup_2n = trudinger_sup(grid, band, 2 * seeds, c1)?;
        if sup_n.is_finite() && sup_2n.is_finite() && (sup_2n - sup_n) / sup_n < 0.05 {
            return Ok((c1, sup_2n));
        }
    }
    Err(Error::Scenario("no stable Trudinger constant on the calibration grid".into()))
}

fn trudinger_sup(grid: Grid, band: usize, seeds: usize, c1: f64) -> Result<f64> {
    let mut sup = 0.0f64;
    for seed in 0..seeds as u64 {
        let f = random::scalar_field(grid, seed, band);
        sup = sup.max(trudinger_integral(&f, c1)?);
    }
    Ok(sup)
}
