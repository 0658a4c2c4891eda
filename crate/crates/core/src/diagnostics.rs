//! Monitored functionals of a fluid state: the effective viscous flux, the
//! Riesz-commutator source term, dissipation functionals, norm families, and
//! the exponent bookkeeping used to normalize them into bounded ratios.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{RealField, VectorField};
use crate::spectral::{self, Axis};
use crate::state::{pow_scalar, FluidState, Params};

/// Effective viscous flux B = (lambda + 2 mu) div u - (P - Pbar).
pub fn effective_viscous_flux(state: &FluidState, p: &Params) -> Result<RealField> {
    let u = state.velocity();
    let divu = spectral::divergence(&u);
    let pressure = crate::state::pressure(&state.rho, p)?;
    let p_bar = pressure.integral();
    let lam = crate::state::bulk_viscosity(&state.rho, p)?;
    let mu2 = 2.0 * p.mu;
    let mut out = RealField::zeros(state.grid());
    let v = out.values_mut();
    for i in 0..v.len() {
        v[i] = (lam.values()[i] + mu2) * divu.values()[i] - (pressure.values()[i] - p_bar);
    }
    Ok(out)
}

/// F = 2 mu log rho + rho^beta / beta - inv_laplacian(div(rho u)).
pub fn desjardins_f(state: &FluidState, p: &Params) -> Result<RealField> {
    if !(state.rho.min() > 0.0) {
        let i = state.rho.values().iter().position(|&r| !(r > 0.0)).unwrap_or(0);
        let n = state.grid().n();
        return Err(Error::VacuumBreach {
            t: state.t,
            i: i / n,
            j: i % n,
            value: state.rho.values()[i],
        });
    }
    // -(-lap)^{-1} div(rho u) equals inv_laplacian_zero_mean(div(rho u)),
    // whose symbol is -1/|k|^2.
    let divm = spectral::divergence(&state.m);
    let potential = spectral::inv_laplacian_zero_mean(&divm);
    let beta = p.beta;
    let mu2 = 2.0 * p.mu;
    Ok(state.rho.map(|r| mu2 * r.ln() + pow_scalar(r, beta) / beta).add(&potential))
}

/// theta(rho) = 2 mu log rho + rho^beta / beta; strictly increasing in rho.
pub fn theta(rho: &RealField, p: &Params) -> Result<RealField> {
    if !(rho.min() > 0.0) {
        let i = rho.values().iter().position(|&r| !(r > 0.0)).unwrap_or(0);
        let n = rho.grid().n();
        return Err(Error::VacuumBreach { t: f64::NAN, i: i / n, j: i % n, value: rho.values()[i] });
    }
    let beta = p.beta;
    let mu2 = 2.0 * p.mu;
    Ok(rho.map(|r| mu2 * r.ln() + pow_scalar(r, beta) / beta))
}

/// Riesz commutator source G = sum_ij [u_i, R_i R_j](rho u_j), evaluated as
/// sum_i u_i * (sum_j R_i R_j m_j) - sum_ij R_i R_j (u_i m_j).
pub fn commutator_g(state: &FluidState) -> RealField {
    let u = state.velocity();
    let axes = [Axis::X1, Axis::X2];
    let u_comp = [&u.x, &u.y];
    let m_comp = [&state.m.x, &state.m.y];

    let mut g = RealField::zeros(state.grid());
    for (i, &ai) in axes.iter().enumerate() {
        let mut ri_m = RealField::zeros(state.grid());
        for (j, &aj) in axes.iter().enumerate() {
            ri_m = ri_m.add(&spectral::riesz_composition(ai, aj, m_comp[j]));
        }
        g = g.add(&u_comp[i].mul(&ri_m));
        for (j, &aj) in axes.iter().enumerate() {
            let prod = u_comp[i].mul(m_comp[j]);
            g = g.sub(&spectral::riesz_composition(ai, aj, &prod));
        }
    }
    g
}

/// The same commutator evaluated along the alternative factorized route:
/// u . (-lap)^{-1/2} grad (-lap)^{-1/2} div(rho u)
///   - (-lap)^{-1/2} div (-lap)^{-1/2} div(rho u x u),
/// with every intermediate materialized in sample space.
pub fn commutator_g_factored(state: &FluidState) -> RealField {
    let u = state.velocity();
    let divm = spectral::divergence(&state.m);
    let s1 = spectral::inv_sqrt_laplacian(&divm);
    let grad_s1 = spectral::gradient(&s1);
    let h1 = spectral::inv_sqrt_laplacian(&grad_s1.x);
    let h2 = spectral::inv_sqrt_laplacian(&grad_s1.y);
    let first = u.x.mul(&h1).add(&u.y.mul(&h2));

    // [div(m x u)]_i = sum_j d_j (m_i u_j)
    let t11 = state.m.x.mul(&u.x);
    let t12 = state.m.x.mul(&u.y);
    let t21 = state.m.y.mul(&u.x);
    let t22 = state.m.y.mul(&u.y);
    let div1 = spectral::derivative(&t11, Axis::X1).add(&spectral::derivative(&t12, Axis::X2));
    let div2 = spectral::derivative(&t21, Axis::X1).add(&spectral::derivative(&t22, Axis::X2));
    let w1 = spectral::inv_sqrt_laplacian(&div1);
    let w2 = spectral::inv_sqrt_laplacian(&div2);
    let divw = spectral::derivative(&w1, Axis::X1).add(&spectral::derivative(&w2, Axis::X2));
    let second = spectral::inv_sqrt_laplacian(&divw);

    first.sub(&second)
}

/// The integral quantities (D^2, Y^2, X^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dyx {
    pub d2: f64,
    pub y2: f64,
    pub x2: f64,
}

pub fn quantities_dyx(state: &FluidState, p: &Params) -> Result<Dyx> {
    let u = state.velocity();
    let divu = spectral::divergence(&u);
    let rotu = spectral::rot(&u);
    let b = effective_viscous_flux(state, p)?;
    let lam = crate::state::bulk_viscosity(&state.rho, p)?;

    let mu = p.mu;
    let n2 = state.grid().len() as f64;
    let mut d2 = 0.0;
    let mut y2 = 0.0;
    for i in 0..state.grid().len() {
        let l2m = lam.values()[i] + 2.0 * mu;
        let dv = divu.values()[i];
        let rv = rotu.values()[i];
        d2 += l2m * dv * dv + mu * rv * rv;
        y2 += mu * rv * rv + b.values()[i] * b.values()[i] / l2m;
    }
    d2 /= n2;
    y2 /= n2;

    // X^2 = int |grad B + mu perp-grad rot u|^2 / rho
    let grad_b = spectral::gradient(&b);
    let pg = spectral::perp_gradient(&rotu);
    let mut x2 = 0.0;
    for i in 0..state.grid().len() {
        let v1 = grad_b.x.values()[i] + mu * pg.x.values()[i];
        let v2 = grad_b.y.values()[i] + mu * pg.y.values()[i];
        x2 += (v1 * v1 + v2 * v2) / state.rho.values()[i];
    }
    x2 /= n2;
    Ok(Dyx { d2, y2, x2 })
}

/// Exponent bookkeeping for the ratio diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSchedule {
    pub epsilon: f64,
    pub q: f64,
    pub varsigma: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub nu0: f64,
    /// Whether max{a1, a2 + varsigma/q, a3, a4} < beta held for this pair.
    pub found: bool,
}

impl ExponentSchedule {
    /// Exponents for a specific (epsilon, q) pair.
    pub fn derive(p: &Params, epsilon: f64, q: f64, nu0: f64) -> Self {
        let beta = p.beta;
        let gamma = p.gamma;
        let varsigma =
            1.0 + beta * epsilon + (gamma - 2.0 * beta).max(beta - gamma - 2.0).max(0.0);
        let be2 = beta * epsilon / 2.0;
        let alpha1 = (be2 + (gamma - beta).abs() / 4.0) * 4.0 / q + 1.0 - 1.0 / q
            + (0.5 - 1.0 / q) * varsigma;
        let alpha2 = (be2 + ((gamma - beta) / 2.0).max(0.0)) * 4.0 / q + 1.0
            + (0.5 - 1.0 / q) * varsigma;
        let alpha3 = (0.75 * gamma - beta).max(0.0) * 4.0 / q + 1.0 - 1.0 / q
            + (0.5 - 1.0 / q) * varsigma;
        let alpha4 =
            ((1.0 + varsigma) / 2.0).max(1.0 - 0.5 / q + (0.25 - 0.5 / q) * varsigma);
        let found = alpha1.max(alpha2 + varsigma / q).max(alpha3).max(alpha4) < beta;
        ExponentSchedule { epsilon, q, varsigma, alpha1, alpha2, alpha3, alpha4, nu0, found }
    }

    /// Grid search: q ascending in {5, 8, 16, 32, 64}, epsilon descending in
    /// {0.5, 0.2, 0.1, 0.05, 0.01}; the first admissible pair under that
    /// order (smallest q, then largest epsilon) wins. Falls back to the
    /// most conservative pair, flagged `found = false`, when none works.
    pub fn search(p: &Params, nu0: f64) -> Self {
        for q in [5.0, 8.0, 16.0, 32.0, 64.0] {
            for epsilon in [0.5, 0.2, 0.1, 0.05, 0.01] {
                let s = Self::derive(p, epsilon, q, nu0);
                if s.found {
                    return s;
                }
            }
        }
        Self::derive(p, 0.01, 64.0, nu0)
    }

    /// Weighted-moment exponent nu = rho_hat^{-beta/2} nu0, adapting the
    /// moment integral int rho |u|^(2+nu) to the running density ceiling.
    pub fn nu(&self, rho_hat: f64, p: &Params) -> f64 {
        self.nu0 * pow_scalar(rho_hat, -p.beta / 2.0)
    }
}

/// One time-sample of every monitored functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub momentum: (f64, f64),
    pub energy: f64,
    pub d2: f64,
    pub y2: f64,
    pub x2: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_hat: f64,
    pub grad_u_l2: f64,
    pub b_l2: f64,
    pub b_bar: f64,
    pub p_bar: f64,
    pub g_linf: f64,
    pub theta_min: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub u_mean: (f64, f64),
    pub ratio_log_y: f64,
    pub ratio_g: f64,
    pub ratio_u_mean: f64,
    /// (q, ||grad u||_{L^q}) for the configured q list.
    pub grad_u_lq: Vec<(f64, f64)>,
    /// (p, ||rho||_{L^p}) for the configured p list.
    pub rho_lp: Vec<(f64, f64)>,
    pub weighted_moment: f64,
    /// Cumulative int_0^t D^2 (per-step trapezoid from the integrator).
    pub cum_d2: f64,
    /// Cumulative int_0^t ||P - Pbar||^2.
    pub cum_pp: f64,
    /// Cumulative int_0^t X^2/(10+Y^2) (per-sample trapezoid).
    pub cum_xy: f64,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        let scalars = [
            self.t,
            self.mass,
            self.momentum.0,
            self.momentum.1,
            self.energy,
            self.d2,
            self.y2,
            self.x2,
            self.rho_min,
            self.rho_max,
            self.rho_hat,
            self.grad_u_l2,
            self.b_l2,
            self.b_bar,
            self.p_bar,
            self.g_linf,
            self.theta_min,
            self.f_min,
            self.f_max,
            self.u_mean.0,
            self.u_mean.1,
            self.ratio_log_y,
            self.ratio_g,
            self.ratio_u_mean,
            self.weighted_moment,
            self.cum_d2,
            self.cum_pp,
            self.cum_xy,
        ];
        scalars.iter().all(|v| v.is_finite())
            && self.grad_u_lq.iter().all(|(_, v)| v.is_finite())
            && self.rho_lp.iter().all(|(_, v)| v.is_finite())
    }
}

/// Norm family of one state.
pub struct NormSet {
    pub grad_u_l2: f64,
    pub grad_u_lq: Vec<(f64, f64)>,
    pub rho_lp: Vec<(f64, f64)>,
    pub u_mean: (f64, f64),
    pub weighted_moment: f64,
}

/// grad-u norms, rho L^p norms, mean velocity, and the weighted moment
/// int rho |u|^(2+nu).
pub fn norms(state: &FluidState, q_list: &[f64], p_list: &[f64], nu: f64) -> NormSet {
    let u = state.velocity();
    let gx = spectral::gradient(&u.x);
    let gy = spectral::gradient(&u.y);
    let n2 = state.grid().len() as f64;

    let fro2 = |i: usize| {
        gx.x.values()[i] * gx.x.values()[i]
            + gx.y.values()[i] * gx.y.values()[i]
            + gy.x.values()[i] * gy.x.values()[i]
            + gy.y.values()[i] * gy.y.values()[i]
    };

    let mut sum2 = 0.0;
    for i in 0..state.grid().len() {
        sum2 += fro2(i);
    }
    let grad_u_l2 = (sum2 / n2).sqrt();

    let grad_u_lq = q_list
        .iter()
        .map(|&q| {
            let mut s = 0.0;
            for i in 0..state.grid().len() {
                s += pow_scalar(fro2(i).sqrt(), q);
            }
            (q, (s / n2).powf(1.0 / q))
        })
        .collect();

    let rho_lp = p_list.iter().map(|&pq| (pq, state.rho.lp_norm(pq))).collect();

    let u_mean = u.integral();

    let mut moment = 0.0;
    for i in 0..state.grid().len() {
        let speed2 = u.x.values()[i] * u.x.values()[i] + u.y.values()[i] * u.y.values()[i];
        moment += state.rho.values()[i] * speed2.sqrt().powf(2.0 + nu);
    }
    let weighted_moment = moment / n2;

    NormSet { grad_u_l2, grad_u_lq, rho_lp, u_mean, weighted_moment }
}

/// The structural right-hand-side terms of the L^q gradient bound for one q,
/// evaluated without unknown constants (instantaneous density sup).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqBoundTerms {
    pub q: f64,
    pub term_d: f64,
    pub term_x: f64,
    pub term_rho: f64,
}

/// Constant-free bound diagnostics of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTerms {
    pub per_q: Vec<LqBoundTerms>,
    pub ratio_log_y: f64,
    pub ratio_g: f64,
    pub ratio_u_mean: f64,
}

/// Scalars feeding `bound_terms`.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    pub d2: f64,
    pub y2: f64,
    pub x2: f64,
    pub grad_u_l2: f64,
    pub g_linf: f64,
    /// Instantaneous density sup.
    pub rho_max: f64,
    /// Running density sup over the trajectory samples.
    pub rho_hat: f64,
    pub u_mean: (f64, f64),
    /// True when the momentum field is identically zero; every ratio is 0
    /// by convention in that case.
    pub zero_velocity: bool,
}

const DENOM_FLOOR: f64 = 1e-300;

pub fn bound_terms(
    p: &Params,
    sched: &ExponentSchedule,
    q_list: &[f64],
    inp: &BoundInputs,
) -> BoundTerms {
    if inp.zero_velocity {
        return BoundTerms {
            per_q: q_list
                .iter()
                .map(|&q| LqBoundTerms { q, term_d: 0.0, term_x: 0.0, term_rho: 0.0 })
                .collect(),
            ratio_log_y: 0.0,
            ratio_g: 0.0,
            ratio_u_mean: 0.0,
        };
    }
    let beta = p.beta;
    let gamma = p.gamma;
    let eps = sched.epsilon;
    let d = inp.d2.max(0.0).sqrt();
    let xy = inp.x2 / (10.0 + inp.y2);
    let rt = inp.rho_max;

    let per_q = q_list
        .iter()
        .map(|&q| {
            let e1 = beta * eps / 2.0
                + ((gamma - beta) / 2.0).max(0.0) * 2.0 / q
                + ((beta - gamma) / 2.0).max(0.0) * (1.0 - 2.0 / q);
            let e2 = beta * eps / 2.0 + 0.5 - 1.0 / q + ((gamma - beta) / 2.0).max(0.0);
            let e3 = (((q - 1.0) / q) * gamma - beta).max(0.0);
            LqBoundTerms {
                q,
                term_d: rt.powf(e1) * (1.0 + d),
                term_x: rt.powf(e2) * (1.0 + d) * xy.powf(0.5 - 1.0 / q),
                term_rho: rt.powf(e3),
            }
        })
        .collect();

    let ratio_log_y = (10.0 + inp.grad_u_l2 * inp.grad_u_l2).ln()
        / inp.rho_hat.powf(sched.varsigma).max(DENOM_FLOOR);

    let q = sched.q;
    let d_a = pow_scalar(d, 2.0 - 2.0 / q) + pow_scalar(d, 2.0 - 6.0 / q);
    let denom = inp.rho_hat.powf(sched.alpha1) * d_a
        + inp.rho_hat.powf(sched.alpha2) * d_a * xy.powf(1.0 / q)
        + inp.rho_hat.powf(sched.alpha3) * pow_scalar(d, 2.0 - 6.0 / q);
    let ratio_g = inp.g_linf / denom.max(DENOM_FLOOR);

    let u_mean_norm = inp.u_mean.0.hypot(inp.u_mean.1);
    let ratio_u_mean = u_mean_norm / inp.grad_u_l2.max(DENOM_FLOOR);

    BoundTerms { per_q, ratio_log_y, ratio_g, ratio_u_mean }
}

/// Builds full records along a trajectory, carrying the running density sup
/// (over output samples) and the sample-level trapezoid of X^2/(10+Y^2).
pub struct Tracker {
    p: Params,
    pub sched: ExponentSchedule,
    q_list: Vec<f64>,
    p_list: Vec<f64>,
    rho_hat: f64,
    cum_xy: f64,
    prev_xy: Option<(f64, f64)>,
}

impl Tracker {
    pub fn new(p: Params, sched: ExponentSchedule, q_list: Vec<f64>, p_list: Vec<f64>) -> Self {
        Tracker { p, sched, q_list, p_list, rho_hat: 0.0, cum_xy: 0.0, prev_xy: None }
    }

    /// Restores carried values when resuming a split trajectory.
    pub fn resume(&mut self, rho_hat: f64, cum_xy: f64) {
        self.rho_hat = rho_hat;
        self.cum_xy = cum_xy;
    }

    pub fn rho_hat(&self) -> f64 {
        self.rho_hat
    }

    pub fn cum_xy(&self) -> f64 {
        self.cum_xy
    }

    /// Computes the full record for a sampled state.
    pub fn observe(
        &mut self,
        state: &FluidState,
        stats: &crate::dynamics::SampleStats,
    ) -> Result<DiagnosticsRecord> {
        let p = self.p;
        let rho_min = state.rho.min();
        let rho_max = state.rho.max();
        self.rho_hat = self.rho_hat.max(rho_max);

        let dyx = quantities_dyx(state, &p)?;
        let xy = dyx.x2 / (10.0 + dyx.y2);
        if let Some((t0, xy0)) = self.prev_xy {
            self.cum_xy += 0.5 * (state.t - t0) * (xy0 + xy);
        }
        self.prev_xy = Some((state.t, xy));

        let nu = self.sched.nu(self.rho_hat.max(1.0), &p);
        let nset = norms(state, &self.q_list, &self.p_list, nu);

        let b = effective_viscous_flux(state, &p)?;
        let pressure = crate::state::pressure(&state.rho, &p)?;
        let p_bar = pressure.integral();
        let g = commutator_g(state);
        let g_linf = g.max_abs();
        let th = theta(&state.rho, &p)?;
        let f = desjardins_f(state, &p)?;

        let zero_velocity = state.m.max_abs() == 0.0;
        let bt = bound_terms(
            &p,
            &self.sched,
            &self.q_list,
            &BoundInputs {
                d2: dyx.d2,
                y2: dyx.y2,
                x2: dyx.x2,
                grad_u_l2: nset.grad_u_l2,
                g_linf,
                rho_max,
                rho_hat: self.rho_hat,
                u_mean: nset.u_mean,
                zero_velocity,
            },
        );

        Ok(DiagnosticsRecord {
            t: state.t,
            mass: state.mass(),
            momentum: state.momentum(),
            energy: state.energy(&p)?,
            d2: dyx.d2,
            y2: dyx.y2,
            x2: dyx.x2,
            rho_min,
            rho_max,
            rho_hat: self.rho_hat,
            grad_u_l2: nset.grad_u_l2,
            b_l2: b.l2_norm(),
            b_bar: b.integral(),
            p_bar,
            g_linf,
            theta_min: th.min(),
            f_min: f.min(),
            f_max: f.max(),
            u_mean: nset.u_mean,
            ratio_log_y: bt.ratio_log_y,
            ratio_g: bt.ratio_g,
            ratio_u_mean: bt.ratio_u_mean,
            grad_u_lq: nset.grad_u_lq,
            rho_lp: nset.rho_lp,
            weighted_moment: nset.weighted_moment,
            cum_d2: stats.cum_d2,
            cum_pp: stats.cum_pp,
            cum_xy: self.cum_xy,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::random;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(32).unwrap()
    }

    fn params() -> Params {
        Params::new(1.0, 2.0, 2.0).unwrap()
    }

    fn state_from(rho: RealField, u: VectorField) -> FluidState {
        let m = VectorField { x: rho.mul(&u.x), y: rho.mul(&u.y) };
        FluidState { t: 0.0, rho, m }
    }

    fn rest(c: f64) -> FluidState {
        FluidState { t: 0.0, rho: RealField::constant(grid(), c), m: VectorField::zeros(grid()) }
    }

    #[test]
    fn viscous_flux_trivial_cases() {
        let p = params();
        let b = effective_viscous_flux(&rest(2.0), &p).unwrap();
        assert!(b.max_abs() < 1e-12);

        // solenoidal shear: div u = 0, P = Pbar
        let u = VectorField {
            x: RealField::from_fn(grid(), |_, x2| (2.0 * PI * x2).sin()),
            y: RealField::zeros(grid()),
        };
        let s = state_from(RealField::constant(grid(), 1.0), u);
        assert!(effective_viscous_flux(&s, &p).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn viscous_flux_compressive_mode() {
        // rho = 1, u = (sin(2 pi x1), 0), mu = 1, beta = 2:
        // B = (1 + 2) * 2 pi cos(2 pi x1)
        let p = params();
        let u = VectorField {
            x: RealField::from_fn(grid(), |x1, _| (2.0 * PI * x1).sin()),
            y: RealField::zeros(grid()),
        };
        let s = state_from(RealField::constant(grid(), 1.0), u);
        let b = effective_viscous_flux(&s, &p).unwrap();
        let want = RealField::from_fn(grid(), |x1, _| 6.0 * PI * (2.0 * PI * x1).cos());
        assert!(b.sub(&want).max_abs() < 1e-9);
    }

    #[test]
    fn desjardins_f_constant_states() {
        let p = params();
        // rho = 1, u = 0, mu = 1, beta = 2 -> F = 0 + 1/2 - 0
        let f = desjardins_f(&rest(1.0), &p).unwrap();
        assert!(f.sub(&RealField::constant(grid(), 0.5)).max_abs() < 1e-12);

        // solenoidal flow: div(rho u) = 0 -> F = 1/beta
        let u = VectorField {
            x: RealField::from_fn(grid(), |_, x2| (2.0 * PI * x2).sin()),
            y: RealField::zeros(grid()),
        };
        let s = state_from(RealField::constant(grid(), 1.0), u);
        let f = desjardins_f(&s, &p).unwrap();
        assert!(f.sub(&RealField::constant(grid(), 0.5)).max_abs() < 1e-10);
    }

    #[test]
    fn desjardins_f_single_mode() {
        // rho = 1, u = (sin(2 pi x1), 0): div(rho u) = 2 pi cos(2 pi x1),
        // (-lap)^{-1} of that is cos(2 pi x1)/(2 pi), so
        // F = 1/beta - cos(2 pi x1)/(2 pi).
        let p = params();
        let u = VectorField {
            x: RealField::from_fn(grid(), |x1, _| (2.0 * PI * x1).sin()),
            y: RealField::zeros(grid()),
        };
        let s = state_from(RealField::constant(grid(), 1.0), u);
        let f = desjardins_f(&s, &p).unwrap();
        let want = RealField::from_fn(grid(), |x1, _| 0.5 - (2.0 * PI * x1).cos() / (2.0 * PI));
        assert!(f.sub(&want).max_abs() < 1e-10, "max err {}", f.sub(&want).max_abs());
    }

    #[test]
    fn theta_values_and_monotonicity() {
        let p = params();
        let th = theta(&RealField::constant(grid(), 1.0), &p).unwrap();
        assert!((th.values()[0] - 0.5).abs() < 1e-14);

        let p15 = Params::new(1.0, 1.5, 2.0).unwrap();
        let th_e = theta(&RealField::constant(grid(), std::f64::consts::E), &p15).unwrap();
        let want = 2.0 + std::f64::consts::E.powf(1.5) / 1.5;
        assert!((th_e.values()[0] - want).abs() < 1e-12);

        // strictly increasing: rho2 >= rho1 + delta pointwise
        let r1 = RealField::from_fn(grid(), |x1, x2| 1.0 + 0.3 * (2.0 * PI * (x1 + x2)).sin());
        let r2 = r1.map(|v| v + 0.1);
        let t1 = theta(&r1, &p).unwrap();
        let t2 = theta(&r2, &p).unwrap();
        assert!(t2.sub(&t1).min() > 0.0);
    }

    #[test]
    fn theta_rejects_vacuum() {
        let p = params();
        let mut v = vec![1.0; grid().len()];
        v[7] = 0.0;
        let rho = RealField::from_values(grid(), v).unwrap();
        assert!(matches!(theta(&rho, &p), Err(Error::VacuumBreach { .. })));
    }

    #[test]
    fn commutator_vanishes_for_constant_velocity() {
        // u constant: [u_i, R_iR_j] m_j = 0 by linearity
        let rho = random::positive_scalar_field(grid(), 3, 8);
        let u = VectorField {
            x: RealField::constant(grid(), 0.7),
            y: RealField::constant(grid(), -0.2),
        };
        let s = state_from(rho, u);
        let g = commutator_g(&s);
        assert!(g.max_abs() < 1e-12, "|G| = {}", g.max_abs());
    }

    #[test]
    fn commutator_vanishes_at_rest() {
        let rho = random::positive_scalar_field(grid(), 5, 8);
        let s = FluidState { t: 0.0, rho, m: VectorField::zeros(grid()) };
        assert!(commutator_g(&s).max_abs() == 0.0);
    }

    #[test]
    fn commutator_routes_agree() {
        let g64 = Grid::new(64).unwrap();
        for seed in [1u64, 2, 3] {
            let rho = random::positive_scalar_field(g64, seed, 12);
            let un = random::vector_field(g64, seed + 100, 12);
            let s = state_from(rho, un);
            let a = commutator_g(&s);
            let b = commutator_g_factored(&s);
            let err = a.sub(&b).max_abs();
            assert!(err < 1e-8, "seed {seed}: route disagreement {err:.3e}");
        }
    }

    #[test]
    fn dyx_rest_state() {
        let d = quantities_dyx(&rest(1.0), &params()).unwrap();
        assert!(d.d2.abs() < 1e-12 && d.y2.abs() < 1e-12 && d.x2.abs() < 1e-12);
    }

    #[test]
    fn dyx_shear_closed_form() {
        // u = (sin(2 pi x2), 0), rho = 1, mu = 1:
        // D^2 = Y^2 = 2 pi^2, X^2 = 8 pi^4
        let p = params();
        let u = VectorField {
            x: RealField::from_fn(grid(), |_, x2| (2.0 * PI * x2).sin()),
            y: RealField::zeros(grid()),
        };
        let s = state_from(RealField::constant(grid(), 1.0), u);
        let d = quantities_dyx(&s, &p).unwrap();
        assert!((d.d2 - 2.0 * PI * PI).abs() < 1e-9, "D2 = {}", d.d2);
        assert!((d.y2 - 2.0 * PI * PI).abs() < 1e-9, "Y2 = {}", d.y2);
        assert!((d.x2 - 8.0 * PI.powi(4)).abs() < 1e-6, "X2 = {}", d.x2);
    }

    #[test]
    fn dyx_quadratic_scaling_for_solenoidal_velocity() {
        // with div u = 0 and rho constant, B = 0 and all three quantities
        // are quadratic in u
        let p = params();
        let mk = |a: f64| {
            let u = VectorField {
                x: RealField::from_fn(grid(), |_, x2| a * (2.0 * PI * x2).sin()),
                y: RealField::from_fn(grid(), |x1, _| a * (2.0 * PI * x1).cos()),
            };
            state_from(RealField::constant(grid(), 1.0), u)
        };
        let d1 = quantities_dyx(&mk(1.0), &p).unwrap();
        let d2 = quantities_dyx(&mk(2.0), &p).unwrap();
        assert!((d2.d2 / d1.d2 - 4.0).abs() < 1e-9);
        assert!((d2.y2 / d1.y2 - 4.0).abs() < 1e-9);
        assert!((d2.x2 / d1.x2 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn y2_triangle_bound() {
        // Y^2 <= 2 D^2 + 2 int (P - Pbar)^2/(lambda + 2 mu)
        let p = params();
        for seed in [11u64, 12, 13] {
            let rho = random::positive_scalar_field(grid(), seed, 6);
            let un = random::vector_field(grid(), seed + 7, 6).scale(0.5);
            let s = state_from(rho, un);
            let d = quantities_dyx(&s, &p).unwrap();
            let pressure = crate::state::pressure(&s.rho, &p).unwrap();
            let p_bar = pressure.integral();
            let lam = crate::state::bulk_viscosity(&s.rho, &p).unwrap();
            let mut rhs = 0.0;
            for i in 0..grid().len() {
                let dp = pressure.values()[i] - p_bar;
                rhs += dp * dp / (lam.values()[i] + 2.0 * p.mu);
            }
            rhs = 2.0 * d.d2 + 2.0 * rhs / grid().len() as f64;
            assert!(d.y2 <= rhs + 1e-12, "seed {seed}: Y2 = {} > {}", d.y2, rhs);
        }
    }

    #[test]
    fn norm_family_values() {
        let u = VectorField {
            x: RealField::from_fn(grid(), |_, x2| (2.0 * PI * x2).sin()),
            y: RealField::zeros(grid()),
        };
        let s = state_from(RealField::constant(grid(), 1.0), u);
        let n = norms(&s, &[4.0], &[2.0, 4.0], 0.5);
        assert!((n.grad_u_l2 - PI * 2.0f64.sqrt()).abs() < 1e-10);
        for (_, v) in &n.rho_lp {
            assert!((v - 1.0).abs() < 1e-12);
        }

        let nr = norms(&rest(1.0), &[4.0], &[2.0], 0.5);
        assert!(nr.weighted_moment == 0.0);
        assert!(nr.u_mean.0 == 0.0 && nr.u_mean.1 == 0.0);
    }

    #[test]
    fn schedule_search_beta2_gamma2() {
        let p = params();
        let s = ExponentSchedule::search(&p, 0.5);
        assert!(s.found);
        // smallest q wins, then the largest admissible epsilon
        assert_eq!(s.q, 5.0);
        assert_eq!(s.epsilon, 0.2);
        assert!((s.varsigma - 1.4).abs() < 1e-12);
        let worst = s.alpha1.max(s.alpha2 + s.varsigma / s.q).max(s.alpha3).max(s.alpha4);
        assert!(worst < p.beta);
        for a in [s.alpha1, s.alpha2, s.alpha3, s.alpha4, s.varsigma] {
            assert!(a.is_finite() && a >= 0.0);
        }
    }

    #[test]
    fn schedule_outside_regime_reports_not_found() {
        // beta barely above 1 with large gamma: no admissible pair
        let p = Params::new(1.0, 1.05, 6.0).unwrap();
        let s = ExponentSchedule::search(&p, 0.5);
        assert!(!s.found);
    }

    #[test]
    fn nu_scales_with_rho_hat() {
        let p = params();
        let s = ExponentSchedule::search(&p, 0.5);
        assert!((s.nu(1.0, &p) - 0.5).abs() < 1e-15);
        assert!((s.nu(4.0, &p) - 0.5 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn bound_terms_conventions() {
        let p = params();
        let sched = ExponentSchedule::search(&p, 0.5);
        // rest state: ratios are 0 by convention
        let bt = bound_terms(
            &p,
            &sched,
            &[4.0],
            &BoundInputs {
                d2: 0.0,
                y2: 0.0,
                x2: 0.0,
                grad_u_l2: 0.0,
                g_linf: 0.0,
                rho_max: 1.0,
                rho_hat: 1.0,
                u_mean: (0.0, 0.0),
                zero_velocity: true,
            },
        );
        assert_eq!(bt.ratio_log_y, 0.0);
        assert_eq!(bt.ratio_g, 0.0);
        assert_eq!(bt.ratio_u_mean, 0.0);

        // rho_hat = 1 path: ratio_log_y reduces to log(10 + |grad u|^2)
        let bt = bound_terms(
            &p,
            &sched,
            &[4.0],
            &BoundInputs {
                d2: 1.0,
                y2: 1.0,
                x2: 1.0,
                grad_u_l2: 2.0,
                g_linf: 0.5,
                rho_max: 1.0,
                rho_hat: 1.0,
                u_mean: (0.1, 0.0),
                zero_velocity: false,
            },
        );
        assert!((bt.ratio_log_y - (14.0f64).ln()).abs() < 1e-12);
        assert!(bt.ratio_g.is_finite() && bt.ratio_g > 0.0);
        assert!((bt.ratio_u_mean - 0.05).abs() < 1e-12);
    }

    #[test]
    fn tracker_rho_hat_monotone_and_above_one() {
        let p = params();
        let sched = ExponentSchedule::search(&p, 0.5);
        let mut tracker = Tracker::new(p, sched, vec![4.0], vec![2.0]);
        let stats = crate::dynamics::SampleStats::default();

        let mut prev = 0.0;
        for _ in 0..2 {
            let rec = tracker.observe(&rest(1.0), &stats).unwrap();
            assert!(rec.rho_hat >= prev);
            // unit-mass states have rho_hat >= 1
            assert!(rec.rho_hat >= 1.0 - 1e-12);
            assert!(rec.is_finite());
            prev = rec.rho_hat;
        }
    }
}

