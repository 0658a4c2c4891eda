//! Right-hand-side evaluation and explicit SSP-RK3 time integration.
//!
//! The state advances in conservative variables (rho, m = rho*u); quadratic
//! fluxes (rho*u, rho*u x u, (lambda+mu) div u) are dealiased by the 2/3
//! rule, while the constitutive powers rho^beta and rho^gamma act pointwise
//! without truncation. The momentum spectrum is carried alongside its
//! samples through the RK stages, so the continuity flux needs no extra
//! forward transforms and the zero mode of every tendency vanishes exactly.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result, TerminalStatus};
use crate::field::{pairwise_sum, RealField, SpectralField, VectorField};
use crate::grid::Grid;
use crate::spectral::Engine;
use crate::state::{pow_scalar, FluidState, Params};

type C = Complex<f64>;

/// Time-stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct StepControl {
    /// CFL fraction in (0, 1].
    pub cfl: f64,
    /// Hard cap on the step size.
    pub dt_max: f64,
    pub t_end: f64,
    pub output_interval: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { cfl: 0.4, dt_max: f64::INFINITY, t_end: 1.0, output_interval: 0.1 }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParams(format!("cfl must be in (0,1], got {}", self.cfl)));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidParams("dt_max must be positive".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParams("t_end must be finite and >= 0".into()));
        }
        if !(self.output_interval > 0.0) {
            return Err(Error::InvalidParams("output_interval must be positive".into()));
        }
        Ok(())
    }
}

/// Largest admissible step for a state:
/// dt = cfl * min( dx / max(|u| + c_s), dx^2 min(rho) / (2 max(lambda+2mu)) )
/// with sound speed c_s = sqrt(gamma rho^(gamma-1)) and dx = 1/n.
pub fn cfl_dt(state: &FluidState, p: &Params, cfl: f64) -> f64 {
    let dx = state.grid().dx();
    let rho = state.rho.values();
    let m1 = state.m.x.values();
    let m2 = state.m.y.values();
    let mut max_speed = 0.0f64;
    let mut min_rho = f64::INFINITY;
    let mut max_rho = 0.0f64;
    for i in 0..rho.len() {
        let r = rho[i];
        let inv = 1.0 / r;
        let speed = (m1[i] * m1[i] + m2[i] * m2[i]).sqrt() * inv
            + (p.gamma * pow_scalar(r, p.gamma - 1.0)).sqrt();
        max_speed = max_speed.max(speed);
        min_rho = min_rho.min(r);
        max_rho = max_rho.max(r);
    }
    let lam2mu = pow_scalar(max_rho, p.beta) + 2.0 * p.mu;
    cfl * (dx / max_speed).min(dx * dx * min_rho / (2.0 * lam2mu))
}

/// Integral scalars of one state, produced as a by-product of a stage
/// evaluation: the dissipation functional and pressure fluctuation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageScalars {
    /// D^2 = int{ (lambda+2mu)|div u|^2 + mu|rot u|^2 }.
    pub d2: f64,
    /// Mean pressure.
    pub p_bar: f64,
    /// int (P - Pbar)^2.
    pub pp2: f64,
}

/// Workspace for advancing one trajectory. The current state lives in the
/// stage buffers between steps; `FluidState` values are materialized only
/// on demand.
pub struct Stepper {
    grid: Grid,
    p: Params,
    eng: Engine,
    kd: Vec<f64>,
    kf: Vec<f64>,
    mask: Vec<f64>,
    // current / stage state
    t: f64,
    rho_s: Vec<f64>,
    m1_s: Vec<f64>,
    m2_s: Vec<f64>,
    mh1_s: Vec<C>,
    mh2_s: Vec<C>,
    // step-start saves for the RK combinations
    rho_0: Vec<f64>,
    mh1_0: Vec<C>,
    mh2_0: Vec<C>,
    // pointwise products
    u1: Vec<f64>,
    u2: Vec<f64>,
    t11: Vec<f64>,
    t12: Vec<f64>,
    t22: Vec<f64>,
    lam_mu: Vec<f64>,
    p_real: Vec<f64>,
    divu: Vec<f64>,
    d_rho: Vec<f64>,
    // spectra
    s_u1: Vec<C>,
    s_u2: Vec<C>,
    s_t11: Vec<C>,
    s_t12: Vec<C>,
    s_t22: Vec<C>,
    s_visc: Vec<C>,
    s_p: Vec<C>,
    s_dm1: Vec<C>,
    s_dm2: Vec<C>,
    s_tmp: Vec<C>,
    parts: Vec<f64>,
    // pass-A reductions of the last tracked stage
    max_speed: f64,
    min_rho: f64,
    max_rho: f64,
}

enum PassA {
    Ok,
    Vacuum(usize, f64),
    NonFinite,
}

impl Stepper {
    pub fn new(grid: Grid, p: Params) -> Self {
        let n2 = grid.len();
        let sl = SpectralField::packed_len(grid);
        let eng = Engine::new(grid);
        let kd = eng.k_deriv().to_vec();
        let kf = eng.k_full().to_vec();
        let mask = eng.dealias_mask().to_vec();
        let zr = || vec![0.0f64; n2];
        let zc = || vec![C::new(0.0, 0.0); sl];
        Stepper {
            grid,
            p,
            eng,
            kd,
            kf,
            mask,
            t: 0.0,
            rho_s: zr(),
            m1_s: zr(),
            m2_s: zr(),
            mh1_s: zc(),
            mh2_s: zc(),
            rho_0: zr(),
            mh1_0: zc(),
            mh2_0: zc(),
            u1: zr(),
            u2: zr(),
            t11: zr(),
            t12: zr(),
            t22: zr(),
            lam_mu: zr(),
            p_real: zr(),
            divu: zr(),
            d_rho: zr(),
            s_u1: zc(),
            s_u2: zc(),
            s_t11: zc(),
            s_t12: zc(),
            s_t22: zc(),
            s_visc: zc(),
            s_p: zc(),
            s_dm1: zc(),
            s_dm2: zc(),
            s_tmp: zc(),
            parts: Vec::new(),
            max_speed: 0.0,
            min_rho: f64::INFINITY,
            max_rho: 0.0,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn params(&self) -> &Params {
        &self.p
    }

    /// Loads a state into the stage buffers.
    pub fn load(&mut self, state: &FluidState) {
        self.t = state.t;
        self.rho_s.copy_from_slice(state.rho.values());
        self.m1_s.copy_from_slice(state.m.x.values());
        self.m2_s.copy_from_slice(state.m.y.values());
        self.eng.forward(&self.m1_s, &mut self.mh1_s);
        self.eng.forward(&self.m2_s, &mut self.mh2_s);
    }

    /// Materializes the loaded state.
    pub fn current_state(&self) -> FluidState {
        FluidState {
            t: self.t,
            rho: RealField::from_raw(self.grid, self.rho_s.clone()),
            m: VectorField {
                x: RealField::from_raw(self.grid, self.m1_s.clone()),
                y: RealField::from_raw(self.grid, self.m2_s.clone()),
            },
        }
    }

    fn pass_a(&mut self, track: bool) -> PassA {
        let beta = self.p.beta;
        let gamma = self.p.gamma;
        if beta == 2.0 && gamma == 2.0 {
            self.pass_a_inner(track, |x| x * x, |x| x * x)
        } else {
            self.pass_a_inner(track, |x| pow_scalar(x, beta), |x| pow_scalar(x, gamma))
        }
    }

    fn pass_a_inner(
        &mut self,
        track: bool,
        pb: impl Fn(f64) -> f64,
        pg: impl Fn(f64) -> f64,
    ) -> PassA {
        let mu = self.p.mu;
        let gamma = self.p.gamma;
        let n2 = self.grid.len();
        let rho_s = &self.rho_s[..n2];
        let m1_s = &self.m1_s[..n2];
        let m2_s = &self.m2_s[..n2];
        let u1 = &mut self.u1[..n2];
        let u2 = &mut self.u2[..n2];
        let t11 = &mut self.t11[..n2];
        let t12 = &mut self.t12[..n2];
        let t22 = &mut self.t22[..n2];
        let lam_mu = &mut self.lam_mu[..n2];
        let p_real = &mut self.p_real[..n2];

        // Validity reduction first, keeping the main sweep branch-free.
        let mut min_rho = f64::INFINITY;
        let mut max_rho = f64::NEG_INFINITY;
        let mut poison = 0.0f64;
        for &r in rho_s {
            min_rho = min_rho.min(r);
            max_rho = max_rho.max(r);
            poison += r;
        }
        if !poison.is_finite() {
            return PassA::NonFinite;
        }
        if !(min_rho > 0.0) {
            let i = rho_s.iter().position(|&r| !(r > 0.0)).unwrap_or(0);
            return PassA::Vacuum(i, rho_s[i]);
        }

        // Narrow loops vectorize where one wide multi-stream sweep will not.
        for ((v, &m), &r) in u1.iter_mut().zip(m1_s).zip(rho_s) {
            *v = m / r;
        }
        for ((v, &m), &r) in u2.iter_mut().zip(m2_s).zip(rho_s) {
            *v = m / r;
        }
        for ((t, &m), &v) in t11.iter_mut().zip(m1_s).zip(u1.iter()) {
            *t = m * v;
        }
        for ((t, &m), &v) in t12.iter_mut().zip(m1_s).zip(u2.iter()) {
            *t = m * v;
        }
        for ((t, &m), &v) in t22.iter_mut().zip(m2_s).zip(u2.iter()) {
            *t = m * v;
        }
        for (l, &r) in lam_mu.iter_mut().zip(rho_s) {
            *l = pb(r) + mu;
        }
        for (p, &r) in p_real.iter_mut().zip(rho_s) {
            *p = pg(r);
        }

        if track {
            let mut max_u2 = 0.0f64;
            for i in 0..n2 {
                max_u2 = max_u2.max(u1[i] * u1[i] + u2[i] * u2[i]);
            }
            if !max_u2.is_finite() {
                return PassA::NonFinite;
            }
            // max(|u| + c_s) <= max|u| + max(c_s); c_s is monotone in rho,
            // so the bound needs no pointwise sweep and never admits a
            // larger dt than the exact formula.
            self.max_speed = max_u2.sqrt() + (gamma * pow_scalar(max_rho, gamma - 1.0)).sqrt();
            self.min_rho = min_rho;
            self.max_rho = max_rho;
        }
        PassA::Ok
    }

    /// Evaluates the tendencies of the loaded stage state: on success
    /// `d_rho` holds density-tendency samples and (s_dm1, s_dm2) the
    /// momentum-tendency spectra. Optionally reports the stage scalars.
    fn rhs_stage(
        &mut self,
        track: bool,
        want_scalars: bool,
    ) -> std::result::Result<Option<StageScalars>, TerminalStatus> {
        let n = self.grid.n();
        let half = n / 2;
        let n2 = self.grid.len();

        match self.pass_a(track) {
            PassA::Ok => {}
            PassA::Vacuum(i, v) => {
                return Err(TerminalStatus::VacuumBreach {
                    t: self.t,
                    i: i / n,
                    j: i % n,
                    value: v,
                })
            }
            PassA::NonFinite => {
                return Err(TerminalStatus::NonFinite { t: self.t, what: "density".into() })
            }
        }

        // All of these buffers are dead after their transform, so the r2c
        // pass may consume them in place.
        self.eng.forward_consuming(&mut self.u1, &mut self.s_u1);
        self.eng.forward_consuming(&mut self.u2, &mut self.s_u2);
        self.eng.forward_dealiased_consuming(&mut self.t11, &mut self.s_t11);
        self.eng.forward_dealiased_consuming(&mut self.t12, &mut self.s_t12);
        self.eng.forward_dealiased_consuming(&mut self.t22, &mut self.s_t22);
        self.eng.forward_consuming(&mut self.p_real, &mut self.s_p);

        // div u from the velocity spectra; with scalars requested, also
        // accumulate int mu |rot u|^2 by Parseval from the same pass.
        let mut rot_energy = 0.0f64;
        {
            let kd = &self.kd[..n];
            let s_u1 = &self.s_u1[..];
            let s_u2 = &self.s_u2[..];
            let s_tmp = &mut self.s_tmp[..];
            if want_scalars {
                for j2 in 0..=half {
                    let k2 = kd[j2];
                    let w = if j2 == 0 || j2 == half { 1.0 } else { 2.0 };
                    let row = j2 * n;
                    let mut acc = 0.0;
                    for j1 in 0..n {
                        let k1 = kd[j1];
                        let a = s_u1[row + j1];
                        let b = s_u2[row + j1];
                        s_tmp[row + j1] =
                            C::new(-k1 * a.im - k2 * b.im, k1 * a.re + k2 * b.re);
                        let rre = k2 * a.re - k1 * b.re;
                        let rim = k2 * a.im - k1 * b.im;
                        acc += rre * rre + rim * rim;
                    }
                    rot_energy += w * acc;
                }
            } else {
                for j2 in 0..=half {
                    let k2 = kd[j2];
                    let row = j2 * n;
                    for j1 in 0..n {
                        let k1 = kd[j1];
                        let a = s_u1[row + j1];
                        let b = s_u2[row + j1];
                        s_tmp[row + j1] =
                            C::new(-k1 * a.im - k2 * b.im, k1 * a.re + k2 * b.re);
                    }
                }
            }
        }
        self.eng.inverse_consuming(&mut self.s_tmp, &mut self.divu);

        // Viscous flux (lambda + mu) div u; u1's samples are free now.
        {
            let u1 = &mut self.u1[..n2];
            let lam_mu = &self.lam_mu[..n2];
            let divu = &self.divu[..n2];
            for i in 0..n2 {
                u1[i] = lam_mu[i] * divu[i];
            }
        }
        let scalars = if want_scalars { Some(self.stage_scalars(rot_energy)) } else { None };
        self.eng.forward_dealiased_consuming(&mut self.u1, &mut self.s_visc);

        // Tendency assembly:
        //   d_mh_i = -i k_j T_ij - i k_i (P - V) - mu |k|^2 u_i
        //   d_rho_hat = -i k . dealias(mh)
        {
            let mu = self.p.mu;
            let kd = &self.kd[..n];
            let kf = &self.kf[..n];
            let mask = &self.mask[..];
            let s_t11 = &self.s_t11[..];
            let s_t12 = &self.s_t12[..];
            let s_t22 = &self.s_t22[..];
            let s_p = &self.s_p[..];
            let s_visc = &self.s_visc[..];
            let s_u1 = &self.s_u1[..];
            let s_u2 = &self.s_u2[..];
            let mh1_s = &self.mh1_s[..];
            let mh2_s = &self.mh2_s[..];
            let s_dm1 = &mut self.s_dm1[..];
            let s_dm2 = &mut self.s_dm2[..];
            let s_tmp = &mut self.s_tmp[..];
            for j2 in 0..=half {
                let k2d = kd[j2];
                let k2f = kf[j2];
                let row = j2 * n;
                for j1 in 0..n {
                    let idx = row + j1;
                    let k1d = kd[j1];
                    let k1f = kf[j1];
                    let kk = mu * (k1f * k1f + k2f * k2f);
                    let t11 = s_t11[idx];
                    let t12 = s_t12[idx];
                    let t22 = s_t22[idx];
                    let pv = s_p[idx];
                    let vv = s_visc[idx];
                    let w1 = s_u1[idx];
                    let w2 = s_u2[idx];
                    let g1re = t11.re * k1d + t12.re * k2d + (pv.re - vv.re) * k1d;
                    let g1im = t11.im * k1d + t12.im * k2d + (pv.im - vv.im) * k1d;
                    let g2re = t12.re * k1d + t22.re * k2d + (pv.re - vv.re) * k2d;
                    let g2im = t12.im * k1d + t22.im * k2d + (pv.im - vv.im) * k2d;
                    s_dm1[idx] = C::new(g1im - kk * w1.re, -g1re - kk * w1.im);
                    s_dm2[idx] = C::new(g2im - kk * w2.re, -g2re - kk * w2.im);
                    let w = mask[idx];
                    let a = mh1_s[idx];
                    let b = mh2_s[idx];
                    s_tmp[idx] =
                        C::new(w * (a.im * k1d + b.im * k2d), -w * (a.re * k1d + b.re * k2d));
                }
            }
        }
        self.eng.inverse_consuming_banded(&mut self.s_tmp, &mut self.d_rho);

        Ok(scalars)
    }

    /// D^2, mean pressure and pressure fluctuation of the stage state;
    /// assumes pass A and div u are current. The rot part arrives by
    /// Parseval from the divergence pass; the pressure terms come from the
    /// pressure spectrum the same way.
    fn stage_scalars(&mut self, rot_energy: f64) -> StageScalars {
        let mu = self.p.mu;
        let n2 = self.grid.len();
        self.parts.clear();
        for start in (0..n2).step_by(32) {
            let end = (start + 32).min(n2);
            let mut s = 0.0;
            for i in start..end {
                let l2m = self.lam_mu[i] + mu;
                s += l2m * self.divu[i] * self.divu[i];
            }
            self.parts.push(s);
        }
        let d2 = pairwise_sum(&self.parts) / n2 as f64 + mu * rot_energy;

        let n = self.grid.n();
        let half = n / 2;
        let p_bar = self.s_p[0].re;
        let mut pp2 = 0.0;
        for j2 in 0..=half {
            let w = if j2 == 0 || j2 == half { 1.0 } else { 2.0 };
            let row = &self.s_p[j2 * n..(j2 + 1) * n];
            let mut acc = 0.0;
            for c in row {
                acc += c.re * c.re + c.im * c.im;
            }
            pp2 += w * acc;
        }
        pp2 -= p_bar * p_bar + self.s_p[0].im * self.s_p[0].im;
        StageScalars { d2, p_bar, pp2 }
    }

    /// Stage scalars of the loaded state (used to close trapezoid
    /// accumulators at sample boundaries and run end).
    fn scalars_of_loaded(&mut self) -> std::result::Result<StageScalars, TerminalStatus> {
        self.rhs_stage(false, true).map(|s| s.expect("scalars requested"))
    }

    fn cfl_from_tracked(&self, cfl: f64, dt_max: f64) -> f64 {
        let dx = self.grid.dx();
        let lam2mu = pow_scalar(self.max_rho, self.p.beta) + 2.0 * self.p.mu;
        let acoustic = dx / self.max_speed;
        let diffusive = dx * dx * self.min_rho / (2.0 * lam2mu);
        (cfl * acoustic.min(diffusive)).min(dt_max)
    }

    /// Completes an SSP-RK3 step of size dt. The stage-1 tendencies must
    /// already be in (d_rho, s_dm1, s_dm2); on return the stage buffers hold
    /// the advanced state.
    /// RK combination: state = a * saved + b * (state + dt * tendency).
    fn combine(&mut self, a: f64, b: f64, dt: f64) {
        let n2 = self.grid.len();
        let rho_s = &mut self.rho_s[..n2];
        let rho_0 = &self.rho_0[..n2];
        let d_rho = &self.d_rho[..n2];
        for i in 0..n2 {
            rho_s[i] = a * rho_0[i] + b * (rho_s[i] + dt * d_rho[i]);
        }
        let sl = self.mh1_s.len();
        let mh1_s = &mut self.mh1_s[..sl];
        let mh1_0 = &self.mh1_0[..sl];
        let s_dm1 = &self.s_dm1[..sl];
        let mh2_s = &mut self.mh2_s[..sl];
        let mh2_0 = &self.mh2_0[..sl];
        let s_dm2 = &self.s_dm2[..sl];
        for i in 0..sl {
            mh1_s[i] = a * mh1_0[i] + b * (mh1_s[i] + dt * s_dm1[i]);
            mh2_s[i] = a * mh2_0[i] + b * (mh2_s[i] + dt * s_dm2[i]);
        }
    }

    fn complete_step(&mut self, dt: f64) -> std::result::Result<(), TerminalStatus> {
        self.rho_0.copy_from_slice(&self.rho_s);
        self.mh1_0.copy_from_slice(&self.mh1_s);
        self.mh2_0.copy_from_slice(&self.mh2_s);

        // U1 = U + dt L(U)
        self.combine(0.0, 1.0, dt);
        self.materialize_momentum();

        // U2 = 3/4 U + 1/4 (U1 + dt L(U1))
        self.rhs_stage(false, false)?;
        self.combine(0.75, 0.25, dt);
        self.materialize_momentum();

        // U <- 1/3 U + 2/3 (U2 + dt L(U2))
        self.rhs_stage(false, false)?;
        self.combine(1.0 / 3.0, 2.0 / 3.0, dt);
        self.materialize_momentum();
        Ok(())
    }

    fn materialize_momentum(&mut self) {
        self.s_tmp.copy_from_slice(&self.mh1_s);
        self.eng.inverse_consuming(&mut self.s_tmp, &mut self.m1_s);
        self.s_tmp.copy_from_slice(&self.mh2_s);
        self.eng.inverse_consuming(&mut self.s_tmp, &mut self.m2_s);
    }

    /// One SSP-RK3 step of the loaded state with a caller-chosen dt.
    pub fn step_loaded(&mut self, dt: f64) -> std::result::Result<(), TerminalStatus> {
        self.rhs_stage(false, false)?;
        self.complete_step(dt)?;
        self.t += dt;
        Ok(())
    }
}

/// Evaluates (d_rho, d_m) for a state; allocates its own workspace.
pub fn rhs(state: &FluidState, p: &Params) -> Result<(RealField, VectorField)> {
    let mut st = Stepper::new(state.grid(), *p);
    st.load(state);
    match st.rhs_stage(false, false) {
        Ok(_) => {}
        Err(TerminalStatus::VacuumBreach { t, i, j, value }) => {
            return Err(Error::VacuumBreach { t, i, j, value })
        }
        Err(_) => return Err(Error::NonFinite { context: "rhs evaluation" }),
    }
    let d_rho = RealField::from_raw(state.grid(), st.d_rho.clone());
    let mut dm1 = RealField::zeros(state.grid());
    let mut dm2 = RealField::zeros(state.grid());
    let mut tmp = st.s_dm1.clone();
    st.eng.inverse_consuming(&mut tmp, dm1.values_mut());
    tmp.copy_from_slice(&st.s_dm2);
    st.eng.inverse_consuming(&mut tmp, dm2.values_mut());
    Ok((d_rho, VectorField { x: dm1, y: dm2 }))
}

/// One SSP-RK3 step with a caller-chosen dt.
pub fn step(state: &FluidState, p: &Params, dt: f64) -> Result<FluidState> {
    let mut st = Stepper::new(state.grid(), *p);
    st.load(state);
    match st.step_loaded(dt) {
        Ok(()) => Ok(st.current_state()),
        Err(TerminalStatus::VacuumBreach { t, i, j, value }) => {
            Err(Error::VacuumBreach { t, i, j, value })
        }
        Err(_) => Err(Error::NonFinite { context: "time step" }),
    }
}

/// Per-sample data handed to the observer alongside the state.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleStats {
    pub steps: u64,
    pub dt_last: f64,
    /// int_0^t D^2 dtau, accumulated by per-step trapezoids.
    pub cum_d2: f64,
    /// int_0^t ||P - Pbar||_{L^2}^2 dtau, same scheme.
    pub cum_pp: f64,
}

/// Accumulators carried across a checkpoint/resume split.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ResumeCarry {
    pub cum_d2: f64,
    pub cum_pp: f64,
    pub steps: u64,
}

/// Result of a trajectory run.
#[derive(Debug)]
pub struct RunSummary {
    pub final_state: FluidState,
    pub status: TerminalStatus,
    pub steps: u64,
    pub samples: usize,
    pub stats: SampleStats,
}

/// Advances `init` to `ctl.t_end`, invoking the observer at every absolute
/// time k * output_interval (including the start when it lies on that
/// lattice). Physical aborts (vacuum, NaN, dt collapse) are reported in the
/// summary status rather than as `Err`.
pub fn simulate<F>(
    init: FluidState,
    p: &Params,
    ctl: &StepControl,
    observer: F,
) -> Result<RunSummary>
where
    F: FnMut(&FluidState, &SampleStats),
{
    simulate_carrying(init, p, ctl, ResumeCarry::default(), observer, |_, _| {})
}

/// `simulate` with accumulator carry (for resume) and a post-step density
/// hook. The hook exists so negative-control fixtures can tamper with a
/// trajectory; production callers pass a no-op.
#[doc(hidden)]
pub fn simulate_carrying<F, H>(
    init: FluidState,
    p: &Params,
    ctl: &StepControl,
    carry: ResumeCarry,
    mut observer: F,
    mut post_step: H,
) -> Result<RunSummary>
where
    F: FnMut(&FluidState, &SampleStats),
    H: FnMut(f64, &mut [f64]),
{
    ctl.validate()?;
    init.check_valid()?;
    let grid = init.grid();
    let mut st = Stepper::new(grid, *p);
    st.load(&init);

    let mut stats = SampleStats {
        steps: carry.steps,
        dt_last: 0.0,
        cum_d2: carry.cum_d2,
        cum_pp: carry.cum_pp,
    };

    let interval = ctl.output_interval;
    let eps_of = |t: f64| 1e-12 * t.abs().max(1.0);

    let mut k = ((st.t + eps_of(st.t)) / interval).floor() as i64;
    let mut samples = 0usize;
    if (st.t - k as f64 * interval).abs() <= eps_of(st.t) {
        observer(&st.current_state(), &stats);
        samples += 1;
    }

    let mut open_knot: Option<StageScalars> = None;
    let mut status = TerminalStatus::Completed;

    'run: while st.t < ctl.t_end - eps_of(ctl.t_end) {
        let t_next_sample = (k + 1) as f64 * interval;
        let t_target = t_next_sample.min(ctl.t_end);

        // Stage-1 tendencies first: they are dt-independent and provide the
        // CFL reductions and the step-start scalars.
        let sc = match st.rhs_stage(true, true) {
            Ok(s) => s.expect("scalars requested"),
            Err(s) => {
                status = s;
                break 'run;
            }
        };
        if let Some(prev) = open_knot {
            stats.cum_d2 += 0.5 * stats.dt_last * (prev.d2 + sc.d2);
            stats.cum_pp += 0.5 * stats.dt_last * (prev.pp2 + sc.pp2);
        }
        open_knot = Some(sc);

        let remaining = t_target - st.t;
        let dt = st.cfl_from_tracked(ctl.cfl, ctl.dt_max).min(remaining);
        if !(dt > 1e-12 && dt.is_finite()) {
            status = TerminalStatus::CflCollapse { t: st.t, dt };
            break 'run;
        }

        if let Err(s) = st.complete_step(dt) {
            status = s;
            break 'run;
        }
        st.t = if dt == remaining { t_target } else { st.t + dt };
        stats.dt_last = dt;
        stats.steps += 1;
        post_step(st.t, &mut st.rho_s);

        let on_sample = (st.t - t_next_sample).abs() <= eps_of(st.t);
        let at_end = st.t >= ctl.t_end - eps_of(ctl.t_end);
        if on_sample || at_end {
            // Close the trapezoid at this knot so cumulative integrals are
            // accurate at sample times.
            let end_sc = match st.scalars_of_loaded() {
                Ok(s) => s,
                Err(s) => {
                    status = s;
                    break 'run;
                }
            };
            if let Some(prev) = open_knot.take() {
                stats.cum_d2 += 0.5 * stats.dt_last * (prev.d2 + end_sc.d2);
                stats.cum_pp += 0.5 * stats.dt_last * (prev.pp2 + end_sc.pp2);
            }
            if on_sample && t_next_sample <= ctl.t_end + eps_of(ctl.t_end) {
                k += 1;
                observer(&st.current_state(), &stats);
                samples += 1;
            }
        }
    }

    Ok(RunSummary { final_state: st.current_state(), status, steps: stats.steps, samples, stats })
}
