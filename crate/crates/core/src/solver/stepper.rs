//! First-order IMEX stepping.
//!
//! The constant-coefficient linearization about `(q, u) = (0, 0)`,
//!
//! ```text
//! ∂_t q + div u = 0,   ∂_t u - 𝒜u - κ∇D[q] + p₁∇q = 0,
//! ```
//!
//! with `p₁ = max(P'(1), 0)`, is advanced by an exact per-mode backward Euler
//! solve. Everything else is explicit. The density equation is kept in the
//! conservative form `-div(qu)`, whose zero mode vanishes identically.

use std::sync::Arc;

use rustfft::num_complex::Complex64;

use super::pressure::{check_admissible, i_coeff};
use super::{ModelConfig, State, StepperConfig, Trajectory};
use crate::error::{Error, Result};
use crate::grid::{diffusion_a_spectral, gradient, Grid, RealField, SpectralField, VectorField};

/// Time derivative of the full nonlinear system, in the non-conservative form
/// written in the module docs. Products are dealiased when `dealias` is set.
pub fn rhs(state: &State, model: &ModelConfig, dealias: bool) -> Result<(RealField, VectorField)> {
    model.validate()?;
    if !state.is_finite() {
        return Err(Error::param("rhs: state is not finite"));
    }
    if state.q.min() <= -1.0 {
        return Err(Error::Admissibility {
            value: 1.0 + state.q.min(),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let grid = state.grid();
    let dim = grid.dim();
    let params = model.params;
    let finish = |f: RealField| -> RealField {
        if dealias {
            f.forward().dealias().inverse()
        } else {
            f
        }
    };

    let qh = state.q.forward();
    let uh = state.u.forward();
    let grad_q: Vec<RealField> = gradient(&qh).iter().map(|g| g.inverse()).collect();
    let div_u = crate::grid::divergence(&uh).inverse();
    let a_u: Vec<RealField> = diffusion_a_spectral(&uh, params.mu, params.lambda)
        .iter()
        .map(|f| f.inverse())
        .collect();
    let cap_grad: Vec<RealField> = gradient(
        &qh.scale_modes(|m| params.kappa * model.capillary.symbol_k2(m.k2)),
    )
    .iter()
    .map(|g| g.inverse())
    .collect();

    let q = state.q.values();
    let n = grid.len();
    let mut dq = vec![0.0; n];
    for i in 0..n {
        let adv: f64 = (0..dim).map(|a| state.u.component(a).values()[i] * grad_q[a].values()[i]).sum();
        dq[i] = -adv - (1.0 + q[i]) * div_u.values()[i];
    }
    let mut du = Vec::with_capacity(dim);
    for a in 0..dim {
        let grad_ua: Vec<RealField> = gradient(&uh[a]).iter().map(|g| g.inverse()).collect();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let rho = 1.0 + q[i];
            let adv: f64 = (0..dim)
                .map(|b| state.u.component(b).values()[i] * grad_ua[b].values()[i])
                .sum();
            out[i] = -adv + a_u[a].values()[i] / rho
                - model.pressure.dp(rho) / rho * grad_q[a].values()[i]
                + cap_grad[a].values()[i];
        }
        du.push(finish(RealField::new(grid, out)?));
    }
    Ok((finish(RealField::new(grid, dq)?), VectorField::new(du)?))
}

/// Per-mode constants of the implicit solve.
#[derive(Clone, Copy, Debug)]
struct ModeSolve {
    /// `|kd|`
    kd_norm: f64,
    /// `kd / |kd|`
    e: [f64; 2],
    /// `1 / (1 + dt μ|k|²)`
    transverse: f64,
    /// `1 + dt ν_L` with `ν_L = μ|k|² + (λ+μ)|kd|²`
    damp: f64,
    /// `κσ(k) - p₁`
    cap: f64,
    /// `1 / det`
    det_inv: f64,
}

/// IMEX stepper bound to one grid, model and step size.
pub struct Stepper {
    grid: Arc<Grid>,
    model: ModelConfig,
    cfg: StepperConfig,
    p1: f64,
    solve: Vec<ModeSolve>,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, model: &ModelConfig, cfg: &StepperConfig) -> Result<Self> {
        model.validate()?;
        cfg.validate()?;
        model
            .pressure
            .check_range(cfg.density_floor, cfg.density_ceiling)?;
        let dt = cfg.dt;
        let p = model.params;
        let p1 = model.pressure.implicit_slope();
        let solve = grid
            .modes()
            .iter()
            .map(|m| {
                let kd_norm = m.kd2().sqrt();
                let e = if kd_norm > 0.0 {
                    [m.kd[0] / kd_norm, m.kd[1] / kd_norm]
                } else {
                    [0.0, 0.0]
                };
                let nu_l = p.mu * m.k2 + (p.lambda + p.mu) * m.kd2();
                let cap = p.kappa * model.capillary.symbol_k2(m.k2) - p1;
                let damp = 1.0 + dt * nu_l;
                let det = damp - dt * dt * m.kd2() * cap;
                ModeSolve {
                    kd_norm,
                    e,
                    transverse: 1.0 / (1.0 + dt * p.mu * m.k2),
                    damp,
                    cap,
                    det_inv: 1.0 / det,
                }
            })
            .collect();
        Ok(Stepper {
            grid: Arc::clone(grid),
            model: *model,
            cfg: *cfg,
            p1,
            solve,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    fn check_cfl(&self, u: &VectorField) -> Result<()> {
        let courant = self.cfg.dt * u.max_magnitude() / self.grid.spacing();
        if courant > self.cfg.cfl {
            return Err(Error::param(format!(
                "advective CFL violated: dt max|u| / dx = {courant:.3e} > {}",
                self.cfg.cfl
            )));
        }
        Ok(())
    }

    /// Explicit terms `(N_q, N_u)` in spectral form.
    fn explicit(
        &self,
        q: &RealField,
        u: &VectorField,
        qh: &SpectralField,
        uh: &[SpectralField],
    ) -> Result<(SpectralField, Vec<SpectralField>)> {
        let grid = &self.grid;
        let dim = grid.dim();
        let n = grid.len();
        let params = self.model.params;
        let law = &self.model.pressure;
        let qv = q.values();

        // N_q = -div(q u)
        let flux: Vec<SpectralField> = (0..dim)
            .map(|a| q.zip_map(u.component(a), |x, y| x * y).forward())
            .collect();
        let mut nq = crate::grid::divergence(&flux);
        nq.coeffs_mut().iter_mut().for_each(|c| *c = -*c);

        let grad_q: Vec<RealField> = gradient(qh).iter().map(|g| g.inverse()).collect();
        let a_u: Vec<RealField> = diffusion_a_spectral(uh, params.mu, params.lambda)
            .iter()
            .map(|f| f.inverse())
            .collect();
        let pressure_coeff: Vec<f64> = qv
            .iter()
            .map(|&v| law.dp(1.0 + v) / (1.0 + v) - self.p1)
            .collect();
        let i_q: Vec<f64> = qv.iter().map(|&v| i_coeff(v)).collect();

        let mut nu = Vec::with_capacity(dim);
        for a in 0..dim {
            let grad_ua: Vec<RealField> = gradient(&uh[a]).iter().map(|g| g.inverse()).collect();
            let mut out = vec![0.0; n];
            for (i, o) in out.iter_mut().enumerate() {
                let mut adv = 0.0;
                for b in 0..dim {
                    adv += u.component(b).values()[i] * grad_ua[b].values()[i];
                }
                *o = -adv - i_q[i] * a_u[a].values()[i] - pressure_coeff[i] * grad_q[a].values()[i];
            }
            nu.push(RealField::new(grid, out)?.forward());
        }
        if self.cfg.dealias {
            nq.dealias_in_place();
            nu.iter_mut().for_each(|f| f.dealias_in_place());
        }
        Ok((nq, nu))
    }

    /// Backward Euler solve of the linear block with explicit forcing.
    fn implicit(&self, x: &mut SpectralField, y: &mut [SpectralField]) {
        let dt = self.cfg.dt;
        let dim = self.grid.dim();
        let i = Complex64::new(0.0, 1.0);
        for (idx, s) in self.solve.iter().enumerate() {
            let xv = x.coeffs()[idx];
            if s.kd_norm == 0.0 {
                for comp in y.iter_mut() {
                    comp.coeffs_mut()[idx] *= s.transverse;
                }
                continue;
            }
            let mut a_y = Complex64::new(0.0, 0.0);
            for (axis, comp) in y.iter().enumerate() {
                a_y += comp.coeffs()[idx] * s.e[axis];
            }
            let q_new = (xv * s.damp - i * (dt * s.kd_norm) * a_y) * s.det_inv;
            let a_new = (a_y + i * (dt * s.kd_norm * s.cap) * xv) * s.det_inv;
            x.coeffs_mut()[idx] = q_new;
            for axis in 0..dim {
                let c = &mut y[axis].coeffs_mut()[idx];
                *c = (*c - a_y * s.e[axis]) * s.transverse + a_new * s.e[axis];
            }
        }
    }

    /// One step from the spectral and physical representations of a state.
    fn advance(
        &self,
        q: &RealField,
        u: &VectorField,
        qh: &SpectralField,
        uh: &[SpectralField],
    ) -> Result<(SpectralField, Vec<SpectralField>)> {
        let dt = self.cfg.dt;
        let (nq, nu) = self.explicit(q, u, qh, uh)?;
        let mut x = qh.clone();
        for (c, n) in x.coeffs_mut().iter_mut().zip(nq.coeffs()) {
            *c += dt * n;
        }
        let mut y: Vec<SpectralField> = uh.to_vec();
        for (comp, n) in y.iter_mut().zip(&nu) {
            for (c, nv) in comp.coeffs_mut().iter_mut().zip(n.coeffs()) {
                *c += dt * nv;
            }
        }
        self.implicit(&mut x, &mut y);
        Ok((x, y))
    }

    fn check_state(&self, state: &State) -> Result<()> {
        let halt = |reason: String| Error::Halted {
            t: state.t,
            reason,
            snapshot: Box::new(state.clone()),
        };
        if !state.is_finite() {
            return Err(halt("non-finite values".into()));
        }
        if let Err(e) = check_admissible(&state.q, self.cfg.density_floor, self.cfg.density_ceiling) {
            return Err(halt(e.to_string()));
        }
        Ok(())
    }

    /// Advances `state` by one step.
    pub fn step(&self, state: &State) -> Result<State> {
        self.check_state(state)?;
        self.check_cfl(&state.u)?;
        let (qh, uh) = self.advance(&state.q, &state.u, &state.q.forward(), &state.u.forward())?;
        let next = State::new(
            state.t + self.cfg.dt,
            qh.inverse(),
            VectorField::from_spectral(&uh),
        );
        self.check_state(&next)?;
        Ok(next)
    }

    /// Runs from `initial` to `t_end`, storing every `sample_every`-th state.
    pub fn run(&self, initial: &State) -> Result<Trajectory> {
        let n_steps = self.cfg.n_steps()?;
        check_admissible(&initial.q, self.cfg.density_floor, self.cfg.density_ceiling)?;
        self.check_cfl(&initial.u)?;
        if !initial.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }

        let mut traj = Trajectory::new(self.model, self.cfg);
        let t0 = initial.t;
        let mut state = initial.clone();
        let mut qh = state.q.forward();
        let mut uh = state.u.forward();
        traj.push(state.clone())?;
        for step in 1..=n_steps {
            if step > 1 {
                if let Err(e) = self.check_cfl(&state.u) {
                    return Err(Error::Halted {
                        t: state.t,
                        reason: e.to_string(),
                        snapshot: Box::new(state),
                    });
                }
            }
            let (nqh, nuh) = self.advance(&state.q, &state.u, &qh, &uh)?;
            qh = nqh;
            uh = nuh;
            state = State::new(
                t0 + step as f64 * self.cfg.dt,
                qh.inverse(),
                VectorField::from_spectral(&uh),
            );
            self.check_state(&state)?;
            if step % self.cfg.sample_every == 0 {
                traj.push(state.clone())?;
            }
        }
        Ok(traj)
    }
}

pub fn step_imex(state: &State, model: &ModelConfig, cfg: &StepperConfig) -> Result<State> {
    Stepper::new(state.grid(), model, cfg)?.step(state)
}

pub fn simulate(initial: &State, model: &ModelConfig, cfg: &StepperConfig) -> Result<Trajectory> {
    Stepper::new(initial.grid(), model, cfg)?.run(initial)
}
