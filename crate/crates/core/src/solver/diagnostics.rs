//! Block-wise energy functionals `h_j` and the running quantity `g^s`.
//!
//! With `b = 1/(1+q)`, `c = 1+q`, `b_m = 1 + S_m(b-1)` and `c_m = 1 + S_m(c-1)`,
//!
//! ```text
//! h_j² = (u_j | c_m u_j) + κ(q_j | -D[q_j]) + η(2(u_j | ∇q_j) + ν(∇q_j | (b_m/c_m) ∇q_j))
//! g^s(t) = Σ_j 2^{j(s-1)} sup_{t' <= t} (‖u_j(t')‖₂ + h_j(t'))
//! ```
//!
//! The capillary form is taken with `-D`, which is nonnegative for every model.

use serde::Serialize;

use super::{ModelConfig, State};
use crate::error::{Error, Result};
use crate::grid::{gradient, RealField, SpectralField};
use crate::lp::DyadicPartition;

/// `min(1, ν b_* c_* / (8(2c^* + c_*)))` with `b_* = 1/c^*`.
pub fn eta_bound(nu: f64, c_lo: f64, c_hi: f64) -> f64 {
    let b_lo = 1.0 / c_hi;
    (nu * b_lo * c_lo / (8.0 * (2.0 * c_hi + c_lo))).min(1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyDiagnostics {
    pub j_min: i32,
    pub times: Vec<f64>,
    /// `h_j` per sample and block.
    pub h: Vec<Vec<f64>>,
    /// `h_j²` before the square root; negative values are kept here.
    pub h_sq: Vec<Vec<f64>>,
    /// `‖u_j‖₂` per sample and block.
    pub u_norms: Vec<Vec<f64>>,
    /// Running `g^s` per sample.
    pub g: Vec<f64>,
    pub s: f64,
    pub m: i32,
    pub eta: f64,
    pub eta_bound: f64,
    pub eta_admissible: bool,
    /// Density bound `c_*` used in the lower bound check.
    pub c_lo: f64,
}

impl EnergyDiagnostics {
    /// Smallest `h_j² - (c_*/4)‖u_j‖²` over all samples and blocks.
    pub fn positivity_margin(&self) -> f64 {
        self.h_sq
            .iter()
            .zip(&self.u_norms)
            .flat_map(|(h, u)| h.iter().zip(u).map(|(h2, un)| h2 - 0.25 * self.c_lo * un * un))
            .fold(f64::INFINITY, f64::min)
    }

    /// `h_j² >= (c_*/4)‖u_j‖²` everywhere, up to rounding relative to the
    /// size of each term.
    pub fn lower_bound_holds(&self) -> bool {
        self.h_sq.iter().zip(&self.u_norms).all(|(h, u)| {
            h.iter().zip(u).all(|(h2, un)| {
                let rhs = 0.25 * self.c_lo * un * un;
                *h2 - rhs >= -1e-12 * h2.abs().max(rhs).max(f64::MIN_POSITIVE)
            })
        })
    }

    /// `max_t g(t) / g(0)`; infinite when `g(0) = 0` and `g` grows.
    pub fn growth(&self) -> f64 {
        let g0 = self.g[0];
        let last = *self.g.last().expect("at least one sample");
        if g0 > 0.0 {
            last / g0
        } else if last == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    }
}

/// Evaluates `h_j` on each sample and accumulates `g^s` along the history.
pub fn energy_diagnostics(
    states: &[State],
    partition: &DyadicPartition,
    model: &ModelConfig,
    m: i32,
    eta: f64,
    s: f64,
    density_bounds: (f64, f64),
) -> Result<EnergyDiagnostics> {
    if states.is_empty() {
        return Err(Error::Sampling("no states to diagnose".into()));
    }
    let (c_lo, c_hi) = density_bounds;
    let nu = model.params.nu();
    let bound = eta_bound(nu, c_lo, c_hi);
    let eta_admissible = eta > 0.0 && eta <= bound;
    if !eta_admissible {
        log::warn!("eta = {eta} exceeds the positivity bound {bound}; h_j >= 0 is not guaranteed");
    }

    let nblocks = (partition.j_max() - partition.j_min() + 1) as usize;
    let mut diag = EnergyDiagnostics {
        j_min: partition.j_min(),
        times: Vec::with_capacity(states.len()),
        h: Vec::with_capacity(states.len()),
        h_sq: Vec::with_capacity(states.len()),
        u_norms: Vec::with_capacity(states.len()),
        g: Vec::with_capacity(states.len()),
        s,
        m,
        eta,
        eta_bound: bound,
        eta_admissible,
        c_lo,
    };
    let mut running = vec![0.0f64; nblocks];
    for state in states {
        let (h_sq, u_norms) = block_energies(state, partition, model, m, eta)?;
        let h: Vec<f64> = h_sq.iter().map(|v| v.max(0.0).sqrt()).collect();
        for (r, (hj, uj)) in running.iter_mut().zip(h.iter().zip(&u_norms)) {
            *r = r.max(uj + hj);
        }
        let g = running
            .iter()
            .enumerate()
            .map(|(i, r)| (f64::from(partition.j_min() + i as i32) * (s - 1.0)).exp2() * r)
            .sum();
        diag.times.push(state.t);
        diag.h.push(h);
        diag.h_sq.push(h_sq);
        diag.u_norms.push(u_norms);
        diag.g.push(g);
    }
    Ok(diag)
}

/// `(h_j², ‖u_j‖₂)` for every block of one state.
fn block_energies(
    state: &State,
    partition: &DyadicPartition,
    model: &ModelConfig,
    m: i32,
    eta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let kappa = model.params.kappa;
    let nu = model.params.nu();
    let b_minus_1 = state.q.map(|v| 1.0 / (1.0 + v) - 1.0);
    let b_m = partition
        .low_freq_truncate(&b_minus_1, m)
        .map(|v| 1.0 + v);
    let c_m = partition.low_freq_truncate(&state.q, m).map(|v| 1.0 + v);
    let ratio = b_m.zip_map(&c_m, |b, c| b / c);

    let qh = state.q.forward();
    let uh = state.u.forward();
    let mut h_sq = Vec::new();
    let mut u_norms = Vec::new();
    for j in partition.blocks() {
        let qj = partition.block_spectral(&qh, j)?;
        let uj: Vec<RealField> = uh
            .iter()
            .map(|c| partition.block_spectral(c, j).map(|f| f.inverse()))
            .collect::<Result<_>>()?;
        let grad_qj: Vec<RealField> = gradient(&qj).iter().map(SpectralField::inverse).collect();
        let minus_dqj = qj
            .scale_modes(|mode| -model.capillary.symbol_k2(mode.k2))
            .inverse();

        let mut kinetic = 0.0;
        let mut cross = 0.0;
        let mut gradient_form = 0.0;
        let mut u_sq = 0.0;
        for (ua, ga) in uj.iter().zip(&grad_qj) {
            kinetic += ua.inner(&ua.zip_map(&c_m, |x, c| x * c));
            cross += ua.inner(ga);
            gradient_form += ga.inner(&ga.zip_map(&ratio, |x, r| x * r));
            u_sq += ua.inner(ua);
        }
        let capillary = kappa * qj.inverse().inner(&minus_dqj);
        h_sq.push(kinetic + capillary + eta * (2.0 * cross + nu * gradient_form));
        u_norms.push(u_sq.sqrt());
    }
    Ok((h_sq, u_norms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, VectorField};
    use crate::kernels::CapillaryModel;
    use crate::lp::build_partition;
    use crate::solver::{PhysParams, PressureLaw};
    use std::f64::consts::PI;

    fn nsk(kappa: f64) -> ModelConfig {
        ModelConfig {
            capillary: CapillaryModel::Nsk,
            params: PhysParams { mu: 1.0, lambda: 0.0, kappa },
            pressure: PressureLaw::Gamma { a: 1.0, gamma: 1.4 },
        }
    }

    #[test]
    fn eta_bound_formula() {
        let b = eta_bound(2.0, 0.5, 2.0);
        assert!((b - 2.0 * 0.5 * 0.5 / (8.0 * 4.5)).abs() < 1e-16);
        assert_eq!(eta_bound(1e6, 1.0, 1.0), 1.0);
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let p = build_partition(&g).unwrap();
        let d = energy_diagnostics(&[State::zeros(&g)], &p, &nsk(0.1), p.j_max(), 0.01, 0.5, (0.5, 2.0)).unwrap();
        assert!(d.h[0].iter().all(|&h| h == 0.0));
        assert_eq!(d.g[0], 0.0);
    }

    #[test]
    fn density_harmonic_two_paths() {
        let g = make_grid(1, 128, 2.0 * PI).unwrap();
        let p = build_partition(&g).unwrap();
        let k0 = 4.0;
        let amp = 0.01;
        let q = RealField::from_fn(&g, |x| amp * (k0 * x[0]).cos());
        let state = State::new(0.0, q.clone(), VectorField::zeros(&g));
        let (kappa, eta) = (0.2, 0.03);
        let model = nsk(kappa);
        let m = p.j_max();
        let d = energy_diagnostics(&[state], &p, &model, m, eta, 0.5, (0.5, 2.0)).unwrap();
        // pointwise path: q_j = w_j q for a single harmonic, S_m is the identity here
        let dq = RealField::from_fn(&g, |x| -amp * k0 * (k0 * x[0]).sin());
        let ratio = q.map(|v| 1.0 / (1.0 + v) / (1.0 + v));
        let expected: Vec<f64> = p
            .blocks()
            .map(|j| {
                let grad = dq.scaled(p.block_weight(j, k0));
                kappa * grad.inner(&grad)
                    + eta * model.params.nu() * grad.inner(&grad.zip_map(&ratio, |a, r| a * r))
            })
            .collect();
        let scale = expected.iter().cloned().fold(0.0, f64::max);
        assert!(scale > 0.0);
        for (got, want) in d.h_sq[0].iter().zip(&expected) {
            assert!((got - want).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn running_sup_is_monotone_and_lower_bound_holds() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let p = build_partition(&g).unwrap();
        let model = nsk(0.1);
        let states: Vec<State> = (0..5)
            .map(|i| {
                let a = 0.1 * (1.0 + (i as f64).sin());
                let q = RealField::from_fn(&g, |x| a * (2.0 * x[0]).cos());
                let u = RealField::from_fn(&g, |x| 0.3 * (x[0] + i as f64).sin());
                State::new(i as f64 * 0.1, q, VectorField::new(vec![u]).unwrap())
            })
            .collect();
        let (lo, hi) = (0.45, 2.2);
        let eta = 0.9 * eta_bound(model.params.nu(), lo, hi);
        let d = energy_diagnostics(&states, &p, &model, p.j_max(), eta, 0.5, (lo, hi)).unwrap();
        assert!(d.eta_admissible);
        assert!(d.g.windows(2).all(|w| w[1] >= w[0]));
        assert!(d.lower_bound_holds());
        assert!(d.positivity_margin() >= 0.0);
    }

    #[test]
    fn inadmissible_eta_is_flagged() {
        let g = make_grid(1, 64, 2.0 * PI).unwrap();
        let p = build_partition(&g).unwrap();
        let d = energy_diagnostics(&[State::zeros(&g)], &p, &nsk(0.1), 3, 5.0, 0.5, (0.5, 2.0)).unwrap();
        assert!(!d.eta_admissible);
    }
}
