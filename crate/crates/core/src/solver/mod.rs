//! Fluctuation-form capillary Navier-Stokes systems, their IMEX time stepping
//! and the energy diagnostics evaluated along runs.
//!
//! Unknowns are the density fluctuation `q = ρ - 1` and the velocity `u`:
//!
//! ```text
//! ∂_t q + u·∇q + (1+q) div u = 0
//! ∂_t u + u·∇u - 𝒜u/(1+q) + P'(1+q)/(1+q) ∇q - κ∇D[q] = 0
//! ```

pub mod diagnostics;
pub mod initial;
pub mod pressure;
mod stepper;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{viscous_floor, Grid, RealField, VectorField};
use crate::kernels::{order_parameter, CapillaryModel};

pub use diagnostics::{energy_diagnostics, eta_bound, EnergyDiagnostics};
pub use initial::{make_initial_data, Profile};
pub use pressure::{pressure_terms, PressureLaw, PressureTerms};
pub use stepper::{rhs, simulate, step_imex, Stepper};

/// Viscosities and capillarity strength.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysParams {
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        let floor = viscous_floor(self.mu, self.lambda);
        if !(floor > 0.0) {
            return Err(Error::param(format!(
                "PhysParams: min(mu, 2 mu + lambda) > 0, got {floor}"
            )));
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::param("PhysParams: kappa >= 0"));
        }
        Ok(())
    }

    /// `ν = λ + 2μ`.
    pub fn nu(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    /// `ν₀ = min(μ, λ + 2μ)`.
    pub fn nu0(&self) -> f64 {
        viscous_floor(self.mu, self.lambda)
    }

    /// `ν̄ = μ + |λ + μ|`.
    pub fn nu_bar(&self) -> f64 {
        self.mu + (self.lambda + self.mu).abs()
    }
}

/// Everything that defines the continuous system being solved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelConfig {
    pub capillary: CapillaryModel,
    pub params: PhysParams,
    pub pressure: PressureLaw,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        self.capillary.validate()?;
        self.params.validate()?;
        self.pressure.validate()
    }

    pub fn with_capillary(&self, capillary: CapillaryModel) -> Self {
        ModelConfig { capillary, ..*self }
    }
}

/// Time-stepping controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored samples.
    pub sample_every: usize,
    /// 2/3-rule truncation of the explicit terms.
    pub dealias: bool,
    /// `c_*`: the run halts if `1+q` drops below it.
    pub density_floor: f64,
    /// `c^*`: the run halts if `1+q` exceeds it.
    pub density_ceiling: f64,
    /// Largest admissible `dt max|u| / dx`.
    pub cfl: f64,
    pub max_steps: usize,
}

pub const DEFAULT_CFL: f64 = 0.5;
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;

impl StepperConfig {
    /// Density bounds half and double the initial extrema of `1+q`.
    pub fn default_bounds(q: &RealField) -> (f64, f64) {
        (0.5 * (1.0 + q.min()), 2.0 * (1.0 + q.max()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("StepperConfig: dt > 0"));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::param("StepperConfig: t_end >= 0"));
        }
        if self.sample_every == 0 {
            return Err(Error::param("StepperConfig: sample_every >= 1"));
        }
        if !(self.density_floor > 0.0 && self.density_ceiling > self.density_floor) {
            return Err(Error::param(
                "StepperConfig: 0 < density_floor < density_ceiling",
            ));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::param("StepperConfig: cfl > 0"));
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`; `t_end` must be a whole number of
    /// steps and of sampling intervals.
    pub fn n_steps(&self) -> Result<usize> {
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::param(format!(
                "StepperConfig: t_end = {} is not a multiple of dt = {}",
                self.t_end, self.dt
            )));
        }
        let steps = steps as usize;
        if !steps.is_multiple_of(self.sample_every) {
            return Err(Error::param(format!(
                "StepperConfig: {steps} steps are not a multiple of sample_every = {}",
                self.sample_every
            )));
        }
        if steps > self.max_steps {
            return Err(Error::param(format!(
                "max-step exceeded: {steps} steps requested, limit {}",
                self.max_steps
            )));
        }
        Ok(steps)
    }
}

/// Solution at one instant.
#[derive(Clone, Debug)]
pub struct State {
    pub t: f64,
    pub q: RealField,
    pub u: VectorField,
}

impl State {
    pub fn new(t: f64, q: RealField, u: VectorField) -> Self {
        State { t, q, u }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        State::new(0.0, RealField::zeros(grid), VectorField::zeros(grid))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.q.grid()
    }

    pub fn rho(&self) -> RealField {
        self.q.map(|v| 1.0 + v)
    }

    /// `∫ρ`.
    pub fn mass(&self) -> f64 {
        (1.0 + self.q.mean()) * self.grid().volume()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.q.is_finite() && self.u.is_finite()
    }
}

/// Uniformly sampled run.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub model: ModelConfig,
    pub stepper: StepperConfig,
    pub states: Vec<State>,
    /// `c_α = ψ_α * ρ_α` at every sample, for the order-parameter model.
    pub order_parameter: Option<Vec<RealField>>,
}

impl Trajectory {
    pub(crate) fn new(model: ModelConfig, stepper: StepperConfig) -> Self {
        Trajectory {
            model,
            stepper,
            states: Vec::new(),
            order_parameter: match model.capillary {
                CapillaryModel::Nsop { .. } => Some(Vec::new()),
                _ => None,
            },
        }
    }

    pub(crate) fn push(&mut self, state: State) -> Result<()> {
        if let (CapillaryModel::Nsop { alpha }, Some(c)) =
            (self.model.capillary, self.order_parameter.as_mut())
        {
            c.push(order_parameter(&state.rho(), alpha)?);
        }
        self.states.push(state);
        Ok(())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.states[0].grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn q(&self) -> Vec<RealField> {
        self.states.iter().map(|s| s.q.clone()).collect()
    }

    pub fn u(&self) -> Vec<VectorField> {
        self.states.iter().map(|s| s.u.clone()).collect()
    }

    pub fn last(&self) -> &State {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Largest relative change of `∫ρ` across the samples.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.states[0].mass();
        self.states
            .iter()
            .map(|s| ((s.mass() - m0) / m0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viscosity_constants() {
        let p = PhysParams { mu: 1.0, lambda: -1.5, kappa: 0.1 };
        assert_eq!(p.nu(), 0.5);
        assert_eq!(p.nu0(), 0.5);
        assert_eq!(p.nu_bar(), 1.5);
        assert!(p.validate().is_ok());
        assert!(PhysParams { mu: 1.0, lambda: -2.5, kappa: 0.0 }.validate().is_err());
        assert!(PhysParams { mu: 1.0, lambda: 0.0, kappa: -1.0 }.validate().is_err());
    }

    #[test]
    fn step_count() {
        let cfg = StepperConfig {
            dt: 1e-3,
            t_end: 0.3,
            sample_every: 10,
            dealias: true,
            density_floor: 0.1,
            density_ceiling: 3.0,
            cfl: DEFAULT_CFL,
            max_steps: DEFAULT_MAX_STEPS,
        };
        assert_eq!(cfg.n_steps().unwrap(), 300);
        assert!(StepperConfig { sample_every: 7, ..cfg }.n_steps().is_err());
        assert!(StepperConfig { t_end: 0.3005, ..cfg }.n_steps().is_err());
        assert!(StepperConfig { max_steps: 100, ..cfg }.n_steps().is_err());
    }
}
