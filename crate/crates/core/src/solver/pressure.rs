//! Barotropic pressure laws and the pointwise coefficients `K`, `I`, `H`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RealField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PressureLaw {
    /// `P(ρ) = A ρ^γ`.
    Gamma { a: f64, gamma: f64 },
    /// `P(ρ) = RT ρ / (1 - bρ) - a ρ²`.
    VanDerWaals { a: f64, b: f64, rt: f64 },
}

impl PressureLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PressureLaw::Gamma { a, gamma } => {
                if !(a > 0.0) {
                    return Err(Error::param("PressureLaw: A > 0"));
                }
                if !(gamma >= 1.0) || !gamma.is_finite() {
                    return Err(Error::param("PressureLaw: gamma >= 1"));
                }
            }
            PressureLaw::VanDerWaals { a, b, rt } => {
                if !(a >= 0.0) {
                    return Err(Error::param("PressureLaw: a >= 0"));
                }
                if !(b >= 0.0) {
                    return Err(Error::param("PressureLaw: b >= 0"));
                }
                if !(rt > 0.0) {
                    return Err(Error::param("PressureLaw: RT > 0"));
                }
            }
        }
        Ok(())
    }

    /// Checks that `P` is defined on `[lo, hi]`.
    pub fn check_range(&self, lo: f64, hi: f64) -> Result<()> {
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::param(format!(
                "density bounds must satisfy 0 < c_* <= c^*, got [{lo}, {hi}]"
            )));
        }
        if let PressureLaw::VanDerWaals { b, .. } = *self {
            if b * hi >= 1.0 {
                return Err(Error::param(format!(
                    "PressureLaw: b * c^* < 1 required, got {}",
                    b * hi
                )));
            }
        }
        Ok(())
    }

    pub fn p(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::Gamma { a, gamma } => a * rho.powf(gamma),
            PressureLaw::VanDerWaals { a, b, rt } => rt * rho / (1.0 - b * rho) - a * rho * rho,
        }
    }

    pub fn dp(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::Gamma { a, gamma } => a * gamma * rho.powf(gamma - 1.0),
            PressureLaw::VanDerWaals { a, b, rt } => {
                let w = 1.0 - b * rho;
                rt / (w * w) - 2.0 * a * rho
            }
        }
    }

    /// Enthalpy with `H'(ρ) = P'(ρ)/ρ`.
    pub fn h(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::Gamma { a, gamma } if gamma == 1.0 => a * rho.ln(),
            PressureLaw::Gamma { a, gamma } => a * gamma / (gamma - 1.0) * rho.powf(gamma - 1.0),
            PressureLaw::VanDerWaals { a, b, rt } => {
                let w = 1.0 - b * rho;
                rt * ((rho / w).ln() + 1.0 / w) - 2.0 * a * rho
            }
        }
    }

    /// `P'(1)`; may be nonpositive.
    pub fn reference_slope(&self) -> f64 {
        self.dp(1.0)
    }

    /// Part of the pressure gradient the stepper treats implicitly:
    /// `P'(1)` when positive, else nothing.
    pub fn implicit_slope(&self) -> f64 {
        self.reference_slope().max(0.0)
    }

    pub fn k(&self, q: f64) -> f64 {
        self.reference_slope() - self.dp(1.0 + q) / (1.0 + q)
    }
}

/// `I(q) = q / (1 + q)`.
pub fn i_coeff(q: f64) -> f64 {
    q / (1.0 + q)
}

/// Pointwise pressure coefficients of a density fluctuation.
#[derive(Clone, Debug)]
pub struct PressureTerms {
    /// `P'(1+q) / (1+q)`
    pub dp_over_rho: RealField,
    /// `H(1+q) - H(1)`
    pub h_diff: RealField,
    /// `K(q) = P'(1) - P'(1+q)/(1+q)`
    pub k: RealField,
    /// `I(q) = q / (1+q)`
    pub i: RealField,
}

/// Fails with [`Error::Admissibility`] on the first point where `1+q` leaves
/// `[lo, hi]`.
pub fn check_admissible(q: &RealField, lo: f64, hi: f64) -> Result<()> {
    for &v in q.values() {
        let rho = 1.0 + v;
        if !(rho >= lo && rho <= hi) {
            return Err(Error::Admissibility { value: rho, lo, hi });
        }
    }
    Ok(())
}

pub fn pressure_terms(q: &RealField, law: &PressureLaw, lo: f64, hi: f64) -> Result<PressureTerms> {
    law.validate()?;
    law.check_range(lo, hi)?;
    check_admissible(q, lo, hi)?;
    let h1 = law.h(1.0);
    Ok(PressureTerms {
        dp_over_rho: q.map(|v| law.dp(1.0 + v) / (1.0 + v)),
        h_diff: q.map(|v| law.h(1.0 + v) - h1),
        k: q.map(|v| law.k(v)),
        i: q.map(i_coeff),
    })
}
