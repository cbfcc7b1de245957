//! Interaction potentials, the capillary operators `D[q]`, the order-parameter
//! elliptic solve and the remainder `R_ε` between the Gaussian non-local and
//! the local capillary terms.
//!
//! All convolutions act spectrally through their symbols. Real-space kernels
//! are only built for validation ([`kernel_realspace`]).

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, VectorField};

/// Mass-one, even, nonnegative interaction potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Potential {
    /// `φ_ε`, symbol `exp(-ε²|k|²)`.
    Gaussian { epsilon: f64 },
    /// `ψ_α`, symbol `α² / (α² + |k|²)`.
    Bessel { alpha: f64 },
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Potential::Gaussian { epsilon } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                Err(Error::param("Potential: epsilon > 0"))
            }
            Potential::Bessel { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                Err(Error::param("Potential: alpha > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn symbol_k2(&self, k2: f64) -> f64 {
        match *self {
            Potential::Gaussian { epsilon } => (-epsilon * epsilon * k2).exp(),
            Potential::Bessel { alpha } => {
                let a2 = alpha * alpha;
                a2 / (a2 + k2)
            }
        }
    }
}

fn norm_sq(k: &[f64]) -> f64 {
    k.iter().map(|v| v * v).sum()
}

pub fn gaussian_symbol(k: &[f64], epsilon: f64) -> f64 {
    Potential::Gaussian { epsilon }.symbol_k2(norm_sq(k))
}

pub fn bessel_symbol(k: &[f64], alpha: f64) -> f64 {
    Potential::Bessel { alpha }.symbol_k2(norm_sq(k))
}

/// Capillarity variant of the fluctuation system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "ModelRepr")]
pub enum CapillaryModel {
    /// No capillarity, `D = 0`.
    Nsc,
    /// Local Korteweg, `D[q] = Δq`.
    Nsk,
    /// Gaussian non-local, `D[q] = (φ_ε * q - q) / ε²`.
    Nsrw { epsilon: f64 },
    /// Order-parameter model, `D[q] = α² (ψ_α * q - q)`.
    Nsop { alpha: f64 },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelRepr {
    kind: String,
    epsilon: Option<f64>,
    alpha: Option<f64>,
}

impl TryFrom<ModelRepr> for CapillaryModel {
    type Error = String;

    fn try_from(r: ModelRepr) -> std::result::Result<Self, String> {
        let model = match (r.kind.as_str(), r.epsilon, r.alpha) {
            ("nsc", None, None) => CapillaryModel::Nsc,
            ("nsk", None, None) => CapillaryModel::Nsk,
            ("nsrw", Some(epsilon), None) => CapillaryModel::Nsrw { epsilon },
            ("nsop", None, Some(alpha)) => CapillaryModel::Nsop { alpha },
            ("nsc" | "nsk", _, _) => return Err(format!("model {} takes no parameters", r.kind)),
            ("nsrw", _, _) => return Err("model nsrw takes exactly `epsilon`".into()),
            ("nsop", _, _) => return Err("model nsop takes exactly `alpha`".into()),
            (other, _, _) => {
                return Err(format!("unknown model `{other}`, expected nsc, nsk, nsrw or nsop"))
            }
        };
        Ok(model)
    }
}

impl CapillaryModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CapillaryModel::Nsrw { epsilon } => Potential::Gaussian { epsilon }.validate(),
            CapillaryModel::Nsop { alpha } => Potential::Bessel { alpha }.validate(),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CapillaryModel::Nsc => "nsc",
            CapillaryModel::Nsk => "nsk",
            CapillaryModel::Nsrw { .. } => "nsrw",
            CapillaryModel::Nsop { .. } => "nsop",
        }
    }

    pub fn potential(&self) -> Option<Potential> {
        match *self {
            CapillaryModel::Nsrw { epsilon } => Some(Potential::Gaussian { epsilon }),
            CapillaryModel::Nsop { alpha } => Some(Potential::Bessel { alpha }),
            _ => None,
        }
    }

    /// Frequency where the non-local symbol departs from `-|k|²`: `1/ε` or `α`.
    pub fn transition_frequency(&self) -> Option<f64> {
        match *self {
            CapillaryModel::Nsrw { epsilon } => Some(1.0 / epsilon),
            CapillaryModel::Nsop { alpha } => Some(alpha),
            _ => None,
        }
    }

    /// Symbol of `D` as a function of `|k|²`; always `<= 0`.
    pub fn symbol_k2(&self, k2: f64) -> f64 {
        match *self {
            CapillaryModel::Nsc => 0.0,
            CapillaryModel::Nsk => -k2,
            CapillaryModel::Nsrw { epsilon } => {
                let e2 = epsilon * epsilon;
                (-e2 * k2).exp_m1() / e2
            }
            CapillaryModel::Nsop { alpha } => {
                let a2 = alpha * alpha;
                -a2 * k2 / (a2 + k2)
            }
        }
    }
}

pub fn capillary_symbol(k: &[f64], model: &CapillaryModel) -> f64 {
    model.symbol_k2(norm_sq(k))
}

pub fn capillary_d(q: &RealField, model: &CapillaryModel) -> RealField {
    q.forward().scale_modes(|m| model.symbol_k2(m.k2)).inverse()
}

/// `c = ψ_α * ρ`, the solution of `Δc + α²(ρ - c) = 0`.
pub fn order_parameter(rho: &RealField, alpha: f64) -> Result<RealField> {
    let psi = Potential::Bessel { alpha };
    psi.validate()?;
    Ok(rho.forward().scale_modes(|m| psi.symbol_k2(m.k2)).inverse())
}

/// `e^{-x} - 1 + x`, accurate for small `x`.
pub(crate) fn taylor_defect(x: f64) -> f64 {
    if x < 1e-2 {
        // alternating series, truncated well below rounding
        let mut term = x * x / 2.0;
        let mut sum = 0.0;
        for n in 3..12 {
            sum += term;
            term *= -x / n as f64;
        }
        sum
    } else {
        (-x).exp_m1() + x
    }
}

/// `R_ε = -(κ/ε²) ∇(φ_ε * q - q - ε² Δq)`.
pub fn remainder_r_eps(q: &RealField, epsilon: f64, kappa: f64) -> Result<VectorField> {
    Potential::Gaussian { epsilon }.validate()?;
    let e2 = epsilon * epsilon;
    let qh = q.forward();
    let scalar = qh.scale_modes(|m| -(kappa / e2) * taylor_defect(e2 * m.k2));
    let parts: Vec<_> = (0..q.grid().dim()).map(|axis| scalar.derivative(axis)).collect();
    Ok(VectorField::from_spectral(&parts))
}

const TAIL_TOLERANCE: f64 = 1e-8;

/// Periodized real-space kernel of `p` sampled on the lattice, centered at the
/// origin. The Bessel kernel is only available in one dimension, where
/// `ψ_α(x) = (α/2) e^{-α|x|}`.
pub fn kernel_realspace(p: &Potential, grid: &Arc<Grid>) -> Result<RealField> {
    p.validate()?;
    let half = grid.length() / 2.0;
    let dim = grid.dim() as i32;
    let wrap = |x: f64| if x > half { x - grid.length() } else { x };
    match *p {
        Potential::Gaussian { epsilon } => {
            let tail = (-half * half / (4.0 * epsilon * epsilon)).exp();
            if tail > TAIL_TOLERANCE {
                return Err(Error::KernelTail(format!(
                    "Gaussian with epsilon {epsilon} on period {}: relative tail {tail:.3e}",
                    grid.length()
                )));
            }
            let norm = (4.0 * std::f64::consts::PI * epsilon * epsilon).powf(-f64::from(dim) / 2.0);
            Ok(RealField::from_fn(grid, |x| {
                let r2 = wrap(x[0]).powi(2) + if dim == 2 { wrap(x[1]).powi(2) } else { 0.0 };
                norm * (-r2 / (4.0 * epsilon * epsilon)).exp()
            }))
        }
        Potential::Bessel { alpha } => {
            if dim != 1 {
                return Err(Error::param(
                    "Bessel real-space kernel is only available in one dimension",
                ));
            }
            let tail = (-alpha * half).exp();
            if tail > TAIL_TOLERANCE {
                return Err(Error::KernelTail(format!(
                    "Bessel with alpha {alpha} on period {}: relative tail {tail:.3e}",
                    grid.length()
                )));
            }
            Ok(RealField::from_fn(grid, |x| {
                0.5 * alpha * (-alpha * wrap(x[0]).abs()).exp()
            }))
        }
    }
}

/// Coefficients `γ_k` of the Gregory end corrections, from the series of
/// `t / ln(1 + t)`.
fn gregory_coefficients(order: usize) -> Vec<f64> {
    let a: Vec<f64> = (0..order + 2)
        .map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } / (j + 1) as f64)
        .collect();
    let mut b = vec![1.0];
    for j in 1..order + 2 {
        let s: f64 = (1..=j).map(|i| a[i] * b[j - i]).sum();
        b.push(-s);
    }
    b.into_iter().map(f64::abs).collect()
}

fn gregory_integral(g: &[Complex64], h: f64, gamma: &[f64], order: usize) -> Complex64 {
    let last = g.len() - 1;
    let mut total: Complex64 = g.iter().sum::<Complex64>() - 0.5 * (g[0] + g[last]);
    let mut fwd: Vec<Complex64> = g[..=order].to_vec();
    let mut bwd: Vec<Complex64> = g[last - order..].to_vec();
    for k in 1..=order {
        for i in 0..fwd.len() - 1 {
            fwd[i] = fwd[i + 1] - fwd[i];
            bwd[i] = bwd[i + 1] - bwd[i];
        }
        fwd.pop();
        bwd.pop();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total -= gamma[k + 1] * (bwd[bwd.len() - 1] + sign * fwd[0]);
    }
    total * h
}

/// `∫ f(x) e^{-ikx} dx` over one period of a 1D field that may have a kink at
/// the origin node.
///
/// The period is split at `x = 0` and each smooth half is integrated with the
/// trapezoid rule plus Gregory end corrections built from the samples alone.
/// Plain lattice sums lose second-order accuracy at such a kink.
pub fn fourier_integral_1d(f: &RealField, k: f64) -> Result<Complex64> {
    let grid = f.grid();
    if grid.dim() != 1 {
        return Err(Error::param("fourier_integral_1d needs a 1D field"));
    }
    let n = grid.n();
    let order = (n / 4).min(10);
    let gamma = gregory_coefficients(order);
    let h = grid.spacing();
    let sample = |i: usize| {
        let x = grid.point(i % n)[0];
        f.values()[i % n] * Complex64::from_polar(1.0, -k * x)
    };
    // [0, L/2] then [L/2, L] which is [-L/2, 0] shifted by a period
    let right: Vec<Complex64> = (0..=n / 2).map(sample).collect();
    let left: Vec<Complex64> = (n / 2..=n).map(sample).collect();
    Ok(gregory_integral(&right, h, &gamma, order) + gregory_integral(&left, h, &gamma, order))
}

/// `∫ φ` for the sampled kernel of `p`. The Gaussian is smooth and periodic,
/// so the lattice sum is spectrally accurate; the Bessel kernel has a kink at
/// the origin and goes through [`fourier_integral_1d`].
pub fn kernel_mass(p: &Potential, kernel: &RealField) -> Result<f64> {
    match p {
        Potential::Gaussian { .. } => {
            Ok(kernel.values().iter().sum::<f64>() * kernel.grid().cell_volume())
        }
        Potential::Bessel { .. } => Ok(fourier_integral_1d(kernel, 0.0)?.re),
    }
}
