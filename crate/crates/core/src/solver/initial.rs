//! Initial data: the periodized two-phase profile, single harmonics and
//! seeded random band-limited fields.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::State;
use crate::error::{Error, Result};
use crate::grid::{Grid, RealField, SpectralField, VectorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    /// `ρ₀ = (1-χ)ρ₁ + χρ₂` with a tanh cut-off `χ` of width
    /// `interface_width`, at rest.
    TwoPhase {
        rho1: f64,
        rho2: f64,
        interface_width: f64,
    },
    /// `q₀ = A cos(k·x)`, `u₀ = V sin(k·x) k/|k|` for the integer mode `mode`.
    Harmonic {
        amplitude: f64,
        #[serde(default)]
        velocity_amplitude: f64,
        mode: [i64; 2],
    },
    /// Random coefficients on the integer shell `k_lo <= |m| <= k_hi`,
    /// rescaled to the requested sup norms.
    RandomBand {
        seed: u64,
        amplitude: f64,
        #[serde(default)]
        velocity_amplitude: f64,
        k_lo: f64,
        k_hi: f64,
    },
}

pub fn make_initial_data(grid: &Arc<Grid>, profile: &Profile) -> Result<State> {
    let state = match *profile {
        Profile::TwoPhase {
            rho1,
            rho2,
            interface_width,
        } => two_phase(grid, rho1, rho2, interface_width)?,
        Profile::Harmonic {
            amplitude,
            velocity_amplitude,
            mode,
        } => harmonic(grid, amplitude, velocity_amplitude, mode)?,
        Profile::RandomBand {
            seed,
            amplitude,
            velocity_amplitude,
            k_lo,
            k_hi,
        } => random_band(grid, seed, amplitude, velocity_amplitude, k_lo, k_hi)?,
    };
    let rho_min = 1.0 + state.q.min();
    if !(rho_min > 0.0) || !state.is_finite() {
        return Err(Error::param(format!(
            "initial profile produces vacuum: min density {rho_min}"
        )));
    }
    Ok(state)
}

fn two_phase(grid: &Arc<Grid>, rho1: f64, rho2: f64, width: f64) -> Result<State> {
    if !(rho1 > 0.0 && rho2 > 0.0) {
        return Err(Error::param("TwoPhase: rho1 > 0 and rho2 > 0"));
    }
    if !(width >= 4.0 * grid.spacing()) {
        return Err(Error::param(format!(
            "TwoPhase: interface_width >= 4 grid cells ({}), got {width}",
            4.0 * grid.spacing()
        )));
    }
    let l = grid.length();
    let dim = grid.dim() as f64;
    // level function with range [-amp, amp]; its zero set carries the interfaces
    let amp = l / (2.0 * PI);
    let level = move |x: [f64; 2]| -> f64 {
        let s: f64 = (0..grid.dim()).map(|a| (2.0 * PI * x[a] / l).cos()).sum();
        -amp * s / dim
    };
    let (lo, hi) = ((-amp / width).tanh(), (amp / width).tanh());
    let q = RealField::from_fn(grid, |x| {
        let chi = ((level(x) / width).tanh() - lo) / (hi - lo);
        (1.0 - chi) * rho1 + chi * rho2 - 1.0
    });
    Ok(State::new(0.0, q, VectorField::zeros(grid)))
}

fn harmonic(grid: &Arc<Grid>, amplitude: f64, velocity: f64, mode: [i64; 2]) -> Result<State> {
    let n = grid.n() as i64;
    if mode == [0, 0] || mode.iter().any(|m| 2 * m.abs() >= n) {
        return Err(Error::param("Harmonic: mode must be nonzero and below Nyquist"));
    }
    if grid.dim() == 1 && mode[1] != 0 {
        return Err(Error::param("Harmonic: mode[1] must be 0 in one dimension"));
    }
    let k0 = 2.0 * PI / grid.length();
    let k = [mode[0] as f64 * k0, mode[1] as f64 * k0];
    let knorm = (k[0] * k[0] + k[1] * k[1]).sqrt();
    let phase = move |x: [f64; 2]| k[0] * x[0] + k[1] * x[1];
    let q = RealField::from_fn(grid, |x| amplitude * phase(x).cos());
    let comps = (0..grid.dim())
        .map(|a| RealField::from_fn(grid, |x| velocity * phase(x).sin() * k[a] / knorm))
        .collect();
    Ok(State::new(0.0, q, VectorField::new(comps)?))
}

fn band_field(grid: &Arc<Grid>, rng: &mut ChaCha8Rng, k_lo: f64, k_hi: f64, sup: f64) -> RealField {
    let mut spec = SpectralField::zeros(grid);
    for idx in 0..grid.len() {
        let m = grid.modes()[idx].index;
        let r = ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt();
        let mirror = grid.mirror(idx);
        // draw for every mode so the stream does not depend on the band
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if r < k_lo || r > k_hi || mirror < idx || mirror == idx {
            continue;
        }
        spec.coeffs_mut()[idx] = c;
        spec.coeffs_mut()[mirror] = c.conj();
    }
    let f = spec.inverse();
    let m = f.max_abs();
    if m > 0.0 {
        f.scaled(sup / m)
    } else {
        f
    }
}

fn random_band(
    grid: &Arc<Grid>,
    seed: u64,
    amplitude: f64,
    velocity: f64,
    k_lo: f64,
    k_hi: f64,
) -> Result<State> {
    if !(k_lo >= 1.0 && k_hi >= k_lo && 2.0 * k_hi < grid.n() as f64) {
        return Err(Error::param("RandomBand: 1 <= k_lo <= k_hi < n/2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = band_field(grid, &mut rng, k_lo, k_hi, amplitude);
    let comps = (0..grid.dim())
        .map(|_| band_field(grid, &mut rng, k_lo, k_hi, velocity))
        .collect();
    Ok(State::new(0.0, q, VectorField::new(comps)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn uniform_two_phase_is_reference_state() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let s = make_initial_data(
            &g,
            &Profile::TwoPhase { rho1: 1.0, rho2: 1.0, interface_width: 1.0 },
        )
        .unwrap();
        assert!(s.q.max_abs() < 1e-15);
        assert_eq!(s.u.max_abs(), 0.0);
    }

    #[test]
    fn two_phase_extrema() {
        for dim in [1, 2] {
            let g = make_grid(dim, 64, 10.0).unwrap();
            let s = make_initial_data(
                &g,
                &Profile::TwoPhase { rho1: 0.8, rho2: 1.2, interface_width: 0.8 },
            )
            .unwrap();
            assert!((1.0 + s.q.min() - 0.8).abs() < 1e-14);
            assert!((1.0 + s.q.max() - 1.2).abs() < 1e-14);
            // symmetric profile: the two phases occupy equal volume
            assert!(s.q.mean().abs() < 1e-12);
        }
    }

    #[test]
    fn two_phase_rejects_thin_interface_and_vacuum() {
        let g = make_grid(1, 64, 10.0).unwrap();
        let thin = Profile::TwoPhase { rho1: 0.8, rho2: 1.2, interface_width: 0.3 };
        assert!(make_initial_data(&g, &thin).is_err());
        let vacuum = Profile::TwoPhase { rho1: 0.0, rho2: 1.2, interface_width: 1.0 };
        assert!(make_initial_data(&g, &vacuum).is_err());
    }

    #[test]
    fn random_band_is_reproducible() {
        let g = make_grid(2, 32, 5.0).unwrap();
        let p = Profile::RandomBand {
            seed: 42,
            amplitude: 0.1,
            velocity_amplitude: 0.05,
            k_lo: 1.0,
            k_hi: 4.0,
        };
        let a = make_initial_data(&g, &p).unwrap();
        let b = make_initial_data(&g, &p).unwrap();
        assert_eq!(a.q.values(), b.q.values());
        assert_eq!(a.u.component(1).values(), b.u.component(1).values());
        assert!((a.q.max_abs() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn harmonic_profile() {
        let g = make_grid(1, 32, 2.0 * PI).unwrap();
        let p = Profile::Harmonic { amplitude: 0.1, velocity_amplitude: 0.2, mode: [3, 0] };
        let s = make_initial_data(&g, &p).unwrap();
        let x = g.point(5)[0];
        assert!((s.q.values()[5] - 0.1 * (3.0 * x).cos()).abs() < 1e-15);
        assert!((s.u.component(0).values()[5] - 0.2 * (3.0 * x).sin()).abs() < 1e-15);
        let bad = Profile::Harmonic { amplitude: 0.1, velocity_amplitude: 0.0, mode: [16, 0] };
        assert!(make_initial_data(&g, &bad).is_err());
    }
}
