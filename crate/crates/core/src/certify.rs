//! Identity checks on symbols, kernels and the dyadic partition, packaged as
//! pass/fail records.

use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::grid::{make_grid, Grid};
use crate::kernels::{fourier_integral_1d, kernel_mass, kernel_realspace, CapillaryModel, Potential};
use crate::lp::DyadicPartition;

/// Floating-point slack of the symbol bounds, relative to `1 + |k|²`.
pub const SYMBOL_SLACK: f64 = 1e-12;
pub const UNITY_TOLERANCE: f64 = 1e-12;
pub const GAUSSIAN_TOLERANCE: f64 = 1e-10;
pub const BESSEL_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst measured value; compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, tolerance: f64, detail: String) -> Self {
        Check {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail,
        }
    }

    fn error(name: impl Into<String>, err: impl std::fmt::Display) -> Self {
        Check {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            tolerance: 0.0,
            detail: err.to_string(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {:.3e} (tolerance {:.1e}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance,
            self.detail
        )
    }
}

/// Largest excess over the Taylor bounds
/// `|D_ε + k²| <= ε²k⁴/2` and `|D_α + k²| <= k⁴/α²` across all modes,
/// measured relative to `1 + k²`.
pub fn symbol_taylor_bounds(grid: &Grid, epsilons: &[f64], alphas: &[f64]) -> Check {
    let mut worst = f64::NEG_INFINITY;
    let mut tightest = 0.0f64;
    for mode in grid.modes() {
        let k2 = mode.k2;
        let cases = epsilons
            .iter()
            .map(|&e| (CapillaryModel::Nsrw { epsilon: e }, e * e * k2 * k2 / 2.0))
            .chain(
                alphas
                    .iter()
                    .map(|&a| (CapillaryModel::Nsop { alpha: a }, k2 * k2 / (a * a))),
            );
        for (model, bound) in cases {
            let defect = (model.symbol_k2(k2) + k2).abs();
            worst = worst.max((defect - bound) / (1.0 + k2));
            if bound > 0.0 {
                tightest = tightest.max(defect / bound);
            }
        }
    }
    Check::new(
        "symbol Taylor bounds",
        worst.max(0.0),
        SYMBOL_SLACK,
        format!("largest defect/bound ratio {tightest:.6}"),
    )
}

pub fn partition_of_unity(grid: &Arc<Grid>) -> Check {
    match DyadicPartition::new(grid) {
        Ok(p) => Check::new(
            "partition of unity",
            p.unity_defect(),
            UNITY_TOLERANCE,
            format!("blocks {}..={}", p.j_min(), p.j_max()),
        ),
        Err(e) => Check::error("partition of unity", e),
    }
}

/// Lattice transform of the sampled Gaussian against `e^{-ε²|k|²}` on every
/// mode, together with `|∫φ_ε - 1|`.
pub fn gaussian_symbol(grid: &Arc<Grid>, epsilon: f64) -> Check {
    let name = format!("Gaussian symbol (epsilon = {epsilon})");
    let p = Potential::Gaussian { epsilon };
    let kernel = match kernel_realspace(&p, grid) {
        Ok(k) => k,
        Err(e) => return Check::error(name, e),
    };
    let mass = match kernel_mass(&p, &kernel) {
        Ok(m) => m,
        Err(e) => return Check::error(name, e),
    };
    let hat = kernel.forward();
    let dv = grid.cell_volume();
    let worst = grid
        .modes()
        .iter()
        .zip(hat.coeffs())
        .map(|(m, c)| (c * dv - p.symbol_k2(m.k2)).norm())
        .fold((mass - 1.0).abs(), f64::max);
    Check::new(name, worst, GAUSSIAN_TOLERANCE, format!("mass {mass:.15}"))
}

/// Continuous transform of `(α/2)e^{-α|x|}` against `α²/(α²+ξ²)` for
/// `|ξ| <= xi_max`, relative error.
pub fn bessel_fourier_pair(alpha: f64, n: usize, length: f64, xi_max: f64) -> Check {
    let name = format!("Bessel Fourier pair (alpha = {alpha}, L = {length}, n = {n})");
    let run = || -> Result<(f64, usize)> {
        let grid = make_grid(1, n, length)?;
        let p = Potential::Bessel { alpha };
        let kernel = kernel_realspace(&p, &grid)?;
        let mut worst = 0.0f64;
        let mut count = 0;
        for &xi in grid.wavenumbers().iter().filter(|k| k.abs() <= xi_max) {
            let exact = p.symbol_k2(xi * xi);
            let got = fourier_integral_1d(&kernel, xi)?;
            worst = worst.max((got - exact).norm() / exact);
            count += 1;
        }
        Ok((worst, count))
    };
    match run() {
        Ok((worst, count)) => Check::new(
            name,
            worst,
            BESSEL_TOLERANCE,
            format!("{count} frequencies with |xi| <= {xi_max}"),
        ),
        Err(e) => Check::error(name, e),
    }
}

/// Every identity on `grid`, plus the one-dimensional Bessel pair on its own
/// reference grid.
pub fn verify_symbols(grid: &Arc<Grid>) -> Vec<Check> {
    let epsilon = (grid.length() / 40.0).max(3.0 * grid.spacing());
    vec![
        partition_of_unity(grid),
        symbol_taylor_bounds(grid, &[0.2, 0.1, 0.05], &[5.0, 10.0, 20.0]),
        gaussian_symbol(grid, epsilon),
        bessel_fourier_pair(1.0, 1024, 40.0, 10.0),
    ]
}
