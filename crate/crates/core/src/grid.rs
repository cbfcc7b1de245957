//! Periodic lattice, discrete Fourier transforms and Fourier multipliers.
//!
//! Every operator of the form `m(D)` used elsewhere in the crate (derivatives,
//! Laplacians, dyadic blocks, convolutions with the interaction potentials) is
//! realized here as a diagonal multiplier on the discrete Fourier coefficients.
//!
//! Conventions:
//! - fields are stored row-major with `x` fastest: `index = iy * n + ix`;
//! - the forward transform is unnormalized, the inverse carries `1 / n^dim`;
//! - the unpaired Nyquist component of every derivative multiplier is zero
//!   (see [`Mode::kd`]).

use std::fmt;
use std::ops::{Add, Sub};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One discrete wavevector of a [`Grid`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode {
    /// Signed integer frequency per axis, in `[-n/2, n/2 - 1]`.
    pub index: [i64; 2],
    /// Wavevector `2π m / L`; unused axes are zero.
    pub k: [f64; 2],
    /// Wavevector used by derivative multipliers: equal to `k` except on the
    /// Nyquist line of each axis, where it is zero.
    pub kd: [f64; 2],
    /// `|k|²`.
    pub k2: f64,
}

impl Mode {
    pub fn norm(&self) -> f64 {
        self.k2.sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.index == [0, 0]
    }

    /// `|kd|²`.
    pub fn kd2(&self) -> f64 {
        self.kd[0] * self.kd[0] + self.kd[1] * self.kd[1]
    }
}

/// Periodic `dim`-dimensional lattice with `n` points per axis and period `length`.
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    wavenumbers: Vec<f64>,
    modes: Vec<Mode>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

/// Builds a shared grid; see [`Grid::new`].
pub fn make_grid(dim: usize, n: usize, length: f64) -> Result<Arc<Grid>> {
    Grid::new(dim, n, length)
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Arc<Grid>> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::Grid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Grid(format!(
                "n must be a power of two >= 16, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Grid(format!("length must be > 0, got {length}")));
        }

        let base = 2.0 * std::f64::consts::PI / length;
        let signed = |i: usize| -> i64 {
            if i < n / 2 {
                i as i64
            } else {
                i as i64 - n as i64
            }
        };
        let wavenumbers: Vec<f64> = (0..n).map(|i| base * signed(i) as f64).collect();
        let deriv = |i: usize| if i == n / 2 { 0.0 } else { wavenumbers[i] };

        let total = n.pow(dim as u32);
        let mut modes = Vec::with_capacity(total);
        for idx in 0..total {
            let (ix, iy) = (idx % n, idx / n);
            let mode = if dim == 1 {
                let k = wavenumbers[ix];
                Mode {
                    index: [signed(ix), 0],
                    k: [k, 0.0],
                    kd: [deriv(ix), 0.0],
                    k2: k * k,
                }
            } else {
                let (kx, ky) = (wavenumbers[ix], wavenumbers[iy]);
                Mode {
                    index: [signed(ix), signed(iy)],
                    k: [kx, ky],
                    kd: [deriv(ix), deriv(iy)],
                    k2: kx * kx + ky * ky,
                }
            };
            modes.push(mode);
        }

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        Ok(Arc::new(Grid {
            dim,
            n,
            length,
            wavenumbers,
            modes,
            forward,
            inverse,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of lattice points, `n^dim`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Domain measure `L^dim`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Per-axis signed wavenumbers in transform order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Smallest nonzero `|k|`, `2π / L`.
    pub fn k_min(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }

    /// Per-axis Nyquist magnitude, `π n / L`.
    pub fn k_nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n as f64 / self.length
    }

    /// Largest `|k|` present on the lattice (the corner mode in 2D).
    pub fn k_max(&self) -> f64 {
        self.k_nyquist() * (self.dim as f64).sqrt()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Flat index of the mode `-k`.
    pub fn mirror(&self, idx: usize) -> usize {
        let n = self.n;
        let (ix, iy) = (idx % n, idx / n);
        let mx = (n - ix) % n;
        if self.dim == 1 {
            mx
        } else {
            ((n - iy) % n) * n + mx
        }
    }

    /// Physical coordinates of lattice point `idx`, with `x_i = i * dx`.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        let n = self.n;
        if self.dim == 1 {
            [idx as f64 * h, 0.0]
        } else {
            [(idx % n) as f64 * h, (idx / n) as f64 * h]
        }
    }

    /// True when every axis frequency satisfies the 2/3 rule, `3|m| <= n`.
    pub fn is_retained(&self, mode: &Mode) -> bool {
        let n = self.n as i64;
        mode.index.iter().all(|m| 3 * m.abs() <= n)
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.length == other.length
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process(data);
        if self.dim == 2 {
            let n = self.n;
            let mut scratch = vec![Complex64::new(0.0, 0.0); data.len()];
            transpose(data, &mut scratch, n);
            plan.process(&mut scratch);
            transpose(&scratch, data, n);
        }
        if inverse {
            let scale = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|c| *c *= scale);
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in 0..n {
            dst[c * n + r] = src[r * n + c];
        }
    }
}

fn check_same(a: &Grid, b: &Grid) {
    assert!(a.same_shape(b), "fields live on different grids");
}

/// Real scalar field sampled on a grid.
#[derive(Clone, Debug)]
pub struct RealField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl RealField {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(RealField {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        RealField {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        RealField {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn forward(&self) -> SpectralField {
        let mut coeffs: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.grid.transform(&mut coeffs, false);
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        RealField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> Self {
        check_same(&self.grid, &other.grid);
        RealField {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `(f | g)_{L²}` with the lattice quadrature.
    pub fn inner(&self, other: &RealField) -> f64 {
        check_same(&self.grid, &other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

impl Add for &RealField {
    type Output = RealField;
    fn add(self, rhs: &RealField) -> RealField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &RealField {
    type Output = RealField;
    fn sub(self, rhs: &RealField) -> RealField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

/// Real vector field with one component per spatial axis.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: Vec<RealField>,
}

impl VectorField {
    pub fn new(comps: Vec<RealField>) -> Result<Self> {
        let Some(first) = comps.first() else {
            return Err(Error::param("vector field needs at least one component"));
        };
        let grid = Arc::clone(first.grid());
        if comps.len() != grid.dim() {
            return Err(Error::SizeMismatch {
                expected: grid.dim(),
                actual: comps.len(),
            });
        }
        if comps.iter().any(|c| !c.grid().same_shape(&grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(VectorField { comps })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        VectorField {
            comps: (0..grid.dim()).map(|_| RealField::zeros(grid)).collect(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.comps[0].grid()
    }

    pub fn components(&self) -> &[RealField] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [RealField] {
        &mut self.comps
    }

    pub fn component(&self, axis: usize) -> &RealField {
        &self.comps[axis]
    }

    pub fn forward(&self) -> Vec<SpectralField> {
        self.comps.iter().map(RealField::forward).collect()
    }

    pub fn from_spectral(parts: &[SpectralField]) -> Self {
        VectorField {
            comps: parts.iter().map(SpectralField::inverse).collect(),
        }
    }

    pub fn map_components(&self, f: impl Fn(&RealField) -> RealField) -> Self {
        VectorField {
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn zip_components(
        &self,
        other: &VectorField,
        f: impl Fn(&RealField, &RealField) -> RealField,
    ) -> Self {
        VectorField {
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_components(|f| f.scaled(c))
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        let len = self.grid().len();
        (0..len)
            .map(|i| {
                self.comps
                    .iter()
                    .map(|c| c.values()[i] * c.values()[i])
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(RealField::max_abs).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(RealField::is_finite)
    }

    pub fn inner(&self, other: &VectorField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.inner(b))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.zip_components(rhs, |a, b| a + b)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.zip_components(rhs, |a, b| a - b)
    }
}

/// Discrete Fourier coefficients of a field, indexed like the lattice.
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(SpectralField {
            grid: Arc::clone(grid),
            coeffs,
        })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        SpectralField {
            grid: Arc::clone(grid),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Inverse transform; the imaginary residue is discarded.
    pub fn inverse(&self) -> RealField {
        let mut data = self.coeffs.clone();
        self.grid.transform(&mut data, true);
        RealField {
            grid: Arc::clone(&self.grid),
            values: data.into_iter().map(|c| c.re).collect(),
        }
    }

    /// `coeffs'(k) = m(k) coeffs(k)`.
    ///
    /// With `require_real`, the multiplier is first checked for
    /// `m(-k) = conj(m(k))` on every mode, which is what keeps a real field real.
    pub fn apply_multiplier(
        &self,
        m: impl Fn(&Mode) -> Complex64,
        require_real: bool,
    ) -> Result<SpectralField> {
        let modes = self.grid.modes();
        let values: Vec<Complex64> = modes.iter().map(&m).collect();
        if require_real {
            for (idx, v) in values.iter().enumerate() {
                let w = values[self.grid.mirror(idx)];
                let tol = 1e-12 * v.norm().max(1.0);
                if (w - v.conj()).norm() > tol {
                    return Err(Error::SymmetryViolation {
                        index: modes[idx].index,
                    });
                }
            }
        }
        Ok(SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self
                .coeffs
                .iter()
                .zip(values)
                .map(|(c, v)| c * v)
                .collect(),
        })
    }

    /// Real even multiplier; symmetric by construction, so no check is made.
    pub fn scale_modes(&self, m: impl Fn(&Mode) -> f64) -> SpectralField {
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self
                .coeffs
                .iter()
                .zip(self.grid.modes())
                .map(|(c, mode)| c * m(mode))
                .collect(),
        }
    }

    /// `∂_axis`, i.e. the multiplier `i kd_axis`.
    pub fn derivative(&self, axis: usize) -> SpectralField {
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self
                .coeffs
                .iter()
                .zip(self.grid.modes())
                .map(|(c, mode)| c * Complex64::new(0.0, mode.kd[axis]))
                .collect(),
        }
    }

    pub fn laplacian(&self) -> SpectralField {
        self.scale_modes(|m| -m.k2)
    }

    /// 2/3-rule truncation: modes with any `|m| > n/3` are zeroed.
    pub fn dealias(&self) -> SpectralField {
        let mut out = self.clone();
        out.dealias_in_place();
        out
    }

    pub fn dealias_in_place(&mut self) {
        for (c, mode) in self.coeffs.iter_mut().zip(self.grid.modes()) {
            if !self.grid.is_retained(mode) {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm())).max(1.0);
        (0..self.coeffs.len()).all(|idx| {
            let w = self.coeffs[self.grid.mirror(idx)];
            (w - self.coeffs[idx].conj()).norm() <= tol * scale
        })
    }

    /// `L²` norm of the represented field, by Parseval.
    pub fn l2_norm(&self) -> f64 {
        let sum: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (sum * self.grid.cell_volume() / self.coeffs.len() as f64).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re / self.coeffs.len() as f64
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        check_same(&self.grid, &rhs.grid);
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        check_same(&self.grid, &rhs.grid);
        SpectralField {
            grid: Arc::clone(&self.grid),
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

pub fn gradient(f: &SpectralField) -> Vec<SpectralField> {
    (0..f.grid().dim()).map(|axis| f.derivative(axis)).collect()
}

pub fn divergence(u: &[SpectralField]) -> SpectralField {
    let mut out = SpectralField::zeros(u[0].grid());
    for (axis, comp) in u.iter().enumerate() {
        for ((o, c), mode) in out.coeffs.iter_mut().zip(&comp.coeffs).zip(comp.grid.modes()) {
            *o += c * Complex64::new(0.0, mode.kd[axis]);
        }
    }
    out
}

/// `ν₀ = min(μ, 2μ + λ)`.
pub fn viscous_floor(mu: f64, lambda: f64) -> f64 {
    mu.min(2.0 * mu + lambda)
}

/// Spectral `𝒜u = μΔu + (λ+μ)∇div u`, per mode `-μ|k|²û - (λ+μ) k (k·û)`.
pub fn diffusion_a_spectral(u: &[SpectralField], mu: f64, lambda: f64) -> Vec<SpectralField> {
    let grid = u[0].grid();
    let dim = grid.dim();
    let mut out: Vec<SpectralField> = (0..dim).map(|_| SpectralField::zeros(grid)).collect();
    for (idx, mode) in grid.modes().iter().enumerate() {
        let mut kdotu = Complex64::new(0.0, 0.0);
        for (axis, comp) in u.iter().enumerate() {
            kdotu += comp.coeffs[idx] * mode.kd[axis];
        }
        for (axis, o) in out.iter_mut().enumerate() {
            o.coeffs[idx] = -mu * mode.k2 * u[axis].coeffs[idx] - (lambda + mu) * mode.kd[axis] * kdotu;
        }
    }
    out
}

pub fn diffusion_a(u: &VectorField, mu: f64, lambda: f64) -> Result<VectorField> {
    let floor = viscous_floor(mu, lambda);
    if !(floor > 0.0) {
        return Err(Error::param(format!(
            "viscosity: min(mu, 2 mu + lambda) > 0 required, got {floor}"
        )));
    }
    let parts = diffusion_a_spectral(&u.forward(), mu, lambda);
    Ok(VectorField::from_spectral(&parts))
}
