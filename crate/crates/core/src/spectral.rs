//! Periodic spatial grid, discrete Fourier analysis and Fourier multipliers.
//!
//! The grid covers `[-L/2, L/2)` with `nx` equispaced points. Spectra are
//! Fourier-series coefficients `c_m` such that `f(x) = Σ c_m e^{i ξ_m x}` with
//! `ξ_m = 2π m / L` for `m ∈ {-nx/2, …, nx/2 - 1}`, stored in FFT order.
//! Every multiplier operation zeroes the Nyquist mode `m = -nx/2`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const DEFAULT_EDGE_TOL: f64 = 1e-8;
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

/// Modulus below which `|f|^k` is treated as zero.
const POWER_FLOOR: f64 = 1e-300;

fn default_dealias() -> f64 {
    DEFAULT_DEALIAS_FRACTION
}

fn default_edge_tol() -> f64 {
    DEFAULT_EDGE_TOL
}

/// Space-time discretization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub length: f64,
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    /// Largest admissible `|f|` at the domain edge for primitives.
    #[serde(default = "default_edge_tol")]
    pub edge_tol: f64,
}

impl GridSpec {
    pub fn new(nx: usize, length: f64, dt: f64, horizon: f64) -> Result<Self> {
        let spec = Self {
            nx,
            length,
            dt,
            horizon,
            dealias_fraction: DEFAULT_DEALIAS_FRACTION,
            edge_tol: DEFAULT_EDGE_TOL,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_dealias_fraction(mut self, fraction: f64) -> Result<Self> {
        self.dealias_fraction = fraction;
        self.validate()?;
        Ok(self)
    }

    pub fn with_edge_tol(mut self, tol: f64) -> Result<Self> {
        self.edge_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: f64) -> Result<Self> {
        self.horizon = horizon;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(LabError::InvalidGrid(msg));
        if self.nx < 16 || !self.nx.is_power_of_two() {
            return bad(format!("nx = {} must be a power of two >= 16", self.nx));
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad(format!("length = {} must be positive", self.length));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon = {} must be positive", self.horizon));
        }
        if self.dt > self.horizon {
            return bad(format!("dt = {} exceeds horizon {}", self.dt, self.horizon));
        }
        let ratio = self.horizon / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return bad(format!(
                "horizon/dt = {ratio} is not an integer number of steps"
            ));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return bad(format!(
                "dealias fraction {} outside (0, 1]",
                self.dealias_fraction
            ));
        }
        if self.edge_tol.is_nan() || self.edge_tol < 0.0 {
            return bad(format!("edge tolerance {} must be >= 0", self.edge_tol));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    /// `|ξ|` of the Nyquist mode, `π nx / L`.
    pub fn nyquist_frequency(&self) -> f64 {
        PI * self.nx as f64 / self.length
    }

    /// Signed mode number of FFT slot `i`.
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.nx / 2 {
            i as i64
        } else {
            i as i64 - self.nx as i64
        }
    }

    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI * self.mode(i) as f64 / self.length
    }

    /// One space-time refinement step: twice the points, half the step.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            nx: self.nx * 2,
            dt: self.dt / 2.0,
            ..*self
        }
    }
}

/// A grid together with its frequencies and FFT plans.
pub struct Grid {
    spec: GridSpec,
    x: Vec<f64>,
    xi: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let n = spec.nx;
        let dx = spec.dx();
        let x = (0..n).map(|j| -spec.length / 2.0 + j as f64 * dx).collect();
        let xi = (0..n).map(|i| spec.wavenumber(i)).collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Arc::new(Self {
            spec,
            x,
            xi,
            forward,
            inverse,
        }))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn nx(&self) -> usize {
        self.spec.nx
    }

    pub fn length(&self) -> f64 {
        self.spec.length
    }

    pub fn dx(&self) -> f64 {
        self.spec.dx()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Wavenumbers in FFT order.
    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn nyquist_slot(&self) -> usize {
        self.spec.nx / 2
    }

    /// Unnormalized forward DFT in place.
    pub(crate) fn fft_forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse DFT in place, including the `1/nx` factor.
    pub(crate) fn fft_inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.spec.nx as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    /// Builds a multiplier from its symbol; the Nyquist slot is forced to zero.
    pub fn multiplier<F: Fn(f64) -> Complex64>(&self, symbol: F) -> Multiplier {
        let mut m: Vec<Complex64> = self.xi.iter().map(|&k| symbol(k)).collect();
        m[self.nyquist_slot()] = Complex64::new(0.0, 0.0);
        Multiplier(m)
    }

    pub fn real_multiplier<F: Fn(f64) -> f64>(&self, symbol: F) -> Multiplier {
        self.multiplier(|k| Complex64::new(symbol(k), 0.0))
    }

    /// Mask keeping `|m| <= fraction * nx/2`, the dealiasing rule for products.
    pub fn dealias_mask(&self) -> Multiplier {
        let cutoff = self.spec.dealias_fraction * self.spec.nx as f64 / 2.0;
        let mut m: Vec<Complex64> = (0..self.spec.nx)
            .map(|i| {
                let keep = (self.spec.mode(i).abs() as f64) <= cutoff;
                Complex64::new(if keep { 1.0 } else { 0.0 }, 0.0)
            })
            .collect();
        m[self.nyquist_slot()] = Complex64::new(0.0, 0.0);
        Multiplier(m)
    }

    pub fn derivative_multiplier(&self, order: u32) -> Multiplier {
        self.multiplier(|k| Complex64::new(0.0, k).powu(order))
    }

    pub fn propagator_multiplier(&self, t: f64) -> Multiplier {
        self.multiplier(|k| Complex64::from_polar(1.0, t * k * k))
    }

    pub fn fractional_multiplier(&self, s: f64, kind: DerivativeKind) -> Multiplier {
        self.real_multiplier(|k| match kind {
            DerivativeKind::Homogeneous => {
                if k == 0.0 {
                    if s == 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    k.abs().powf(s)
                }
            }
            DerivativeKind::Inhomogeneous => (1.0 + k * k).powf(s / 2.0),
        })
    }

    /// Applies `m` to sample values, returning new samples.
    pub fn apply(&self, values: &[Complex64], m: &Multiplier) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.fft_forward(&mut buf);
        for (z, w) in buf.iter_mut().zip(&m.0) {
            *z *= w;
        }
        self.fft_inverse(&mut buf);
        buf
    }

    /// Raw (unnormalized, unshifted) DFT of `values`.
    pub(crate) fn raw_spectrum(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.fft_forward(&mut buf);
        buf
    }

    /// Inverse of `raw_spectrum` after applying `m`.
    pub(crate) fn synthesize_raw(&self, raw: &[Complex64], m: &Multiplier) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = raw.iter().zip(&m.0).map(|(a, b)| a * b).collect();
        self.fft_inverse(&mut buf);
        buf
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.spec.nx == other.spec.nx && self.spec.length == other.spec.length
    }
}

/// A Fourier multiplier sampled in FFT order.
#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier(pub(crate) Vec<Complex64>);

impl Multiplier {
    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    /// Symbol of the composition `self ∘ other` (pointwise product).
    pub fn then(&self, other: &Multiplier) -> Multiplier {
        Multiplier(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    pub fn scaled(&self, c: f64) -> Multiplier {
        Multiplier(self.0.iter().map(|a| a * c).collect())
    }

    pub fn sum(&self, other: &Multiplier) -> Multiplier {
        Multiplier(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeKind {
    /// `D_x^s`, symbol `|ξ|^s`.
    Homogeneous,
    /// `⟨D_x⟩^s`, symbol `(1 + ξ²)^{s/2}`.
    Inhomogeneous,
}

pub(crate) fn all_finite(values: &[Complex64]) -> bool {
    values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Discrete `L^p_x` norm with Riemann weights; `p = ∞` is the grid maximum.
pub fn lp_norm(values: &[Complex64], p: f64, dx: f64) -> f64 {
    if p.is_infinite() {
        values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else if p == 2.0 {
        (values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt()
    } else {
        (values.iter().map(|z| z.norm().powf(p)).sum::<f64>() * dx).powf(1.0 / p)
    }
}

/// `|z|^k` with `0^k = 0` for `k > 0` and `|z|^0 = 1`.
pub fn modulus_power(z: Complex64, k: f64) -> f64 {
    if k == 0.0 {
        return 1.0;
    }
    let r = z.norm();
    if r < POWER_FLOOR {
        0.0
    } else {
        (k * r.ln()).exp()
    }
}

/// Complex samples of a function of `x` on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.nx() {
            return Err(LabError::InvalidParameter(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.nx()
            )));
        }
        if !all_finite(&values) {
            return Err(LabError::NonFiniteValue("Field::new"));
        }
        Ok(Self { grid, values })
    }

    /// Constructor for values produced internally from finite inputs.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.nx());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.nx();
        Self::from_raw(grid, vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Arc<Grid>, f: F) -> Result<Self> {
        let values = grid.x().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    fn check_grid(&self, other: &Field) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }

    /// Fourier-series coefficients.
    pub fn analyze(&self) -> Spectrum {
        let n = self.grid.nx();
        let mut buf = self.grid.raw_spectrum(&self.values);
        let inv_n = 1.0 / n as f64;
        for (i, z) in buf.iter_mut().enumerate() {
            // e^{-i ξ_m x_0} = (-1)^m for x_0 = -L/2
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *z *= sign * inv_n;
        }
        Spectrum {
            grid: Arc::clone(&self.grid),
            coeffs: buf,
        }
    }

    pub fn apply_multiplier(&self, m: &Multiplier) -> Field {
        Field::from_raw(Arc::clone(&self.grid), self.grid.apply(&self.values, m))
    }

    fn mean_is_zero(&self) -> bool {
        let spec = self.analyze();
        let peak = spec.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        spec.coeffs[0].norm() <= 1e-12 * peak
    }

    /// `D_x^s f` or `⟨D_x⟩^s f`.
    pub fn fractional_derivative(&self, s: f64, kind: DerivativeKind) -> Result<Field> {
        if kind == DerivativeKind::Homogeneous && s < 0.0 && !self.mean_is_zero() {
            return Err(LabError::NegativeHomogeneousOnMeanful { order: s });
        }
        Ok(self.apply_multiplier(&self.grid.fractional_multiplier(s, kind)))
    }

    /// `∂_x^order f`, spectrally.
    pub fn derivative(&self, order: u32) -> Field {
        self.apply_multiplier(&self.grid.derivative_multiplier(order))
    }

    /// Free Schrödinger flow `S(t) f`, symbol `e^{i t ξ²}`.
    pub fn propagate(&self, t: f64) -> Field {
        self.apply_multiplier(&self.grid.propagator_multiplier(t))
    }

    /// `F(x) = ∫_{-L/2}^x f(y) dy`, with the grid's edge tolerance.
    pub fn primitive(&self) -> Result<Field> {
        self.primitive_with_tol(self.grid.spec().edge_tol)
    }

    /// Spectral antiderivative of the mean-free part plus the linear mean
    /// term, anchored so that `F(-L/2) = 0`.
    pub fn primitive_with_tol(&self, edge_tol: f64) -> Result<Field> {
        let n = self.values.len();
        let edge = self.values[0].norm().max(self.values[n - 1].norm());
        if edge > edge_tol {
            return Err(LabError::EdgeDecayViolation {
                value: edge,
                tol: edge_tol,
            });
        }
        let mut buf = self.grid.raw_spectrum(&self.values);
        let mean = buf[0] / n as f64;
        buf[0] = Complex64::new(0.0, 0.0);
        buf[self.grid.nyquist_slot()] = Complex64::new(0.0, 0.0);
        for (z, &k) in buf.iter_mut().zip(self.grid.xi()).skip(1) {
            if k != 0.0 {
                *z /= Complex64::new(0.0, k);
            }
        }
        self.grid.fft_inverse(&mut buf);
        let g0 = buf[0];
        let half = self.grid.length() / 2.0;
        let values = buf
            .iter()
            .zip(self.grid.x())
            .map(|(&g, &x)| mean * (x + half) + g - g0)
            .collect();
        Ok(Field::from_raw(Arc::clone(&self.grid), values))
    }

    /// `|f(x_i)|^k` stored as a real-valued complex field.
    pub fn pointwise_power_modulus(&self, k: f64) -> Field {
        let values = self
            .values
            .iter()
            .map(|&z| Complex64::new(modulus_power(z, k), 0.0))
            .collect();
        Field::from_raw(Arc::clone(&self.grid), values)
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, p, self.grid.dx())
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.lp_norm(f64::INFINITY)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Field {
        Field::from_raw(
            Arc::clone(&self.grid),
            self.values.iter().map(|&z| f(z)).collect(),
        )
    }

    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(
        &self,
        other: &Field,
        f: F,
    ) -> Result<Field> {
        self.check_grid(other)?;
        Ok(Field::from_raw(
            Arc::clone(&self.grid),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    pub fn conj(&self) -> Field {
        self.map(|z| z.conj())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.values)
    }
}

/// Fourier-series coefficients of a [`Field`], in FFT order.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of mode `m ∈ [-nx/2, nx/2)`.
    pub fn mode(&self, m: i64) -> Complex64 {
        let n = self.grid.nx() as i64;
        assert!(m >= -n / 2 && m < n / 2, "mode {m} out of range");
        self.coeffs[m.rem_euclid(n) as usize]
    }

    /// `(L Σ |c_m|²)^{1/2}`, equal to the grid `L²` norm of the synthesized field.
    pub fn weighted_l2(&self) -> f64 {
        (self.grid.length() * self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn synthesize(&self) -> Field {
        let n = self.grid.nx();
        let mut buf: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                z * sign * n as f64
            })
            .collect();
        self.grid.fft_inverse(&mut buf);
        Field::from_raw(Arc::clone(&self.grid), buf)
    }
}

/// Complex samples over the stored `(t, x)` levels, row-major in time.
#[derive(Clone, Debug)]
pub struct SpacetimeField {
    grid: Arc<Grid>,
    times: Vec<f64>,
    values: Vec<Complex64>,
}

impl SpacetimeField {
    pub fn new(grid: Arc<Grid>, times: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if times.is_empty() {
            return Err(LabError::InvalidParameter("no time levels".into()));
        }
        if values.len() != times.len() * grid.nx() {
            return Err(LabError::InvalidParameter(format!(
                "{} values for {} levels of {} points",
                values.len(),
                times.len(),
                grid.nx()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidParameter(
                "time levels must increase strictly".into(),
            ));
        }
        if !all_finite(&values) {
            return Err(LabError::NonFiniteValue("SpacetimeField::new"));
        }
        Ok(Self {
            grid,
            times,
            values,
        })
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, times: Vec<f64>, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), times.len() * grid.nx());
        Self {
            grid,
            times,
            values,
        }
    }

    pub fn from_slices(grid: Arc<Grid>, times: Vec<f64>, slices: Vec<Vec<Complex64>>) -> Result<Self> {
        let values = slices.into_iter().flatten().collect();
        Self::new(grid, times, values)
    }

    /// `u(t_n, x) = f(t_n, x)` sampled at the given times.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(
        grid: Arc<Grid>,
        times: Vec<f64>,
        f: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len() * grid.nx());
        for &t in &times {
            values.extend(grid.x().iter().map(|&x| f(t, x)));
        }
        Self::new(grid, times, values)
    }

    /// Levels `0, h, 2h, …, T` for `steps` intervals.
    pub fn uniform_times(horizon: f64, steps: usize) -> Vec<f64> {
        (0..=steps)
            .map(|n| horizon * n as f64 / steps as f64)
            .collect()
    }

    /// Free evolution `S(t) φ` at the requested times.
    pub fn free_evolution(phi: &Field, times: Vec<f64>) -> Self {
        let grid = Arc::clone(phi.grid());
        let raw = grid.raw_spectrum(phi.values());
        let mut values = Vec::with_capacity(times.len() * grid.nx());
        for &t in &times {
            values.extend(grid.synthesize_raw(&raw, &grid.propagator_multiplier(t)));
        }
        Self::from_raw(grid, times, values)
    }

    pub fn zeros_like(&self) -> Self {
        Self::from_raw(
            Arc::clone(&self.grid),
            self.times.clone(),
            vec![Complex64::new(0.0, 0.0); self.values.len()],
        )
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn levels(&self) -> usize {
        self.times.len()
    }

    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn slice(&self, level: usize) -> &[Complex64] {
        let n = self.grid.nx();
        &self.values[level * n..(level + 1) * n]
    }

    pub fn field(&self, level: usize) -> Field {
        Field::from_raw(Arc::clone(&self.grid), self.slice(level).to_vec())
    }

    pub fn slices(&self) -> impl Iterator<Item = &[Complex64]> {
        self.values.chunks(self.grid.nx())
    }

    /// Common spacing of the stored levels, if uniform to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.times.len() < 2 {
            return None;
        }
        let h = (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64;
        let uniform = self
            .times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        uniform.then_some(h)
    }

    pub fn map_slices<F>(&self, f: F) -> SpacetimeField
    where
        F: Fn(&[Complex64]) -> Vec<Complex64>,
    {
        let mut values = Vec::with_capacity(self.values.len());
        for s in self.slices() {
            values.extend(f(s));
        }
        Self::from_raw(Arc::clone(&self.grid), self.times.clone(), values)
    }

    pub fn try_map_slices<F>(&self, f: F) -> Result<SpacetimeField>
    where
        F: Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    {
        let mut values = Vec::with_capacity(self.values.len());
        for s in self.slices() {
            values.extend(f(s)?);
        }
        Ok(Self::from_raw(Arc::clone(&self.grid), self.times.clone(), values))
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> SpacetimeField {
        Self::from_raw(
            Arc::clone(&self.grid),
            self.times.clone(),
            self.values.iter().map(|&z| f(z)).collect(),
        )
    }

    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(
        &self,
        other: &SpacetimeField,
        f: F,
    ) -> Result<SpacetimeField> {
        if !self.grid.same_as(&other.grid) || self.times.len() != other.times.len() {
            return Err(LabError::GridMismatch);
        }
        Ok(Self::from_raw(
            Arc::clone(&self.grid),
            self.times.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, c: Complex64) -> SpacetimeField {
        self.map(|z| z * c)
    }

    pub fn apply_multiplier(&self, m: &Multiplier) -> SpacetimeField {
        self.map_slices(|s| self.grid.apply(s, m))
    }

    /// Keeps the first `levels` stored time levels.
    pub fn truncated(&self, levels: usize) -> SpacetimeField {
        let levels = levels.clamp(1, self.levels());
        let n = self.grid.nx();
        Self::from_raw(
            Arc::clone(&self.grid),
            self.times[..levels].to_vec(),
            self.values[..levels * n].to_vec(),
        )
    }

    /// Raw spectra of every level, reusable across many multipliers.
    pub fn spectra(&self) -> SpectralSlices {
        SpectralSlices {
            grid: Arc::clone(&self.grid),
            times: self.times.clone(),
            raw: self.slices().map(|s| self.grid.raw_spectrum(s)).collect(),
        }
    }
}

/// Cached raw spectra of a [`SpacetimeField`].
pub struct SpectralSlices {
    grid: Arc<Grid>,
    times: Vec<f64>,
    raw: Vec<Vec<Complex64>>,
}

impl SpectralSlices {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn synthesize(&self, m: &Multiplier) -> SpacetimeField {
        let mut values = Vec::with_capacity(self.raw.len() * self.grid.nx());
        for r in &self.raw {
            values.extend(self.grid.synthesize_raw(r, m));
        }
        SpacetimeField::from_raw(Arc::clone(&self.grid), self.times.clone(), values)
    }

    /// `L²_x` norm of `m` applied to each level, without synthesis.
    pub fn level_l2_norms(&self, weight: &Multiplier) -> Vec<f64> {
        let n = self.grid.nx() as f64;
        let scale = self.grid.length() / (n * n);
        self.raw
            .iter()
            .map(|r| {
                let s: f64 = r
                    .iter()
                    .zip(weight.as_slice())
                    .map(|(a, w)| (a * w).norm_sqr())
                    .sum();
                (s * scale).sqrt()
            })
            .collect()
    }
}
