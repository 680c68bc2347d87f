//! Frequency-localized gauge transform
//!
//! ```text
//! v_N = e^{−(iλ/2) ∫_{−L/2}^x |P_{≪N} u|^k dy} P_N u
//! ```
//!
//! and the five source terms of `(i∂_t − ∂_x²) v_N = Σ_j I_{N,j}`. With
//! `w = P_{≪N} u`, `z = P_N u` and `E` the gauge factor:
//!
//! ```text
//! I1 = −iλ E [P_N(|u|^k u_x) − |w|^k z_x]
//! I2 = −(iλ k(k−2)/8) E z ∫ |w|^{k−4} [(w̄_x w)² − (w_x w̄)²]
//! I3 = −(λ² k/4)      E z ∫ |w|^{k−2} [w̄ P_{≪N}(|u|^k u_x) + w P_{≪N}(|u|^k ū_x)]
//! I4 = (iλk/2)        E |w|^{k−2} z w w̄_x
//! I5 = (λ²/4)         E |w|^{2k} z
//! ```
//!
//! `I3` above is what differentiating the phase actually produces; the
//! literature display drops the `w̄`, `w` weights, and those variants are kept
//! behind [`Term3Form`] for comparison.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::littlewood_paley::{DyadicIndex, Relation, WindowFamily};
use crate::solver::duhamel_integral;
use crate::spectral::{modulus_power, Field, Grid, Multiplier, SpacetimeField};

/// Below this modulus the unimodular factor `w/|w|` is taken to be zero.
const PHASE_FLOOR: f64 = 1e-14;

/// Which expression is used for the third source term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term3Form {
    /// `|w|^{k−2} [w̄ P_{≪N}(|u|^k u_x) + w P_{≪N}(|u|^k ū_x)]` — consistent with the equation.
    #[default]
    Derived,
    /// `|w|^{k−2} P_{≪N}(|u|^k (u_x + ū_x))`, as displayed.
    PrintedGrouped,
    /// `|w|^{k−2} P_{≪N}(|u|^k) (u_x + ū_x)`, the other reading of the display.
    PrintedSplit,
}

/// `λ`, `k` and the band `N` of the transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeParams {
    pub lambda: f64,
    pub k: f64,
    pub band: DyadicIndex,
    #[serde(default)]
    pub term3: Term3Form,
}

impl GaugeParams {
    /// Production parameters: `λ ≠ 0`, `k ≥ 5`.
    pub fn new(lambda: f64, k: f64, band: DyadicIndex) -> Result<Self> {
        Self::checked(lambda, k, band, 5.0, false)
    }

    /// Relaxed mode accepting `k ≥ 4`, for the nonlinear lemmas stated in that range.
    pub fn relaxed(lambda: f64, k: f64, band: DyadicIndex) -> Result<Self> {
        Self::checked(lambda, k, band, 4.0, false)
    }

    /// `λ = 0`: the transform degenerates to `P_N u`. Used for consistency checks.
    pub fn linear(k: f64, band: DyadicIndex) -> Result<Self> {
        Self::checked(0.0, k, band, 4.0, true)
    }

    fn checked(lambda: f64, k: f64, band: DyadicIndex, k_min: f64, allow_zero: bool) -> Result<Self> {
        if !lambda.is_finite() || (lambda == 0.0 && !allow_zero) {
            return Err(LabError::InvalidGaugeParams(format!("λ = {lambda} must be finite and nonzero")));
        }
        if !k.is_finite() {
            return Err(LabError::InvalidGaugeParams(format!("k = {k} must be finite")));
        }
        if k < 4.0 {
            return Err(LabError::KBelowFour { k });
        }
        if k < k_min {
            return Err(LabError::InvalidGaugeParams(format!("k = {k} must be >= {k_min}")));
        }
        if band == DyadicIndex::Low {
            return Err(LabError::InvalidGaugeParams("the band must be a dyadic N >= 1".into()));
        }
        Ok(Self {
            lambda,
            k,
            band,
            term3: Term3Form::Derived,
        })
    }

    pub fn with_term3(mut self, form: Term3Form) -> Self {
        self.term3 = form;
        self
    }

    pub fn with_band(mut self, band: DyadicIndex) -> Self {
        self.band = band;
        self
    }
}

/// Multipliers shared by every slice.
struct Kernels {
    grid: Arc<Grid>,
    band: Multiplier,
    low: Multiplier,
    ik: Multiplier,
    band_dx: Multiplier,
    low_dx: Multiplier,
}

impl Kernels {
    fn new(windows: &WindowFamily, params: &GaugeParams) -> Result<Self> {
        let grid = Arc::clone(windows.grid());
        let band = windows.multiplier(params.band)?.clone();
        let low = windows.region_multiplier(Relation::MuchLess, params.band.value())?;
        let ik = grid.derivative_multiplier(1);
        Ok(Self {
            band_dx: band.then(&ik),
            low_dx: low.then(&ik),
            grid,
            band,
            low,
            ik,
        })
    }

    fn primitive(&self, values: Vec<Complex64>) -> Result<Vec<Complex64>> {
        Ok(Field::from_raw(Arc::clone(&self.grid), values)
            .primitive()?
            .into_values())
    }

    fn phase(&self, uh: &[Complex64], params: &GaugeParams) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let w = self.grid.synthesize_raw(uh, &self.low);
        let powk: Vec<Complex64> = w
            .iter()
            .map(|&z| Complex64::new(modulus_power(z, params.k), 0.0))
            .collect();
        let prim = self.primitive(powk)?;
        let c = Complex64::new(0.0, -0.5 * params.lambda);
        let e = prim.iter().map(|p| (c * p.re).exp()).collect();
        Ok((e, w))
    }
}

fn check_grid(windows: &WindowFamily, grid: &Arc<Grid>) -> Result<()> {
    if windows.grid().same_as(grid) {
        Ok(())
    } else {
        Err(LabError::GridMismatch)
    }
}

/// `exp(−(iλ/2) ∫_{−L/2}^x |P_{≪N} u|^k dy)` for one time slice.
pub fn gauge_phase(u: &Field, params: &GaugeParams, windows: &WindowFamily) -> Result<Field> {
    check_grid(windows, u.grid())?;
    let kern = Kernels::new(windows, params)?;
    let uh = kern.grid.raw_spectrum(u.values());
    let (e, _) = kern.phase(&uh, params)?;
    Ok(Field::from_raw(Arc::clone(u.grid()), e))
}

fn transform_slice(kern: &Kernels, params: &GaugeParams, u: &[Complex64]) -> Result<Vec<Complex64>> {
    let uh = kern.grid.raw_spectrum(u);
    let (e, _) = kern.phase(&uh, params)?;
    let z = kern.grid.synthesize_raw(&uh, &kern.band);
    Ok(e.iter().zip(&z).map(|(a, b)| a * b).collect())
}

/// Collects per-level results in level order.
fn per_level<F>(u: &SpacetimeField, f: F) -> Result<Vec<Vec<Complex64>>>
where
    F: Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync,
{
    let slices: Vec<&[Complex64]> = u.slices().collect();
    slices.par_iter().map(|s| f(s)).collect()
}

fn assemble(u: &SpacetimeField, rows: Vec<Vec<Complex64>>) -> SpacetimeField {
    SpacetimeField::from_raw(
        Arc::clone(u.grid()),
        u.times().to_vec(),
        rows.into_iter().flatten().collect(),
    )
}

/// `v_N = E · P_N u` on every stored level.
pub fn gauge_transform(u: &SpacetimeField, params: &GaugeParams, windows: &WindowFamily) -> Result<SpacetimeField> {
    check_grid(windows, u.grid())?;
    let kern = Kernels::new(windows, params)?;
    let rows = per_level(u, |s| transform_slice(&kern, params, s))?;
    Ok(assemble(u, rows))
}

/// The five source terms on every stored level.
#[derive(Clone, Debug)]
pub struct GaugeTermSet {
    pub terms: [SpacetimeField; 5],
}

impl GaugeTermSet {
    /// `I_{N,j}` for `j ∈ 1..=5`.
    pub fn term(&self, j: usize) -> &SpacetimeField {
        &self.terms[j - 1]
    }

    /// Sum of the selected terms (1-based indices).
    pub fn sum_of(&self, which: &[usize]) -> SpacetimeField {
        let mut acc = self.terms[0].zeros_like();
        for &j in which {
            acc = acc
                .zip_with(self.term(j), |a, b| a + b)
                .expect("terms share a grid");
        }
        acc
    }

    pub fn sum(&self) -> SpacetimeField {
        self.sum_of(&[1, 2, 3, 4, 5])
    }

    /// Fraction of the spectral energy of `I_{N,j}` at `|ξ| > 8N`, summed over levels.
    pub fn spectral_leakage(&self, j: usize, band: DyadicIndex) -> f64 {
        let term = self.term(j);
        let grid = term.grid();
        let cut = 8.0 * band.value();
        let (mut total, mut outside) = (0.0, 0.0);
        for s in term.slices() {
            let raw = grid.raw_spectrum(s);
            for (c, &k) in raw.iter().zip(grid.xi()) {
                let e = c.norm_sqr();
                total += e;
                if k.abs() > cut {
                    outside += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }
}

fn terms_slice(kern: &Kernels, params: &GaugeParams, u: &[Complex64]) -> Result<[Vec<Complex64>; 5]> {
    let grid = &kern.grid;
    let k = params.k;
    let lambda = params.lambda;
    let i = Complex64::new(0.0, 1.0);

    let uh = grid.raw_spectrum(u);
    let (e, w) = kern.phase(&uh, params)?;
    let ux = grid.synthesize_raw(&uh, &kern.ik);
    let z = grid.synthesize_raw(&uh, &kern.band);
    let zx = grid.synthesize_raw(&uh, &kern.band_dx);
    let wx = grid.synthesize_raw(&uh, &kern.low_dx);
    let aw: Vec<f64> = w.iter().map(|z| z.norm()).collect();
    let uk: Vec<f64> = u.iter().map(|&z| modulus_power(z, k)).collect();

    let g: Vec<Complex64> = uk.iter().zip(&ux).map(|(a, b)| a * b).collect();
    let gbar: Vec<Complex64> = uk.iter().zip(&ux).map(|(a, b)| a * b.conj()).collect();
    let g_hat = grid.raw_spectrum(&g);
    let pn_g = grid.synthesize_raw(&g_hat, &kern.band);

    let n = u.len();
    let mut i1 = Vec::with_capacity(n);
    let mut i4 = Vec::with_capacity(n);
    let mut i5 = Vec::with_capacity(n);
    let mut bracket2 = Vec::with_capacity(n);
    for m in 0..n {
        let awk = modulus_power(w[m], k);
        let awk2 = modulus_power(w[m], k - 2.0);
        i1.push(-i * lambda * e[m] * (pn_g[m] - awk * zx[m]));
        i4.push(0.5 * i * lambda * k * e[m] * awk2 * z[m] * w[m] * wx[m].conj());
        i5.push(0.25 * lambda * lambda * e[m] * awk * awk * z[m]);
        // |w|^{k−4}[(w̄_x w)² − (w_x w̄)²] = |w|^{k−2}[w̄_x² e^{2iθ} − w_x² e^{−2iθ}]
        let b = if aw[m] > PHASE_FLOOR {
            let ph = w[m] / aw[m];
            awk2 * (wx[m].conj().powu(2) * ph * ph - wx[m].powu(2) * ph.conj() * ph.conj())
        } else {
            Complex64::new(0.0, 0.0)
        };
        bracket2.push(b);
    }
    let prim2 = kern.primitive(bracket2)?;
    let c2 = -i * lambda * k * (k - 2.0) / 8.0;
    let i2: Vec<Complex64> = (0..n).map(|m| c2 * e[m] * z[m] * prim2[m]).collect();

    let integrand3: Vec<Complex64> = match params.term3 {
        Term3Form::Derived => {
            let low_g = grid.synthesize_raw(&g_hat, &kern.low);
            let low_gbar = grid.synthesize_raw(&grid.raw_spectrum(&gbar), &kern.low);
            (0..n)
                .map(|m| modulus_power(w[m], k - 2.0) * (w[m].conj() * low_g[m] + w[m] * low_gbar[m]))
                .collect()
        }
        Term3Form::PrintedGrouped => {
            let sum: Vec<Complex64> = g.iter().zip(&gbar).map(|(a, b)| a + b).collect();
            let low_sum = grid.synthesize_raw(&grid.raw_spectrum(&sum), &kern.low);
            (0..n)
                .map(|m| modulus_power(w[m], k - 2.0) * low_sum[m])
                .collect()
        }
        Term3Form::PrintedSplit => {
            let ukc: Vec<Complex64> = uk.iter().map(|&a| Complex64::new(a, 0.0)).collect();
            let low_uk = grid.synthesize_raw(&grid.raw_spectrum(&ukc), &kern.low);
            (0..n)
                .map(|m| modulus_power(w[m], k - 2.0) * low_uk[m] * (ux[m] + ux[m].conj()))
                .collect()
        }
    };
    let prim3 = kern.primitive(integrand3)?;
    let c3 = -lambda * lambda * k / 4.0;
    let i3: Vec<Complex64> = (0..n).map(|m| c3 * e[m] * z[m] * prim3[m]).collect();

    Ok([i1, i2, i3, i4, i5])
}

/// Assembles `I_{N,1..5}` from a trajectory.
pub fn gauge_terms(u: &SpacetimeField, params: &GaugeParams, windows: &WindowFamily) -> Result<GaugeTermSet> {
    if params.k < 4.0 {
        return Err(LabError::KBelowFour { k: params.k });
    }
    check_grid(windows, u.grid())?;
    let kern = Kernels::new(windows, params)?;
    let slices: Vec<&[Complex64]> = u.slices().collect();
    let rows: Vec<[Vec<Complex64>; 5]> = slices
        .par_iter()
        .map(|s| terms_slice(&kern, params, s))
        .collect::<Result<_>>()?;
    let mut cols: [Vec<Complex64>; 5] = Default::default();
    for row in rows {
        for (c, r) in cols.iter_mut().zip(row) {
            c.extend(r);
        }
    }
    let terms = cols.map(|values| SpacetimeField::from_raw(Arc::clone(u.grid()), u.times().to_vec(), values));
    Ok(GaugeTermSet { terms })
}

fn uniform_step(u: &SpacetimeField) -> Result<f64> {
    u.uniform_step()
        .ok_or_else(|| LabError::InvalidParameter("stored levels are not uniformly spaced".into()))
}

/// `‖(i∂_t − ∂_x²) v_N − Σ_j I_{N,j}‖ / ‖v_N‖` in `L²_{x,t}` over the interior
/// levels, with a centered fourth-order difference in time.
pub fn gauge_residual(u: &SpacetimeField, params: &GaugeParams, windows: &WindowFamily) -> Result<f64> {
    if u.levels() < 5 {
        return Err(LabError::TooFewTimeLevels {
            needed: 5,
            got: u.levels(),
        });
    }
    let h = uniform_step(u)?;
    let v = gauge_transform(u, params, windows)?;
    let forcing = gauge_terms(u, params, windows)?.sum();
    let grid = u.grid();
    let lap = grid.derivative_multiplier(2);
    let i = Complex64::new(0.0, 1.0);
    let (mut num, mut den) = (0.0, 0.0);
    for n in 2..u.levels() - 2 {
        let vxx = grid.apply(v.slice(n), &lap);
        let (a, b, c, d) = (v.slice(n - 2), v.slice(n - 1), v.slice(n + 1), v.slice(n + 2));
        let f = forcing.slice(n);
        for m in 0..grid.nx() {
            let vt = (a[m] - 8.0 * b[m] + 8.0 * c[m] - d[m]) / (12.0 * h);
            num += (i * vt - vxx[m] - f[m]).norm_sqr();
            den += v.slice(n)[m].norm_sqr();
        }
    }
    Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
}

/// Index of the stored level at time `t`.
pub fn level_at(u: &SpacetimeField, t: f64) -> Result<usize> {
    let times = u.times();
    let scale = u.horizon().max(f64::MIN_POSITIVE);
    times
        .iter()
        .position(|&s| (s - t).abs() <= 1e-9 * scale)
        .ok_or(LabError::MisalignedTime { t })
}

/// `‖v_N(t) − S(t) v_N(0) + i ∫_0^t S(t−τ) Σ_j I_{N,j}(τ) dτ‖ / ‖v_N(t)‖`,
/// the integral by the trapezoid rule over the stored levels.
pub fn duhamel_mismatch(u: &SpacetimeField, params: &GaugeParams, windows: &WindowFamily, t: f64) -> Result<f64> {
    if u.levels() < 2 {
        return Err(LabError::TooFewTimeLevels {
            needed: 2,
            got: u.levels(),
        });
    }
    let level = level_at(u, t)?;
    if level == 0 {
        return Ok(0.0);
    }
    let head = u.truncated(level + 1);
    let v = gauge_transform(&head, params, windows)?;
    let forcing = gauge_terms(&head, params, windows)?.sum();
    let integral = duhamel_integral(&forcing);
    let vt = v.field(level);
    let free = v.field(0).propagate(head.times()[level]);
    let i = Complex64::new(0.0, 1.0);
    let mismatch = vt
        .sub(&free)?
        .add(&integral.field(level).scale(i))?
        .l2_norm();
    let scale = vt.l2_norm();
    Ok(if scale == 0.0 { mismatch } else { mismatch / scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::littlewood_paley::WindowProfile;
    use crate::solver::{solve, InitialData};
    use crate::spectral::GridSpec;

    fn setup(nx: usize, length: f64, dt: f64, horizon: f64) -> (Arc<Grid>, WindowFamily) {
        let g = Grid::new(GridSpec::new(nx, length, dt, horizon).unwrap()).unwrap();
        let w = WindowFamily::build(&g, WindowProfile::SmoothBump).unwrap();
        (g, w)
    }

    #[test]
    fn params_validation() {
        assert!(GaugeParams::new(0.0, 5.0, DyadicIndex::Band(3)).is_err());
        assert!(GaugeParams::new(1.0, 4.5, DyadicIndex::Band(3)).is_err());
        assert!(GaugeParams::relaxed(1.0, 4.5, DyadicIndex::Band(3)).is_ok());
        assert!(matches!(
            GaugeParams::relaxed(1.0, 3.0, DyadicIndex::Band(3)),
            Err(LabError::KBelowFour { .. })
        ));
        assert!(GaugeParams::new(1.0, 5.0, DyadicIndex::Low).is_err());
        assert!(GaugeParams::linear(5.0, DyadicIndex::Band(3)).is_ok());
    }

    #[test]
    fn phase_is_unimodular_and_anchored() {
        let (g, w) = setup(1024, 60.0, 1e-3, 0.01);
        let u = InitialData::gaussian(1.0, 2.0).build(&g).unwrap();
        let p = GaugeParams::new(1.0, 5.0, DyadicIndex::Band(4)).unwrap();
        let e = gauge_phase(&u, &p, &w).unwrap();
        assert!(e.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!((e.values()[0] - 1.0).norm() < 1e-12);
        let zero = Field::zeros(Arc::clone(&g));
        let e0 = gauge_phase(&zero, &p, &w).unwrap();
        assert!(e0.values().iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn zero_solution_has_zero_terms() {
        let (g, w) = setup(512, 60.0, 1e-3, 0.01);
        let u = SpacetimeField::from_fn(Arc::clone(&g), SpacetimeField::uniform_times(0.01, 6), |_, _| {
            Complex64::new(0.0, 0.0)
        })
        .unwrap();
        let p = GaugeParams::new(1.0, 5.0, DyadicIndex::Band(3)).unwrap();
        let set = gauge_terms(&u, &p, &w).unwrap();
        for j in 1..=5 {
            assert!(set.term(j).values().iter().all(|z| z.norm() == 0.0));
        }
        assert_eq!(gauge_residual(&u, &p, &w).unwrap(), 0.0);
    }

    #[test]
    fn real_slices_kill_second_term() {
        let (g, w) = setup(512, 60.0, 1e-3, 0.01);
        let u = SpacetimeField::from_fn(Arc::clone(&g), SpacetimeField::uniform_times(0.01, 4), |t, x| {
            Complex64::new((1.0 + t) * (-(x * x) / 4.0).exp() * (1.0 + 0.3 * (8.0 * x).cos()), 0.0)
        })
        .unwrap();
        let p = GaugeParams::new(1.0, 5.0, DyadicIndex::Band(3)).unwrap();
        let set = gauge_terms(&u, &p, &w).unwrap();
        // only FFT round-off in the imaginary part of P_{≪N}u survives
        let scale = set.term(4).values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(scale > 1e-3);
        assert!(set.term(2).values().iter().all(|z| z.norm() <= 1e-12 * scale));
    }

    #[test]
    fn plane_wave_fifth_term_closed_form() {
        // u = a e^{iθx} with θ a grid frequency well inside P_{≪N}: w = u, |w| = a
        let spec = GridSpec::new(256, 2.0 * std::f64::consts::PI * 8.0, 1e-3, 0.01)
            .unwrap()
            .with_edge_tol(f64::INFINITY)
            .unwrap();
        let g = Grid::new(spec).unwrap();
        let w = WindowFamily::build(&g, WindowProfile::SmoothBump).unwrap();
        let (a, theta, lambda, k) = (0.7, 0.25, 1.3, 5.0);
        let u = SpacetimeField::from_fn(Arc::clone(&g), SpacetimeField::uniform_times(0.01, 2), |_, x| {
            Complex64::from_polar(a, theta * x)
        })
        .unwrap();
        let p = GaugeParams::new(lambda, k, DyadicIndex::Band(3)).unwrap();
        let set = gauge_terms(&u, &p, &w).unwrap();
        let i5 = set.term(5);
        let half = g.length() / 2.0;
        for (m, &x) in g.x().iter().enumerate() {
            let phase = Complex64::from_polar(1.0, -0.5 * lambda * a.powf(k) * (x + half));
            let pn_u = Complex64::new(0.0, 0.0); // θ is far below band 8
            let expect = 0.25 * lambda * lambda * a.powf(2.0 * k) * phase * pn_u;
            assert!((i5.slice(0)[m] - expect).norm() < 1e-12);
        }
        // with a band-8 component added, the factor multiplies P_N u exactly
        let u2 = u.map_slices(|s| {
            s.iter()
                .zip(g.x())
                .map(|(z, &x)| z + Complex64::from_polar(1e-3, 8.0 * x))
                .collect()
        });
        let set2 = gauge_terms(&u2, &p, &w).unwrap();
        let z = w.project(&u2.field(0), DyadicIndex::Band(3)).unwrap();
        let low = w
            .project_region(&u2.field(0), Relation::MuchLess, 8.0)
            .unwrap();
        let e = gauge_phase(&u2.field(0), &p, &w).unwrap();
        for m in 0..g.nx() {
            let expect = 0.25 * lambda * lambda * low.values()[m].norm().powf(2.0 * k) * e.values()[m] * z.values()[m];
            assert!((set2.term(5).slice(0)[m] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn linear_transform_is_projection() {
        let (g, w) = setup(512, 60.0, 1e-3, 0.01);
        let u0 = InitialData::modulated(0.5, 2.0, 8.0).build(&g).unwrap();
        let tr = solve(&u0, 0.0, 5.0, g.spec(), 1).unwrap();
        let p = GaugeParams::linear(5.0, DyadicIndex::Band(3)).unwrap();
        let v = gauge_transform(&tr.data, &p, &w).unwrap();
        let pn = w.project_spacetime(&tr.data, DyadicIndex::Band(3)).unwrap();
        assert_eq!(v.values(), pn.values());
        assert!(duhamel_mismatch(&tr.data, &p, &w, 0.01).unwrap() <= 1e-10);
        assert_eq!(duhamel_mismatch(&tr.data, &p, &w, 0.0).unwrap(), 0.0);
        assert!(matches!(
            duhamel_mismatch(&tr.data, &p, &w, 0.00525),
            Err(LabError::MisalignedTime { .. })
        ));
    }
}
