//! Integrating-factor RK4 for `u_t = −i u_xx − λ |u|^k u_x` on the periodic grid,
//! plus the Duhamel machinery, scaling maps and conservation diagnostics.
//!
//! In Fourier variables `û_t = i ξ² û + N(û)` with
//! `N(û) = −λ · mask · F(|u|^k u_x)`. The linear part is integrated exactly by
//! `E(h) = e^{i h ξ²}`, and classical RK4 is applied to `w = E(−t) û`
//! (Lawson's scheme), which in the original variables reads
//!
//! ```text
//! k1 = N(u)
//! k2 = N(E½ (u + h/2 k1))
//! k3 = N(E½ u + h/2 k2)
//! k4 = N(E u + h E½ k3)
//! u⁺ = E u + h/6 (E k1 + 2 E½ (k2 + k3) + k4)
//! ```

mod initial;
pub mod io;
mod scaling;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{all_finite, modulus_power, Field, Grid, GridSpec, SpacetimeField};

pub use initial::{band_limited_field, mode_frequency, InitialData};
pub use scaling::{
    frequency_split_norms, scale, scale_onto, search_scaling, FrequencySplit, ScalingChoice,
};

/// Largest admissible `dt · ξ_max²`.
pub const CFL_LIMIT: f64 = 50.0;
/// Trajectories whose sup norm grows beyond this factor are declared blown up.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Bookkeeping for how a trajectory was produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeInfo {
    pub dt: f64,
    pub dealias_fraction: f64,
    pub steps: usize,
    pub store_every: usize,
}

/// Stored solution levels together with the physical parameters.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub data: SpacetimeField,
    pub lambda: f64,
    pub k: f64,
    pub scheme: SchemeInfo,
}

impl Trajectory {
    pub fn grid(&self) -> &Arc<Grid> {
        self.data.grid()
    }

    pub fn initial(&self) -> Field {
        self.data.field(0)
    }

    pub fn last(&self) -> Field {
        self.data.field(self.data.levels() - 1)
    }

    pub fn masses(&self) -> Vec<f64> {
        self.data.slices().map(|s| slice_mass(s, self.grid().dx())).collect()
    }

    /// `max_t |M(t) − M(0)| / M(0)`, zero for the zero solution.
    pub fn relative_mass_drift(&self) -> f64 {
        let m = self.masses();
        if m[0] == 0.0 {
            return 0.0;
        }
        m.iter().map(|x| (x - m[0]).abs()).fold(0.0, f64::max) / m[0]
    }
}

fn slice_mass(values: &[Complex64], dx: f64) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx
}

/// `‖f‖²_{L²}`.
pub fn mass(f: &Field) -> f64 {
    slice_mass(f.values(), f.grid().dx())
}

struct Stepper {
    grid: Arc<Grid>,
    lambda: f64,
    k: f64,
    e_full: Vec<Complex64>,
    e_half: Vec<Complex64>,
    mask: Vec<Complex64>,
    ik: Vec<Complex64>,
    phys: Vec<Complex64>,
    deriv: Vec<Complex64>,
}

impl Stepper {
    fn new(grid: &Arc<Grid>, lambda: f64, k: f64, dt: f64) -> Self {
        let n = grid.nx();
        Self {
            grid: Arc::clone(grid),
            lambda,
            k,
            e_full: grid.propagator_multiplier(dt).as_slice().to_vec(),
            e_half: grid.propagator_multiplier(dt / 2.0).as_slice().to_vec(),
            mask: grid.dealias_mask().as_slice().to_vec(),
            ik: grid.derivative_multiplier(1).as_slice().to_vec(),
            phys: vec![Complex64::new(0.0, 0.0); n],
            deriv: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Writes `N(û)` into `out` and returns `sup |u|` for the guard.
    fn nonlinear(&mut self, uh: &[Complex64], out: &mut [Complex64]) -> f64 {
        if self.lambda == 0.0 {
            out.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            self.phys.copy_from_slice(uh);
            self.grid.fft_inverse(&mut self.phys);
            return self.phys.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        self.phys.copy_from_slice(uh);
        self.grid.fft_inverse(&mut self.phys);
        for ((d, a), m) in self.deriv.iter_mut().zip(uh).zip(&self.ik) {
            *d = a * m;
        }
        self.grid.fft_inverse(&mut self.deriv);
        let mut sup: f64 = 0.0;
        for ((o, u), ux) in out.iter_mut().zip(&self.phys).zip(&self.deriv) {
            sup = sup.max(u.norm());
            *o = ux * modulus_power(*u, self.k);
        }
        self.grid.fft_forward(out);
        let c = -self.lambda;
        for (o, m) in out.iter_mut().zip(&self.mask) {
            *o *= m * c;
        }
        sup
    }

    fn step(&mut self, uh: &mut [Complex64], h: f64, scratch: &mut RkScratch) -> f64 {
        let RkScratch { k1, k2, k3, k4, tmp } = scratch;
        let sup = self.nonlinear(uh, k1);
        for i in 0..uh.len() {
            tmp[i] = self.e_half[i] * (uh[i] + 0.5 * h * k1[i]);
        }
        self.nonlinear(tmp, k2);
        for i in 0..uh.len() {
            tmp[i] = self.e_half[i] * uh[i] + 0.5 * h * k2[i];
        }
        self.nonlinear(tmp, k3);
        for i in 0..uh.len() {
            tmp[i] = self.e_full[i] * uh[i] + h * self.e_half[i] * k3[i];
        }
        self.nonlinear(tmp, k4);
        for i in 0..uh.len() {
            uh[i] = self.e_full[i] * uh[i]
                + h / 6.0
                    * (self.e_full[i] * k1[i] + 2.0 * self.e_half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        sup
    }
}

struct RkScratch {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl RkScratch {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }
}

/// Integrates the equation from `u0` over `[0, spec.horizon]` with step
/// `spec.dt`, storing every `store_every`-th level plus `t = 0` and `t = T`.
pub fn solve(u0: &Field, lambda: f64, k: f64, spec: &GridSpec, store_every: usize) -> Result<Trajectory> {
    spec.validate()?;
    let grid = u0.grid();
    if grid.nx() != spec.nx || grid.length() != spec.length {
        return Err(LabError::GridMismatch);
    }
    if !lambda.is_finite() || !(k.is_finite() && k >= 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "need finite λ and k >= 0, got λ = {lambda}, k = {k}"
        )));
    }
    if store_every == 0 {
        return Err(LabError::InvalidParameter("store_every must be >= 1".into()));
    }
    if !u0.is_finite() {
        return Err(LabError::NonFiniteValue("solve: initial data"));
    }
    initial::check_edge_decay(u0, spec.edge_tol)?;
    let stiffness = spec.dt * spec.nyquist_frequency().powi(2);
    if stiffness > CFL_LIMIT {
        return Err(LabError::StepTooLarge {
            value: stiffness,
            limit: CFL_LIMIT,
        });
    }

    let n = grid.nx();
    let steps = spec.steps();
    let mut uh = grid.raw_spectrum(u0.values());
    uh[grid.nyquist_slot()] = Complex64::new(0.0, 0.0);

    let mut stepper = Stepper::new(grid, lambda, k, spec.dt);
    let mut scratch = RkScratch::new(n);
    let levels = steps / store_every + 2;
    let mut times = Vec::with_capacity(levels);
    let mut values = Vec::with_capacity(levels * n);
    let store = |uh: &[Complex64], values: &mut Vec<Complex64>| {
        let mut buf = uh.to_vec();
        grid.fft_inverse(&mut buf);
        values.extend_from_slice(&buf);
    };
    times.push(0.0);
    store(&uh, &mut values);

    let sup0 = u0.sup_norm();
    let limit = BLOWUP_FACTOR * sup0;
    for s in 1..=steps {
        let sup = stepper.step(&mut uh, spec.dt, &mut scratch);
        let t = s as f64 * spec.dt;
        if !sup.is_finite() || !all_finite(&uh) {
            return Err(LabError::NonFiniteValue("solve"));
        }
        if sup0 > 0.0 && sup > limit {
            return Err(LabError::BlowupDetected { t, sup });
        }
        if s % store_every == 0 || s == steps {
            times.push(t);
            store(&uh, &mut values);
        }
    }
    if let Some(last) = values.chunks(n).last() {
        let sup = last.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if sup0 > 0.0 && sup > limit {
            return Err(LabError::BlowupDetected { t: spec.horizon, sup });
        }
    }
    Ok(Trajectory {
        data: SpacetimeField::new(Arc::clone(grid), times, values)?,
        lambda,
        k,
        scheme: SchemeInfo {
            dt: spec.dt,
            dealias_fraction: spec.dealias_fraction,
            steps,
            store_every,
        },
    })
}

/// `S(t) φ` at the trajectory-style levels `0, h, …, T`.
pub fn free_evolution(phi: &Field, times: Vec<f64>) -> SpacetimeField {
    SpacetimeField::free_evolution(phi, times)
}

/// `D(t_n) = ∫_0^{t_n} S(t_n − τ) f(τ) dτ` by the trapezoid rule over the
/// stored levels, evaluated in the interaction picture.
pub fn duhamel_integral(forcing: &SpacetimeField) -> SpacetimeField {
    let grid = forcing.grid();
    let n = grid.nx();
    let times = forcing.times();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut prev: Option<Vec<Complex64>> = None;
    let mut values = Vec::with_capacity(forcing.values().len());
    for (level, slice) in forcing.slices().enumerate() {
        let t = times[level];
        let back = grid.propagator_multiplier(-t);
        let mut g = grid.raw_spectrum(slice);
        for (a, b) in g.iter_mut().zip(back.as_slice()) {
            *a *= b;
        }
        if let Some(p) = prev.as_ref() {
            let h = t - times[level - 1];
            for ((a, x), y) in acc.iter_mut().zip(p).zip(&g) {
                *a += 0.5 * h * (x + y);
            }
        }
        let fwd = grid.propagator_multiplier(t);
        let mut out: Vec<Complex64> = acc.iter().zip(fwd.as_slice()).map(|(a, b)| a * b).collect();
        grid.fft_inverse(&mut out);
        values.extend(out);
        prev = Some(g);
    }
    SpacetimeField::new(Arc::clone(grid), times.to_vec(), values)
        .expect("finite forcing gives finite integral")
}

/// Relative `L²` distance between final levels of two trajectories on the same grid.
pub fn final_difference(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    let fa = a.last();
    let fb = b.last();
    let diff = fa.sub(&fb)?.l2_norm();
    let scale = fb.l2_norm();
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

/// Result of a three-level temporal self-convergence study.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub dts: [f64; 3],
    /// `‖u_{dt} − u_{dt/2}‖` and `‖u_{dt/2} − u_{dt/4}‖`, relative, at the final time.
    pub differences: [f64; 2],
    pub order: f64,
    pub drifts: [f64; 3],
}

/// Runs the solver at three step sizes (same spatial grid) and reports
/// `log2` of the ratio of successive differences.
pub fn self_convergence(
    u0: &Field,
    lambda: f64,
    k: f64,
    spec: &GridSpec,
    dts: [f64; 3],
) -> Result<ConvergenceStudy> {
    use rayon::prelude::*;
    let runs: Vec<Trajectory> = dts
        .par_iter()
        .map(|&dt| {
            let s = GridSpec { dt, ..*spec };
            let steps = s.steps();
            solve(u0, lambda, k, &s, steps)
        })
        .collect::<Result<_>>()?;
    let d0 = final_difference(&runs[0], &runs[1])?;
    let d1 = final_difference(&runs[1], &runs[2])?;
    let ratio = dts[0] / dts[1];
    Ok(ConvergenceStudy {
        dts,
        differences: [d0, d1],
        order: (d0 / d1).ln() / ratio.ln(),
        drifts: [
            runs[0].relative_mass_drift(),
            runs[1].relative_mass_drift(),
            runs[2].relative_mass_drift(),
        ],
    })
}

/// Evolves to `T`, then integrates `v(t) = conj(u(T − t))`, which solves the
/// same equation with `−λ`, back to `t = T`; returns `‖conj v(T) − u_0‖ / ‖u_0‖`.
pub fn time_reversal_defect(u0: &Field, lambda: f64, k: f64, spec: &GridSpec) -> Result<f64> {
    let steps = spec.steps();
    let forward = solve(u0, lambda, k, spec, steps)?;
    let reversed = forward.last().conj();
    let back = solve(&reversed, -lambda, k, spec, steps)?;
    let recovered = back.last().conj();
    let err = recovered.sub(u0)?.l2_norm();
    let scale = u0.l2_norm();
    Ok(if scale == 0.0 { err } else { err / scale })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(nx: usize, length: f64, dt: f64, horizon: f64) -> (Arc<Grid>, GridSpec) {
        let spec = GridSpec::new(nx, length, dt, horizon).unwrap();
        (Grid::new(spec).unwrap(), spec)
    }

    #[test]
    fn zero_data_stays_zero() {
        let (g, spec) = setup(128, 40.0, 1e-3, 0.01);
        let u0 = Field::zeros(Arc::clone(&g));
        let tr = solve(&u0, 1.0, 5.0, &spec, 1).unwrap();
        assert_eq!(tr.data.levels(), 11);
        assert!(tr.data.values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn linear_flow_matches_propagator() {
        let (g, spec) = setup(256, 40.0, 1e-3, 0.05);
        let u0 = InitialData::gaussian(0.5, 2.0).build(&g).unwrap();
        let tr = solve(&u0, 0.0, 5.0, &spec, 10).unwrap();
        for (i, &t) in tr.data.times().iter().enumerate() {
            let exact = u0.propagate(t);
            let err = tr.data.field(i).sub(&exact).unwrap().l2_norm();
            assert!(err <= 1e-10, "t = {t}: {err}");
        }
    }

    #[test]
    fn stores_endpoints() {
        let (g, spec) = setup(64, 40.0, 1e-3, 0.007);
        let u0 = InitialData::gaussian(0.5, 2.0).build(&g).unwrap();
        let tr = solve(&u0, 1.0, 5.0, &spec, 3).unwrap();
        let t = tr.data.times();
        assert_eq!(t.len(), 4);
        assert!((t[3] - 0.007).abs() < 1e-15);
    }

    #[test]
    fn rejects_stiff_step_and_wide_data() {
        let (g, _) = setup(2048, 10.0, 0.1, 1.0);
        let u0 = InitialData::gaussian(0.5, 0.5).build(&g).unwrap();
        assert!(matches!(
            solve(&u0, 1.0, 5.0, g.spec(), 1),
            Err(LabError::StepTooLarge { .. })
        ));
        let (g, spec) = setup(128, 10.0, 1e-3, 0.01);
        let wide = Field::from_fn(Arc::clone(&g), |_| Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(
            solve(&wide, 1.0, 5.0, &spec, 1),
            Err(LabError::EdgeDecayViolation { .. })
        ));
    }

    #[test]
    fn duhamel_of_free_forcing_telescopes() {
        // f(τ) = S(τ)φ gives ∫_0^t S(t−τ)S(τ)φ dτ = t S(t)φ, exact under the trapezoid rule
        let (g, _) = setup(128, 40.0, 1e-3, 0.1);
        let phi = InitialData::modulated(1.0, 2.0, 1.0).build(&g).unwrap();
        let times = SpacetimeField::uniform_times(0.1, 20);
        let f = free_evolution(&phi, times.clone());
        let d = duhamel_integral(&f);
        for (i, &t) in times.iter().enumerate() {
            let expect = phi.propagate(t).scale(Complex64::new(t, 0.0));
            assert!(d.field(i).sub(&expect).unwrap().sup_norm() < 1e-13);
        }
    }

    #[test]
    fn mass_of_constant() {
        let (g, _) = setup(64, 7.0, 1e-3, 0.01);
        let c = Field::from_fn(Arc::clone(&g), |_| Complex64::new(3.0, 0.0)).unwrap();
        assert!((mass(&c) - 63.0).abs() < 1e-12);
    }
}
