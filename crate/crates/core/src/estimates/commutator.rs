//! Commutator of `P_N` with multiplication by a smooth function.
//!
//! Writing `P_N g = φ̌_N * g` and `f(x−y) − f(x) = −y ∫_0^1 f_x(x−ηy) dη`,
//!
//! ```text
//! P_N(fg)(x) − f(x) P_N g(x) = −∫_0^1 ∫ φ̌_N(y) y f_x(x−ηy) g(x−y) dy dη.
//! ```
//!
//! The identity check evaluates the right side by direct quadrature (closed-form
//! `f`, `g`; kernel by quadrature of the window) and compares with the spectral
//! left side. The bound check is `N ‖[P_N, f] g‖_{L¹} / (‖f_x‖_{L²} ‖g‖_{L²})`;
//! `f` and `g` are time-independent, so the `L²_T`/`L^∞_T` factors of the
//! space-time version cancel.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ladder, single, Check, EstimateReport, FamilyMember, Sample, Suite, TestFamily};
use crate::error::{LabError, Result};
use crate::littlewood_paley::{DyadicIndex, WindowProfile};
use crate::spectral::{Field, Grid};

/// Five-point Gauss–Legendre rule on `[−1, 1]`.
const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Discretisation of the double integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Number of comparison points (a coarse sub-grid around the envelope).
    pub x_points: usize,
    /// Gauss–Legendre panels on `η ∈ [0, 1]` (five nodes each).
    pub eta_panels: usize,
    /// Kernel truncation `|y| ≤ extent / N`.
    pub kernel_extent: f64,
    /// Kernel step `h_y = step / N`.
    pub kernel_step: f64,
    /// Trapezoid nodes for `φ̌_1(s) = (1/π) ∫_0^4 φ(ξ) cos(ξs) dξ`.
    pub xi_nodes: usize,
    /// Maximal number of integrand evaluations.
    pub budget: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            x_points: 16,
            eta_panels: 8,
            kernel_extent: 400.0,
            kernel_step: 0.25,
            xi_nodes: 4096,
            budget: 50_000_000,
        }
    }
}

impl QuadratureConfig {
    fn kernel_points(&self) -> usize {
        2 * (self.kernel_extent / self.kernel_step).ceil() as usize + 1
    }

    pub fn points(&self) -> usize {
        self.x_points * self.eta_panels * GL5.len() * self.kernel_points()
    }
}

/// `s_j` and `φ̌_1(s_j)` on the uniform kernel grid.
fn unit_kernel(profile: WindowProfile, cfg: &QuadratureConfig) -> Vec<(f64, f64)> {
    let m = cfg.xi_nodes;
    let h = 4.0 / m as f64;
    let weights: Vec<(f64, f64)> = (0..=m)
        .map(|i| {
            let xi = i as f64 * h;
            let w = if i == 0 || i == m { 0.5 * h } else { h };
            (xi, w * profile.phi(xi))
        })
        .filter(|(_, w)| *w != 0.0)
        .collect();
    let half = (cfg.kernel_points() - 1) / 2;
    (0..cfg.kernel_points())
        .into_par_iter()
        .map(|j| {
            let s = (j as f64 - half as f64) * cfg.kernel_step;
            let v: f64 = weights.iter().map(|(xi, w)| w * (xi * s).cos()).sum();
            (s, v / PI)
        })
        .collect()
}

/// `f(x) = a e^{−((x−c)/w)²}` (real, low frequency) and
/// `g(x) = e^{−(x/W)²} e^{iκx}` with `W = 2w`, `κ = 1.5N` (frequency inside the band).
#[derive(Clone, Copy, Debug, PartialEq)]
struct Pair {
    a: f64,
    w: f64,
    c: f64,
    big_w: f64,
    kappa: f64,
}

impl Pair {
    fn from_member(m: &FamilyMember, band: f64) -> Result<Self> {
        let (a, w, c) = m
            .envelope()
            .ok_or_else(|| LabError::InvalidParameter("commutator members need a closed-form envelope".into()))?;
        Ok(Self {
            a,
            w,
            c,
            big_w: 2.0 * w,
            kappa: 1.5 * band,
        })
    }

    fn f(&self, x: f64) -> f64 {
        self.a * (-((x - self.c) / self.w).powi(2)).exp()
    }

    fn f_x(&self, x: f64) -> f64 {
        -2.0 * (x - self.c) / (self.w * self.w) * self.f(x)
    }

    fn g(&self, x: f64) -> Complex64 {
        Complex64::from_polar((-(x / self.big_w).powi(2)).exp(), self.kappa * x)
    }
}

/// Identity error and bound sample for one `(f, g)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorSample {
    /// `max |C(x) + Q(x)| / max |C|` over the comparison points.
    pub identity_error: f64,
    /// `‖[P_N, f] g‖_{L¹}` and `N^{−1} ‖f_x‖_{L²} ‖g‖_{L²}`.
    pub bound: Sample,
}

/// Evaluates both checks for the Gaussian pair built from `(a, w, c)`.
pub fn commutator_sample(
    grid: &Arc<Grid>,
    profile: WindowProfile,
    band: DyadicIndex,
    (a, w, c): (f64, f64, f64),
    cfg: &QuadratureConfig,
) -> Result<CommutatorSample> {
    let kernel = unit_kernel(profile, cfg);
    pair_sample(grid, profile, band, Pair { a, w, c, big_w: 2.0 * w, kappa: 1.5 * band.value() }, cfg, &kernel)
}

fn pair_sample(
    grid: &Arc<Grid>,
    profile: WindowProfile,
    band: DyadicIndex,
    pair: Pair,
    cfg: &QuadratureConfig,
    kernel: &[(f64, f64)],
) -> Result<CommutatorSample> {
    if cfg.points() > cfg.budget {
        return Err(LabError::QuadratureBudgetExceeded {
            points: cfg.points(),
            budget: cfg.budget,
        });
    }
    let n = band.value();
    if n < 1.0 {
        return Err(LabError::InvalidParameter("the commutator needs a dyadic band N >= 1".into()));
    }
    let windows = crate::littlewood_paley::WindowFamily::build(grid, profile)?;
    let f = Field::from_fn(Arc::clone(grid), |x| Complex64::new(pair.f(x), 0.0))?;
    let g = Field::from_fn(Arc::clone(grid), |x| pair.g(x))?;
    let fx = Field::from_fn(Arc::clone(grid), |x| Complex64::new(pair.f_x(x), 0.0))?;
    let commutator = windows.project(&f.mul(&g)?, band)?.sub(&f.mul(&windows.project(&g, band)?)?)?;

    let bound = Sample::new(commutator.lp_norm(1.0), fx.l2_norm() * g.l2_norm() / n);

    // comparison points: every k-th grid point within three widths of the envelope centre
    let xs = grid.x();
    let span = 3.0 * pair.w;
    let near: Vec<usize> = (0..grid.nx()).filter(|&j| (xs[j] - pair.c).abs() <= span).collect();
    let stride = (near.len() / cfg.x_points.max(1)).max(1);
    let points: Vec<usize> = near.into_iter().step_by(stride).take(cfg.x_points).collect();

    let h_y = cfg.kernel_step / n;
    let eta_nodes: Vec<(f64, f64)> = (0..cfg.eta_panels)
        .flat_map(|p| {
            let a = p as f64 / cfg.eta_panels as f64;
            let half = 0.5 / cfg.eta_panels as f64;
            GL5.iter().map(move |&(t, wt)| (a + half * (1.0 + t), half * wt))
        })
        .collect();
    let quad: Vec<Complex64> = points
        .par_iter()
        .map(|&j| {
            let x = xs[j];
            let mut acc = Complex64::new(0.0, 0.0);
            for &(s, k1) in kernel {
                let y = s / n;
                // φ̌_N(y) y = N φ̌_1(Ny) y
                let ky = n * k1 * y;
                let gy = pair.g(x - y);
                let inner: f64 = eta_nodes.iter().map(|&(eta, wt)| wt * pair.f_x(x - eta * y)).sum();
                acc += ky * inner * gy;
            }
            acc * h_y
        })
        .collect();
    let scale = commutator.sup_norm();
    let err = points
        .iter()
        .zip(&quad)
        .map(|(&j, q)| (commutator.values()[j] + q).norm())
        .fold(0.0, f64::max);
    Ok(CommutatorSample {
        identity_error: if scale > 0.0 { err / scale } else { err },
        bound,
    })
}

/// Identity tolerance of the quadrature comparison.
pub const IDENTITY_TOLERANCE: f64 = 1e-6;

/// Both commutator checks for one band over the family.
pub fn verify_commutator(
    suite: &Suite,
    family: &TestFamily,
    band: DyadicIndex,
    cfg: &QuadratureConfig,
) -> Result<EstimateReport> {
    let members = family.members();
    let kernel = unit_kernel(suite.profile, cfg);
    let worst = std::sync::Mutex::new(0.0f64);
    let id = format!("commutator_N{}", band);
    let report = single(ladder(suite, &[id], &members, |g, m| {
        let pair = Pair::from_member(m, band.value())?;
        let s = pair_sample(&g.grid()?, suite.profile, band, pair, cfg, &kernel)?;
        let mut w = worst.lock().expect("no panics while holding the lock");
        *w = w.max(s.identity_error);
        Ok(vec![s.bound])
    })?);
    let err = worst.into_inner().expect("lock is not poisoned");
    Ok(report.with_check(Check::at_most("identity_error", err, IDENTITY_TOLERANCE)))
}

/// Bound ratios over several bands; passes when every band passes and the
/// median ratio — `N ‖[P_N, f]g‖ / (‖f_x‖‖g‖)` — varies by at most a factor 2,
/// i.e. the commutator decays like `N^{−1}`.
pub fn commutator_scaling(
    suite: &Suite,
    family: &TestFamily,
    bands: &[DyadicIndex],
    cfg: &QuadratureConfig,
) -> Result<EstimateReport> {
    let subs: Vec<EstimateReport> = bands
        .iter()
        .map(|&b| verify_commutator(suite, family, b, cfg))
        .collect::<Result<_>>()?;
    let medians: Vec<f64> = subs.iter().map(|r| r.median_ratio).collect();
    let hi = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = medians.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    Ok(EstimateReport::composite(
        "commutator_scaling",
        subs,
        vec![Check::at_most("inverse_n_spread", spread, 2.0)],
    ))
}
