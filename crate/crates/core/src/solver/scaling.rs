//! The scaling `u ↦ γ^{−1/k} u(t/γ², x/γ)` at `t = 0` and the low/high split of data.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::littlewood_paley::{Relation, WindowFamily, WindowProfile};
use crate::norms::sobolev_norm;
use crate::spectral::{Field, Grid, GridSpec};

/// Relative spectral energy above the dealiasing band tolerated by [`scale_onto`].
pub const UNRESOLVED_TAIL: f64 = 1e-10;

fn check_gamma(gamma: f64, k: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma >= 1.0) {
        return Err(LabError::InvalidParameter(format!("γ = {gamma} must be >= 1")));
    }
    if !(k.is_finite() && k > 0.0) {
        return Err(LabError::InvalidParameter(format!("k = {k} must be positive")));
    }
    Ok(())
}

/// `γ^{−1/k} u_0(x/γ)` on a grid with the same `nx` over a domain of length `γL`.
///
/// Grid points map onto grid points, so the samples are exactly
/// `γ^{−1/k} u_0(x_j)` and the norm identities hold to round-off.
pub fn scale(u0: &Field, gamma: f64, k: f64) -> Result<Field> {
    check_gamma(gamma, k)?;
    let spec = u0.grid().spec();
    let stretched = GridSpec {
        length: gamma * spec.length,
        ..*spec
    };
    let grid = Grid::new(stretched)?;
    let c = gamma.powf(-1.0 / k);
    Field::new(grid, u0.values().iter().map(|z| z * c).collect())
}

/// Rescaled data evaluated on an arbitrary `target` grid by exact Fourier
/// interpolation of `u_0` (zero outside its domain).
pub fn scale_onto(u0: &Field, gamma: f64, k: f64, target: &Arc<Grid>) -> Result<Field> {
    check_gamma(gamma, k)?;
    let src = u0.grid();
    let spectrum = u0.analyze();
    let modes: Vec<(f64, Complex64)> = src
        .xi()
        .iter()
        .zip(spectrum.coeffs())
        .enumerate()
        .filter(|(i, _)| *i != src.nyquist_slot())
        .map(|(_, (&xi, &c))| (xi, c))
        .filter(|(_, c)| c.norm() > 0.0)
        .collect();
    let half = src.length() / 2.0;
    let amp = gamma.powf(-1.0 / k);
    let values = target
        .x()
        .iter()
        .map(|&x| {
            let y = x / gamma;
            if y < -half || y >= half {
                return Complex64::new(0.0, 0.0);
            }
            amp * modes
                .iter()
                .map(|&(xi, c)| c * Complex64::from_polar(1.0, xi * y))
                .sum::<Complex64>()
        })
        .collect();
    let out = Field::new(Arc::clone(target), values)?;

    let s = out.analyze();
    let cutoff = target.spec().dealias_fraction * target.nx() as f64 / 2.0;
    let (mut total, mut tail) = (0.0, 0.0);
    for (i, c) in s.coeffs().iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        if (target.spec().mode(i).abs() as f64) > cutoff {
            tail += e;
        }
    }
    let edge = out.values()[0].norm().max(out.values()[target.nx() - 1].norm());
    let peak = out.sup_norm();
    let mut frac = if total > 0.0 { tail / total } else { 0.0 };
    if peak > 0.0 && edge > target.spec().edge_tol {
        frac = frac.max(edge / peak);
    }
    if frac > UNRESOLVED_TAIL {
        return Err(LabError::TargetGridUnresolved { tail: frac });
    }
    Ok(out)
}

/// `‖P_{≲1} φ‖_{L²}`, `‖P_{≫1} φ‖_{H^{1/2}}` and the weighted sum
/// `low/C_low + high/C_high`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencySplit {
    pub low: f64,
    pub high: f64,
    pub tilde: f64,
}

pub fn frequency_split_norms(
    u0: &Field,
    windows: &WindowFamily,
    c_low: f64,
    c_high: f64,
) -> Result<FrequencySplit> {
    if !(c_low > 0.0 && c_high > 0.0) {
        return Err(LabError::InvalidParameter(format!(
            "C_low = {c_low} and C_high = {c_high} must be positive"
        )));
    }
    let low = windows.project_region(u0, Relation::Lesssim, 1.0)?.l2_norm();
    let high_part = windows.project_region(u0, Relation::MuchGreater, 1.0)?;
    let high = sobolev_norm(&high_part, 0.5, false)?;
    Ok(FrequencySplit {
        low,
        high,
        tilde: low / c_low + high / c_high,
    })
}

/// Outcome of the γ search: rescaled data with `‖P_{≫1} u_{0,γ}‖_{H^{1/2}} ≤ C_high`
/// and `C_low = γ^{1/2 − 1/k} ‖u_0‖_{L²}`.
#[derive(Clone, Debug)]
pub struct ScalingChoice {
    pub gamma: f64,
    pub data: Field,
    pub c_low: f64,
    pub c_high: f64,
    pub split: FrequencySplit,
}

/// Tries `γ = 1, 2, 4, …, max_gamma` until the high part of the rescaled data
/// drops below `c_high`.
pub fn search_scaling(u0: &Field, k: f64, c_high: f64, max_gamma: f64) -> Result<ScalingChoice> {
    if !(c_high > 0.0) {
        return Err(LabError::InvalidParameter(format!("C_high = {c_high} must be positive")));
    }
    let mass_norm = u0.l2_norm();
    let mut gamma = 1.0;
    while gamma <= max_gamma {
        let data = scale(u0, gamma, k)?;
        let windows = WindowFamily::build(data.grid(), WindowProfile::SmoothBump)?;
        let c_low = (gamma.powf(0.5 - 1.0 / k) * mass_norm).max(f64::MIN_POSITIVE);
        let split = frequency_split_norms(&data, &windows, c_low, c_high)?;
        if split.high <= c_high {
            return Ok(ScalingChoice {
                gamma,
                data,
                c_low,
                c_high,
                split,
            });
        }
        gamma *= 2.0;
    }
    Err(LabError::HypothesisViolated(format!(
        "no γ <= {max_gamma} brings the high-frequency part below C_high = {c_high}"
    )))
}
