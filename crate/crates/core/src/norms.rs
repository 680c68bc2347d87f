//! Sobolev norms, mixed Lebesgue norms on stored trajectories, and the composite
//! resolution norms `X_T` and `Y_T`.
//!
//! Quadrature: trapezoid over the stored time levels, uniform Riemann sum in
//! space, and the grid maximum for `L^∞` in either variable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::littlewood_paley::{DyadicIndex, WindowFamily};
use crate::spectral::{lp_norm, DerivativeKind, Field, Grid, Multiplier, SpacetimeField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormOrder {
    /// `L_T^q L_x^p`: space inside, time outside.
    TimeOuter,
    /// `L_x^p L_T^q`: time inside, space outside.
    SpaceOuter,
}

/// Exponents and nesting order of a mixed norm; `f64::INFINITY` stands for ∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub p_space: f64,
    pub q_time: f64,
    pub order: NormOrder,
}

impl MixedNormSpec {
    pub fn new(p_space: f64, q_time: f64, order: NormOrder) -> Result<Self> {
        for (name, v) in [("p", p_space), ("q", q_time)] {
            if v.is_nan() || v < 1.0 {
                return Err(LabError::InvalidParameter(format!(
                    "exponent {name} = {v} must lie in [1, ∞]"
                )));
            }
        }
        Ok(Self {
            p_space,
            q_time,
            order,
        })
    }

    /// `L_T^q L_x^p`.
    pub fn time_outer(p_space: f64, q_time: f64) -> Result<Self> {
        Self::new(p_space, q_time, NormOrder::TimeOuter)
    }

    /// `L_x^p L_T^q`.
    pub fn space_outer(p_space: f64, q_time: f64) -> Result<Self> {
        Self::new(p_space, q_time, NormOrder::SpaceOuter)
    }
}

/// Trapezoid weights for possibly non-uniform levels; a single level gets weight 0.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        w[i - 1] += 0.5 * h;
        w[i] += 0.5 * h;
    }
    w
}

/// Weighted `L^q` of nonnegative samples, `q = ∞` as the maximum.
fn weighted_lq(values: &[f64], weights: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else if q == 2.0 {
        values
            .iter()
            .zip(weights)
            .map(|(a, w)| w * a * a)
            .sum::<f64>()
            .sqrt()
    } else {
        values
            .iter()
            .zip(weights)
            .map(|(a, w)| w * a.powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// `L^q_T` of a scalar time series sampled at `times`.
pub fn time_norm(values: &[f64], times: &[f64], q: f64) -> f64 {
    weighted_lq(values, &trapezoid_weights(times), q)
}

/// `‖f‖_{H^s}` or `‖f‖_{Ḣ^s}` from the spectrum (Nyquist mode excluded).
pub fn sobolev_norm(f: &Field, s: f64, homogeneous: bool) -> Result<f64> {
    let kind = if homogeneous {
        DerivativeKind::Homogeneous
    } else {
        DerivativeKind::Inhomogeneous
    };
    // the derivative call carries the zero-mean precondition
    if homogeneous && s < 0.0 {
        f.fractional_derivative(s, kind)?;
    }
    let weight = f.grid().fractional_multiplier(s, kind);
    Ok(weighted_spectral_l2(f.grid(), f.values(), &weight))
}

/// `‖m(D) f‖_{L²}` evaluated in frequency.
fn weighted_spectral_l2(grid: &Grid, values: &[Complex64], weight: &Multiplier) -> f64 {
    let raw = grid.raw_spectrum(values);
    let n = grid.nx() as f64;
    let s: f64 = raw
        .iter()
        .zip(weight.as_slice())
        .map(|(a, w)| (a * w).norm_sqr())
        .sum();
    (s * grid.length() / (n * n)).sqrt()
}

/// Mixed Lebesgue norm of a stored trajectory.
pub fn mixed_norm(u: &SpacetimeField, spec: &MixedNormSpec) -> f64 {
    let dx = u.grid().dx();
    let weights = trapezoid_weights(u.times());
    match spec.order {
        NormOrder::TimeOuter => {
            let inner: Vec<f64> = u.slices().map(|s| lp_norm(s, spec.p_space, dx)).collect();
            weighted_lq(&inner, &weights, spec.q_time)
        }
        NormOrder::SpaceOuter => {
            let nx = u.grid().nx();
            let levels = u.levels();
            let values = u.values();
            let mut column = vec![0.0; levels];
            let mut inner = Vec::with_capacity(nx);
            for j in 0..nx {
                for (n, c) in column.iter_mut().enumerate() {
                    *c = values[n * nx + j].norm();
                }
                inner.push(weighted_lq(&column, &weights, spec.q_time));
            }
            real_lp(&inner, spec.p_space, dx)
        }
    }
}

fn real_lp(values: &[f64], p: f64, dx: f64) -> f64 {
    if p.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        (values.iter().map(|a| a.powf(p)).sum::<f64>() * dx).powf(1.0 / p)
    }
}

/// The four pieces of `X_T` (or `Y_T`) and their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct XtNormBreakdown {
    /// `‖u‖_{L_T^∞ H^{1/2}}`.
    pub sup_sobolev: f64,
    /// `‖∂_x ·‖_{L_x^∞ L_T^2}` piece.
    pub smoothing: f64,
    /// `‖·‖_{L_x^2 L_T^∞}` piece.
    pub maximal_l2: f64,
    /// `‖⟨D_x⟩^{1/4} ·‖_{L_x^4 L_T^∞}` piece.
    pub maximal_l4: f64,
    pub total: f64,
}

impl XtNormBreakdown {
    fn from_pieces(sup_sobolev: f64, smoothing: f64, maximal_l2: f64, maximal_l4: f64) -> Self {
        Self {
            sup_sobolev,
            smoothing,
            maximal_l2,
            maximal_l4,
            total: sup_sobolev + smoothing + maximal_l2 + maximal_l4,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_pieces(
            c * self.sup_sobolev,
            c * self.smoothing,
            c * self.maximal_l2,
            c * self.maximal_l4,
        )
    }
}

/// `Y_T` has the same four pieces without dyadic sums.
pub type YtNormBreakdown = XtNormBreakdown;

fn sup_h_half(u: &SpacetimeField) -> f64 {
    let grid = u.grid();
    let weight = grid.fractional_multiplier(0.5, DerivativeKind::Inhomogeneous);
    u.spectra()
        .level_l2_norms(&weight)
        .into_iter()
        .fold(0.0, f64::max)
}

/// `X_T` norm with ℓ² sums over the usable dyadic blocks; `include_low`
/// decides whether the low block enters the sums.
pub fn xt_norm(
    u: &SpacetimeField,
    windows: &WindowFamily,
    include_low: bool,
) -> Result<XtNormBreakdown> {
    if !windows.grid().same_as(u.grid()) {
        return Err(LabError::GridMismatch);
    }
    let grid = u.grid();
    let spectra = u.spectra();
    let dx_mult = grid.derivative_multiplier(1);
    let quarter = grid.fractional_multiplier(0.25, DerivativeKind::Inhomogeneous);
    let smoothing_spec = MixedNormSpec::space_outer(f64::INFINITY, 2.0)?;
    let max2_spec = MixedNormSpec::space_outer(2.0, f64::INFINITY)?;
    let max4_spec = MixedNormSpec::space_outer(4.0, f64::INFINITY)?;

    let (mut s2, mut m2, mut q2) = (0.0, 0.0, 0.0);
    for idx in windows.indices() {
        if idx == DyadicIndex::Low && !include_low {
            continue;
        }
        let block = windows.multiplier(idx)?;
        let a = mixed_norm(&spectra.synthesize(&block.then(&dx_mult)), &smoothing_spec);
        let b = mixed_norm(&spectra.synthesize(block), &max2_spec);
        let c = mixed_norm(&spectra.synthesize(&block.then(&quarter)), &max4_spec);
        s2 += a * a;
        m2 += b * b;
        q2 += c * c;
    }
    Ok(XtNormBreakdown::from_pieces(
        sup_h_half(u),
        s2.sqrt(),
        m2.sqrt(),
        q2.sqrt(),
    ))
}

/// `Y_T` norm pieces of a field.
pub fn yt_norm_breakdown(v: &SpacetimeField) -> YtNormBreakdown {
    let grid = v.grid();
    let spectra = v.spectra();
    let smoothing = mixed_norm(
        &spectra.synthesize(&grid.derivative_multiplier(1)),
        &MixedNormSpec {
            p_space: f64::INFINITY,
            q_time: 2.0,
            order: NormOrder::SpaceOuter,
        },
    );
    let maximal_l2 = mixed_norm(
        v,
        &MixedNormSpec {
            p_space: 2.0,
            q_time: f64::INFINITY,
            order: NormOrder::SpaceOuter,
        },
    );
    let maximal_l4 = mixed_norm(
        &spectra.synthesize(&grid.fractional_multiplier(0.25, DerivativeKind::Inhomogeneous)),
        &MixedNormSpec {
            p_space: 4.0,
            q_time: f64::INFINITY,
            order: NormOrder::SpaceOuter,
        },
    );
    XtNormBreakdown::from_pieces(sup_h_half(v), smoothing, maximal_l2, maximal_l4)
}

pub fn yt_norm(v: &SpacetimeField) -> f64 {
    yt_norm_breakdown(v).total
}
