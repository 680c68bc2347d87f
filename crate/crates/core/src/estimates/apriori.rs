//! Data gauge estimate and the a priori bound on rescaled small data.

use super::{ladder, single, Check, EstimateReport, FamilyMember, Physics, Sample, Suite, SuiteGrid, TestFamily};
use crate::error::{LabError, Result};
use crate::gauge::{gauge_phase, gauge_transform};
use crate::littlewood_paley::WindowFamily;
use crate::norms::{sobolev_norm, xt_norm, yt_norm, XtNormBreakdown};
use crate::solver::{scale, search_scaling, solve};
use crate::spectral::{DerivativeKind, Field, SpacetimeField};

/// `(Σ_{N≫1} ‖S(t)(E_N P_N u_0)‖²_{Y_T})^{1/2}` and `(1 + ‖u_0‖^k_{H^{1/2}}) ‖P_{≫1}u_0‖_{H^{1/2}}`.
fn data_gauge_sample(u0: &Field, times: &[f64], suite: &Suite, physics: &Physics, windows: &WindowFamily) -> Result<Sample> {
    let mut lhs = 0.0;
    for band in suite.high_bands(windows) {
        let params = physics.gauge_params(band)?;
        let v0 = gauge_phase(u0, &params, windows)?.mul(&windows.project(u0, band)?)?;
        lhs += yt_norm(&SpacetimeField::free_evolution(&v0, times.to_vec())).powi(2);
    }
    let high = u0.apply_multiplier(&suite.high_multiplier(windows)?);
    let rhs = (1.0 + sobolev_norm(u0, 0.5, false)?.powf(physics.k)) * sobolev_norm(&high, 0.5, false)?;
    Ok(Sample::new(lhs.sqrt(), rhs))
}

/// Data gauge estimate over a family of initial data.
pub fn verify_data_gauge(suite: &Suite, family: &TestFamily, physics: Physics) -> Result<EstimateReport> {
    physics.validate()?;
    let reports = ladder(suite, &["data_gauge".to_string()], &family.members(), |g, m| {
        let u0 = m.data.build(&g.grid()?)?;
        let windows = suite.windows(u0.grid())?;
        Ok(vec![data_gauge_sample(&u0, &g.times(), suite, &physics, &windows)?])
    })?;
    Ok(single(reports))
}

/// Largest `γ` tried when shrinking the high-frequency part of the data.
const MAX_GAMMA: f64 = 1024.0;

/// Rescales the member's data (`γ` from the doubling search on the base
/// resolution, reused on every rung) and evolves it.
fn rescaled_run(
    m: &FamilyMember,
    g: &SuiteGrid,
    base: &SuiteGrid,
    physics: &Physics,
    c_high: f64,
) -> Result<(Field, SpacetimeField, f64, f64)> {
    let choice = search_scaling(&m.data.build(&base.grid()?)?, physics.k, c_high, MAX_GAMMA)?;
    if choice.split.tilde > 2.0 {
        return Err(LabError::HypothesisViolated(format!(
            "rescaled data has tilde norm {} > 2",
            choice.split.tilde
        )));
    }
    let u0 = scale(&m.data.build(&g.grid()?)?, choice.gamma, physics.k)?;
    let spec = crate::spectral::GridSpec {
        length: u0.grid().length(),
        ..g.spec()?
    };
    let traj = solve(&u0, physics.lambda, physics.k, &spec, g.store_every)?;
    Ok((u0, traj.data, choice.c_low, choice.c_high))
}

/// Lemmas of the a priori argument on `γ`-rescaled data, with the corollary
/// `‖u‖_{X̃_T} ≲ C_low + C_high` as the headline ratio.
///
/// Sub-reports: the low-frequency bound `‖P_{≲1}u‖_{X_T} ≲ C_low + T^{1/2}‖u‖^{k+1}_{X_T}`,
/// the high-frequency bound through the gauged blocks, the data gauge
/// estimate, and the bootstrap inequality with constants 1.
pub fn verify_apriori(suite: &Suite, family: &TestFamily, physics: Physics, c_high: f64) -> Result<EstimateReport> {
    physics.validate()?;
    if !(c_high > 0.0) {
        return Err(LabError::InvalidParameter(format!("C_high = {c_high} must be positive")));
    }
    let t = suite.grid.horizon;
    if !(t > 0.0 && t <= c_high.powi(4)) {
        return Err(LabError::HypothesisViolated(format!(
            "T = {t} must satisfy 0 < T <= C_high^4 = {}",
            c_high.powi(4)
        )));
    }
    let ids: Vec<String> = [
        "apriori_corollary",
        "low_frequency_bound",
        "high_frequency_bound",
        "data_gauge_rescaled",
        "apriori_inequality",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let base = suite.grid;
    let k = physics.k;
    let mut reports = ladder(suite, &ids, &family.members(), |g, m| {
        let (u0, u, c_low, c_high) = rescaled_run(m, g, &base, &physics, c_high)?;
        let grid = u.grid();
        let windows = suite.windows(grid)?;
        let x_full: XtNormBreakdown = xt_norm(&u, &windows, suite.include_low)?;
        let low = xt_norm(&u.apply_multiplier(&suite.low_multiplier(&windows)?), &windows, suite.include_low)?.total;
        let high = xt_norm(&u.apply_multiplier(&suite.high_multiplier(&windows)?), &windows, suite.include_low)?.total;
        let x = x_full.total;
        let tilde = low / c_low + high / c_high;
        let t = u.horizon();

        let mut gauged = 0.0;
        for band in suite.high_bands(&windows) {
            gauged += yt_norm(&gauge_transform(&u, &physics.gauge_params(band)?, &windows)?).powi(2);
        }
        let weight = grid.fractional_multiplier(0.5, DerivativeKind::Inhomogeneous);
        let sup_half = u.spectra().level_l2_norms(&weight).into_iter().fold(0.0, f64::max);

        Ok(vec![
            Sample::new(tilde, c_low + c_high),
            Sample::new(low, c_low + t.sqrt() * x.powf(k + 1.0)),
            Sample::new(high, (1.0 + sup_half.powf(2.0 * k)) * gauged.sqrt()),
            data_gauge_sample(&u0, u.times(), suite, &physics, &windows)?,
            Sample::new(tilde, 1.0 + (c_low + tilde).powf(3.0 * k) * (t.powf(0.25) + c_high) * tilde),
        ])
    })?;
    let subs = reports.split_off(1);
    let head = single(reports);
    let c_corr = head.max_ratio;
    Ok(head
        .with_sub_reports(subs)
        .with_check(Check::at_most("corollary_constant", c_corr, f64::INFINITY)))
}
