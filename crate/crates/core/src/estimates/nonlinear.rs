//! Bilinear and nonlinear estimates on solver trajectories.
//!
//! Right-hand sides are assembled from `X = ‖u‖_{X_T}`, `H = ‖P_{≫1}u‖_{X_T}`
//! and `T` exactly as displayed, with all implicit constants set to 1.

use serde::{Deserialize, Serialize};

use super::{ladder, single, EstimateReport, FamilyMember, Physics, Sample, Suite, SuiteGrid, TestFamily};
use crate::error::{LabError, Result};
use crate::gauge::gauge_terms;
use crate::littlewood_paley::{Relation, TildeWidth, WindowFamily};
use crate::norms::{mixed_norm, xt_norm, yt_norm, MixedNormSpec};
use crate::solver::{duhamel_integral, solve};
use crate::spectral::{modulus_power, SpacetimeField};

/// Largest integer strictly below `k`.
pub fn k_tilde(k: f64) -> f64 {
    if k.fract() == 0.0 {
        k - 1.0
    } else {
        k.floor()
    }
}

/// `X`, `H`, `T` and `k` of a trajectory, with the displayed bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearRhs {
    pub x: f64,
    pub h: f64,
    pub t: f64,
    pub k: f64,
}

impl NonlinearRhs {
    fn kt(&self) -> f64 {
        k_tilde(self.k)
    }

    /// `(1 + T^{1/4} X)`.
    fn damp(&self) -> f64 {
        1.0 + self.t.powf(0.25) * self.x
    }

    /// `T^{1/2} X² + (1 + T^{1/4}X) X H` (bilinear estimate).
    pub fn bilinear(&self) -> f64 {
        self.t.sqrt() * self.x * self.x + self.damp() * self.x * self.h
    }

    /// `T^{1/2} X^k H + (1 + T^{1/4}X) X^{k−1} H²` (commutator sum).
    pub fn commutator_sum(&self) -> f64 {
        let (x, h, k) = (self.x, self.h, self.k);
        self.t.sqrt() * x.powf(k) * h + self.damp() * x.powf(k - 1.0) * h * h
    }

    /// `T^{1/2} X^{k̃+1} H^{k−k̃} + (1 + T^{1/4}X) X^{k̃} H^{k+1−k̃}` (high–low difference).
    pub fn high_low_difference(&self) -> f64 {
        let (x, h, k, kt) = (self.x, self.h, self.k, self.kt());
        self.t.sqrt() * x.powf(kt + 1.0) * h.powf(k - kt) + self.damp() * x.powf(kt) * h.powf(k + 1.0 - kt)
    }

    fn weight(&self) -> f64 {
        1.0 + self.x.powf(self.k)
    }

    /// Bound for the Duhamel integral of `I_{N,j}` alone.
    pub fn term(&self, j: usize) -> f64 {
        let (x, h, k, t) = (self.x, self.h, self.k, self.t);
        match j {
            1 => {
                self.weight() * self.high_low_difference()
                    + self.weight()
                        * (t.sqrt() * x.powf(k) * h + self.damp().powi(2) * x.powf(k - 1.0) * h * h)
            }
            2 => self.weight() * (t.sqrt() * x.powf(k) * h + self.damp().powi(2) * x.powf(k - 2.0) * h.powi(3)),
            3 => {
                t.sqrt() * (x.powf(2.0 * k - 1.0) + x.powf((5.0 * k - 2.0) / 2.0)) * h
                    + t.powf(0.25) * self.damp().sqrt() * x.powf(2.0 * k - 1.0) * h.powf(1.5)
            }
            4 => self.weight() * (t.sqrt() * x.powf(k) * h + self.damp() * x.powf(k - 1.0) * h * h),
            5 => t.sqrt() * x.powf(3.0 * k) * h,
            _ => f64::NAN,
        }
    }

    /// The full five-term display.
    pub fn total(&self) -> f64 {
        let (x, h, k, t) = (self.x, self.h, self.k, self.t);
        self.weight() * self.high_low_difference()
            + t.sqrt() * (x.powf(2.0 * k - 1.0) + x.powf((5.0 * k - 2.0) / 2.0)) * h
            + t.powf(0.25) * self.damp().sqrt() * x.powf(2.0 * k - 1.0) * h.powf(1.5)
            + self.weight() * (t.sqrt() * x.powf(k) * h + self.damp().powi(2) * x.powf(k - 1.0) * h * h)
            + t.sqrt() * x.powf(3.0 * k) * h
    }
}

/// Trajectory of a member on the given rung.
fn trajectory(m: &FamilyMember, g: &SuiteGrid, physics: &Physics) -> Result<SpacetimeField> {
    let grid = g.grid()?;
    let u0 = m.data.build(&grid)?;
    Ok(solve(&u0, physics.lambda, physics.k, &g.spec()?, g.store_every)?.data)
}

/// `X`, `H` for a trajectory.
fn x_and_h(u: &SpacetimeField, suite: &Suite, windows: &WindowFamily, k: f64) -> Result<NonlinearRhs> {
    let x = xt_norm(u, windows, suite.include_low)?.total;
    let high = u.apply_multiplier(&suite.high_multiplier(windows)?);
    let h = xt_norm(&high, windows, suite.include_low)?.total;
    Ok(NonlinearRhs {
        x,
        h,
        t: u.horizon(),
        k,
    })
}

/// `‖u ū_x‖_{L_x^p L_T^2} ≲ T^{1/2}‖u‖²_{X_T} + (1 + T^{1/4}‖u‖_{X_T}) ‖u‖_{X_T} ‖P_{≫1}u‖_{X_T}`.
pub fn verify_bilinear(suite: &Suite, family: &TestFamily, physics: Physics, p: f64) -> Result<EstimateReport> {
    physics.validate()?;
    if !(p >= 4.0) {
        return Err(LabError::InvalidParameter(format!("p = {p} must be >= 4")));
    }
    let spec = MixedNormSpec::space_outer(p, 2.0)?;
    let id = format!("bilinear_p{p}");
    let reports = ladder(suite, &[id], &family.members(), |g, m| {
        let u = trajectory(m, g, &physics)?;
        let windows = suite.windows(u.grid())?;
        let ux = u.apply_multiplier(&u.grid().derivative_multiplier(1));
        let prod = u.zip_with(&ux, |a, b| a * b.conj())?;
        let rhs = x_and_h(&u, suite, &windows, physics.k)?;
        Ok(vec![Sample::new(mixed_norm(&prod, &spec), rhs.bilinear())])
    })?;
    Ok(single(reports))
}

/// Minimal number of stored levels for the Duhamel quadrature of the source terms.
pub const MIN_NONLINEAR_LEVELS: usize = 65;

/// Duhamel integrals of the gauge source terms summed in `ℓ²` over `N ≫ 1`
/// against the five-term bound, with sub-reports for each selected term and
/// for the commutator-sum and high–low difference lemmas.
pub fn verify_nonlinear(
    suite: &Suite,
    family: &TestFamily,
    physics: Physics,
    terms: &[usize],
) -> Result<EstimateReport> {
    physics.validate()?;
    if terms.is_empty() || terms.iter().any(|&j| !(1..=5).contains(&j)) {
        return Err(LabError::InvalidParameter(format!("terms {terms:?} must be a non-empty subset of 1..=5")));
    }
    let levels = suite.grid.levels();
    if levels < MIN_NONLINEAR_LEVELS {
        return Err(LabError::TooFewTimeLevels {
            needed: MIN_NONLINEAR_LEVELS,
            got: levels,
        });
    }
    let mut ids = vec!["nonlinear_duhamel".to_string()];
    ids.extend(terms.iter().map(|j| format!("nonlinear_term{j}")));
    ids.push("commutator_sum".to_string());
    ids.push("high_low_difference".to_string());

    let l1l2 = MixedNormSpec::space_outer(1.0, 2.0)?;
    let mut reports = ladder(suite, &ids, &family.members(), |g, m| {
        let u = trajectory(m, g, &physics)?;
        let grid = u.grid();
        let windows = suite.windows(grid)?;
        let rhs = x_and_h(&u, suite, &windows, physics.k)?;
        let ux = u.apply_multiplier(&grid.derivative_multiplier(1));
        let abs_u_k = u.map(|z| modulus_power(z, physics.k).into());

        let mut total = 0.0;
        let mut per_term = vec![0.0; terms.len()];
        let (mut comm, mut diff) = (0.0, 0.0);
        for band in suite.high_bands(&windows) {
            let params = physics.gauge_params(band)?;
            let set = gauge_terms(&u, &params, &windows)?;
            total += yt_norm(&duhamel_integral(&set.sum_of(terms))).powi(2);
            for (acc, &j) in per_term.iter_mut().zip(terms) {
                *acc += yt_norm(&duhamel_integral(set.term(j))).powi(2);
            }

            let block = windows.multiplier(band)?;
            let w = u.apply_multiplier(&windows.region_multiplier(Relation::MuchLess, band.value())?);
            let abs_w_k = w.map(|z| modulus_power(z, physics.k).into());
            // P_N(|w|^k P̃_N u_x) − |w|^k P_N P̃_N u_x
            let tilde_ux = ux.apply_multiplier(&windows.tilde_multiplier(band, TildeWidth::Width1)?);
            let a = abs_w_k.zip_with(&tilde_ux, |p, q| p * q)?.apply_multiplier(block);
            let b = abs_w_k.zip_with(&tilde_ux.apply_multiplier(block), |p, q| p * q)?;
            comm += mixed_norm(&a.zip_with(&b, |p, q| p - q)?, &l1l2).powi(2);
            // P_N((|u|^k − |w|^k) u_x)
            let d = abs_u_k
                .zip_with(&abs_w_k, |p, q| p - q)?
                .zip_with(&ux, |p, q| p * q)?
                .apply_multiplier(block);
            diff += mixed_norm(&d, &l1l2).powi(2);
        }

        let mut out = vec![Sample::new(total.sqrt(), rhs.total())];
        out.extend(terms.iter().zip(&per_term).map(|(&j, s)| Sample::new(s.sqrt(), rhs.term(j))));
        out.push(Sample::new(comm.sqrt(), rhs.commutator_sum()));
        out.push(Sample::new(diff.sqrt(), rhs.high_low_difference()));
        Ok(out)
    })?;
    let subs = reports.split_off(1);
    Ok(single(reports).with_sub_reports(subs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_tilde_is_largest_integer_below() {
        assert_eq!(k_tilde(5.0), 4.0);
        assert_eq!(k_tilde(5.5), 5.0);
        assert_eq!(k_tilde(4.0), 3.0);
    }

    #[test]
    fn display_vanishes_without_high_part() {
        let r = NonlinearRhs {
            x: 1.3,
            h: 0.0,
            t: 0.5,
            k: 5.0,
        };
        assert_eq!(r.total(), 0.0);
        assert_eq!(r.commutator_sum(), 0.0);
        assert_eq!(r.high_low_difference(), 0.0);
        assert!(r.bilinear() > 0.0);
    }
}
