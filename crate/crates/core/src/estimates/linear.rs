//! Free-flow, retarded and gauge-Leibniz estimates.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{free_flow, japanese, ladder, single, EstimateReport, FamilyMember, Sample, Suite, SuiteGrid, TestFamily};
use crate::error::{LabError, Result};
use crate::littlewood_paley::DyadicIndex;
use crate::norms::{mixed_norm, sobolev_norm, time_norm, MixedNormSpec};
use crate::solver::duhamel_integral;
use crate::spectral::{DerivativeKind, Field, SpacetimeField};

/// `4/(3+θ)`: spatial exponent of the dual smoothing norm.
pub fn p_theta(theta: f64) -> f64 {
    4.0 / (3.0 + theta)
}

/// `4/(3−θ)`: temporal exponent of the dual smoothing norm.
pub fn q_theta(theta: f64) -> f64 {
    4.0 / (3.0 - theta)
}

/// `a/b` with `a/0 = ∞`.
fn ratio_exp(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Hölder conjugate, `1' = ∞`, `∞' = 1`.
fn conjugate(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(LabError::InvalidParameter(format!("θ = {theta} must lie in [0, 1]")))
    }
}

fn theta_tag(theta: f64) -> String {
    format!("{theta}").replace('.', "p")
}

fn build(member: &FamilyMember, grid: &SuiteGrid) -> Result<Field> {
    member.data.build(&grid.grid()?)
}

/// `‖S(t)φ‖_{L_T^{4/θ} L_x^{2/(1−θ)}} / ‖φ‖_{L²}`.
pub fn verify_strichartz(suite: &Suite, family: &TestFamily, theta: f64) -> Result<EstimateReport> {
    check_theta(theta)?;
    suite.check_unit_horizon()?;
    let spec = MixedNormSpec::time_outer(ratio_exp(2.0, 1.0 - theta), ratio_exp(4.0, theta))?;
    let id = format!("strichartz_theta{}", theta_tag(theta));
    let reports = ladder(suite, &[id], &family.members(), |g, m| {
        let phi = build(m, g)?;
        let u = free_flow(&phi, g);
        Ok(vec![Sample::new(mixed_norm(&u, &spec), phi.l2_norm())])
    })?;
    Ok(single(reports))
}

/// Which free-flow space-time estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingKind {
    /// `‖S(t)P_Nφ‖_{L_x^{2/(1−θ)} L_T^{2/θ}} ≲ ⟨N⟩^{1/2−θ} ‖φ‖_{L²}`.
    Smoothing,
    /// The block estimate at `θ = 0`: `L_x^2 L_T^∞` with weight `⟨N⟩^{1/2}`.
    MaximalL2,
    /// `‖S(t)φ‖_{L_x^4 L_T^∞} ≲ ‖φ‖_{Ḣ^{1/4}}`.
    MaximalL4,
}

impl std::str::FromStr for SmoothingKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothing" => Ok(Self::Smoothing),
            "maximal_l2" => Ok(Self::MaximalL2),
            "maximal_l4" => Ok(Self::MaximalL4),
            _ => Err(LabError::Parse(format!("unknown smoothing/maximal estimate `{s}`"))),
        }
    }
}

/// The block estimate for one band.
fn block_sample(u: &SpacetimeField, suite: &Suite, band: DyadicIndex, theta: f64) -> Result<Sample> {
    let windows = suite.windows(u.grid())?;
    let spec = MixedNormSpec::space_outer(ratio_exp(2.0, 1.0 - theta), ratio_exp(2.0, theta))?;
    let block = windows.project_spacetime(u, band)?;
    Ok(Sample::new(mixed_norm(&block, &spec), japanese(band.value()).powf(0.5 - theta)))
}

/// Ratio maximised over the usable bands (the reported LHS/RHS belong to the maximiser).
fn worst_band<F>(suite: &Suite, grid: &Arc<crate::spectral::Grid>, mut f: F) -> Result<Sample>
where
    F: FnMut(DyadicIndex) -> Result<Sample>,
{
    let windows = suite.windows(grid)?;
    let mut best: Option<Sample> = None;
    for band in windows.indices() {
        let s = f(band)?;
        best = Some(match best {
            None => s,
            Some(b) => b.max_by_ratio(s),
        });
    }
    Ok(best.unwrap_or(Sample::new(0.0, 0.0)))
}

/// Local smoothing / maximal function estimates of the free flow. For the
/// banded forms each member contributes its worst band.
pub fn verify_smoothing_maximal(
    suite: &Suite,
    family: &TestFamily,
    which: SmoothingKind,
    theta: f64,
) -> Result<EstimateReport> {
    check_theta(theta)?;
    suite.check_unit_horizon()?;
    let id = match which {
        SmoothingKind::Smoothing => format!("smoothing_theta{}", theta_tag(theta)),
        SmoothingKind::MaximalL2 => "maximal_l2".to_string(),
        SmoothingKind::MaximalL4 => "maximal_l4".to_string(),
    };
    let reports = ladder(suite, &[id], &family.members(), |g, m| {
        let phi = build(m, g)?;
        let u = free_flow(&phi, g);
        let mass = phi.l2_norm();
        let s = match which {
            SmoothingKind::Smoothing | SmoothingKind::MaximalL2 => {
                let th = if which == SmoothingKind::MaximalL2 { 0.0 } else { theta };
                worst_band(suite, phi.grid(), |band| {
                    let s = block_sample(&u, suite, band, th)?;
                    Ok(Sample::new(s.lhs, s.rhs * mass))
                })?
            }
            SmoothingKind::MaximalL4 => Sample::new(
                mixed_norm(&u, &MixedNormSpec::space_outer(4.0, f64::INFINITY)?),
                sobolev_norm(&phi, 0.25, true)?,
            ),
        };
        Ok(vec![s])
    })?;
    Ok(single(reports))
}

/// The eight retarded (Duhamel) estimates, named by content.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InhomogeneousEstimate {
    /// `‖∫S f‖_{L_T^{4/θ} L_x^{2/(1−θ)}} ≲ ‖f‖_{L_T^{(4/θ)'} L_x^{(2/(1−θ))'}}`.
    RetardedStrichartz,
    /// `‖⟨D⟩^{θ/2} ∫S f‖_{L_T^∞ L_x^2} ≲ ‖f‖_{L_x^{p(θ)} L_T^{q(θ)}}`.
    EnergyFromDualSmoothing,
    /// `‖⟨D⟩^{θ/2} ∫S P_N f‖_{L_x^2 L_T^∞} ≲ ⟨N⟩^{1/2} ‖f‖_{L_x^{p(θ)} L_T^{q(θ)}}`.
    BlockMaximalFromDualSmoothing,
    /// `‖⟨D⟩^{θ/2−1/4} ∫S f‖_{L_x^4 L_T^∞} ≲ ‖f‖_{L_x^{p(θ)} L_T^{q(θ)}}`.
    MaximalL4FromDualSmoothing,
    /// `‖⟨D⟩^{1/2} ∫S f‖_{L_x^∞ L_T^2} ≲ ‖f‖_{L_T^1 L_x^2}`.
    SmoothingFromEnergy,
    /// `‖∫S P_N f‖_{L_x^{2/θ} L_T^{2/(1−θ)}} ≲ ⟨N⟩^{1/2−θ} ‖f‖_{L_T^1 L_x^2}`.
    BlockFromEnergy,
    /// `‖∫S f‖_{L_x^4 L_T^∞} ≲ ‖f‖_{L_T^1 Ḣ^{1/4}}`.
    MaximalL4FromEnergy,
    /// `‖∂_x ∫S f‖_{L_x^∞ L_T^2} ≲ ‖f‖_{L_x^1 L_T^2}`.
    DoubleSmoothing,
}

impl InhomogeneousEstimate {
    pub const ALL: [InhomogeneousEstimate; 8] = [
        Self::RetardedStrichartz,
        Self::EnergyFromDualSmoothing,
        Self::BlockMaximalFromDualSmoothing,
        Self::MaximalL4FromDualSmoothing,
        Self::SmoothingFromEnergy,
        Self::BlockFromEnergy,
        Self::MaximalL4FromEnergy,
        Self::DoubleSmoothing,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::RetardedStrichartz => "retarded_strichartz",
            Self::EnergyFromDualSmoothing => "energy_from_dual_smoothing",
            Self::BlockMaximalFromDualSmoothing => "block_maximal_from_dual_smoothing",
            Self::MaximalL4FromDualSmoothing => "maximal_l4_from_dual_smoothing",
            Self::SmoothingFromEnergy => "smoothing_from_energy",
            Self::BlockFromEnergy => "block_from_energy",
            Self::MaximalL4FromEnergy => "maximal_l4_from_energy",
            Self::DoubleSmoothing => "double_smoothing",
        }
    }

    /// Whether the estimate depends on `θ`.
    pub fn uses_theta(&self) -> bool {
        matches!(
            self,
            Self::RetardedStrichartz
                | Self::EnergyFromDualSmoothing
                | Self::BlockMaximalFromDualSmoothing
                | Self::MaximalL4FromDualSmoothing
                | Self::BlockFromEnergy
        )
    }
}

impl std::str::FromStr for InhomogeneousEstimate {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| LabError::Parse(format!("unknown retarded estimate `{s}`")))
    }
}

/// Forcing `f(t) = e^{iωt} S(βt) φ` with `ω ∈ [−10, 10]`, `β ∈ [−1, 1]` drawn per member.
fn forcing(member: &FamilyMember, family_seed: u64, grid: &SuiteGrid) -> Result<SpacetimeField> {
    let phi = build(member, grid)?;
    let mut rng = member.rng(family_seed);
    let omega = 20.0 * rng.gen::<f64>() - 10.0;
    let beta = 2.0 * rng.gen::<f64>() - 1.0;
    let g = phi.grid();
    let raw_times = grid.times();
    let mut slices = Vec::with_capacity(raw_times.len());
    for &t in &raw_times {
        let s = phi.propagate(beta * t).scale(Complex64::from_polar(1.0, omega * t));
        slices.push(s.into_values());
    }
    SpacetimeField::from_slices(Arc::clone(g), raw_times, slices)
}

/// `(LHS, RHS)` of one retarded estimate for the forcing `f`.
pub(crate) fn inhomogeneous_sample(
    f: &SpacetimeField,
    suite: &Suite,
    which: InhomogeneousEstimate,
    theta: f64,
) -> Result<Sample> {
    use InhomogeneousEstimate::*;
    let grid = f.grid();
    let d = duhamel_integral(f);
    let spectra = d.spectra();
    let bracket = |s: f64| grid.fractional_multiplier(s, DerivativeKind::Inhomogeneous);
    let dual_smoothing = MixedNormSpec::space_outer(p_theta(theta), q_theta(theta))?;
    let energy = || -> Result<f64> { Ok(mixed_norm(f, &MixedNormSpec::time_outer(2.0, 1.0)?)) };
    let s = match which {
        RetardedStrichartz => {
            let (p, q) = (ratio_exp(2.0, 1.0 - theta), ratio_exp(4.0, theta));
            Sample::new(
                mixed_norm(&d, &MixedNormSpec::time_outer(p, q)?),
                mixed_norm(f, &MixedNormSpec::time_outer(conjugate(p), conjugate(q))?),
            )
        }
        EnergyFromDualSmoothing => Sample::new(
            mixed_norm(&spectra.synthesize(&bracket(theta / 2.0)), &MixedNormSpec::time_outer(2.0, f64::INFINITY)?),
            mixed_norm(f, &dual_smoothing),
        ),
        BlockMaximalFromDualSmoothing => {
            let windows = suite.windows(grid)?;
            let rhs = mixed_norm(f, &dual_smoothing);
            let spec = MixedNormSpec::space_outer(2.0, f64::INFINITY)?;
            worst_band(suite, grid, |band| {
                let m = windows.multiplier(band)?.then(&bracket(theta / 2.0));
                Ok(Sample::new(
                    mixed_norm(&spectra.synthesize(&m), &spec),
                    japanese(band.value()).sqrt() * rhs,
                ))
            })?
        }
        MaximalL4FromDualSmoothing => Sample::new(
            mixed_norm(
                &spectra.synthesize(&bracket(theta / 2.0 - 0.25)),
                &MixedNormSpec::space_outer(4.0, f64::INFINITY)?,
            ),
            mixed_norm(f, &dual_smoothing),
        ),
        SmoothingFromEnergy => Sample::new(
            mixed_norm(&spectra.synthesize(&bracket(0.5)), &MixedNormSpec::space_outer(f64::INFINITY, 2.0)?),
            energy()?,
        ),
        BlockFromEnergy => {
            let windows = suite.windows(grid)?;
            let rhs = energy()?;
            let spec = MixedNormSpec::space_outer(ratio_exp(2.0, theta), ratio_exp(2.0, 1.0 - theta))?;
            worst_band(suite, grid, |band| {
                Ok(Sample::new(
                    mixed_norm(&spectra.synthesize(windows.multiplier(band)?), &spec),
                    japanese(band.value()).powf(0.5 - theta) * rhs,
                ))
            })?
        }
        MaximalL4FromEnergy => {
            let norms: Vec<f64> = (0..f.levels())
                .map(|n| sobolev_norm(&f.field(n), 0.25, true))
                .collect::<Result<_>>()?;
            Sample::new(
                mixed_norm(&d, &MixedNormSpec::space_outer(4.0, f64::INFINITY)?),
                time_norm(&norms, f.times(), 1.0),
            )
        }
        DoubleSmoothing => Sample::new(
            mixed_norm(
                &spectra.synthesize(&grid.derivative_multiplier(1)),
                &MixedNormSpec::space_outer(f64::INFINITY, 2.0)?,
            ),
            mixed_norm(f, &MixedNormSpec::space_outer(1.0, 2.0)?),
        ),
    };
    Ok(s)
}

/// One retarded estimate over the forcing family `f(t) = e^{iωt} S(βt) φ`.
pub fn verify_inhomogeneous(
    suite: &Suite,
    family: &TestFamily,
    which: InhomogeneousEstimate,
    theta: f64,
) -> Result<EstimateReport> {
    check_theta(theta)?;
    suite.check_unit_horizon()?;
    let id = if which.uses_theta() {
        format!("{}_theta{}", which.name(), theta_tag(theta))
    } else {
        which.name().to_string()
    };
    let reports = ladder(suite, &[id], &family.members(), |g, m| {
        let f = forcing(m, family.seed, g)?;
        Ok(vec![inhomogeneous_sample(&f, suite, which, theta)?])
    })?;
    Ok(single(reports))
}

/// Exponents of the gauge Leibniz rule; `f64::INFINITY` is ∞.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeibnizExponents {
    pub p: f64,
    pub p1: f64,
    pub p2: f64,
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
}

impl LeibnizExponents {
    /// Checks `1/p = 1/p1 + 1/p2`, `1/q = 1/q1 + 1/q2` and the admissible ranges.
    pub fn validate(&self) -> Result<()> {
        let open = |v: f64| v > 1.0 && v.is_finite();
        if !(open(self.p) && open(self.p1) && open(self.p2) && open(self.q) && open(self.q1)) {
            return Err(LabError::ExponentMismatch(format!(
                "p, p1, p2, q, q1 must lie in (1, ∞): {self:?}"
            )));
        }
        if !(self.q2 > 0.0) {
            return Err(LabError::ExponentMismatch(format!("q2 = {} must lie in (0, ∞]", self.q2)));
        }
        let gap_p = 1.0 / self.p - 1.0 / self.p1 - 1.0 / self.p2;
        let gap_q = 1.0 / self.q - 1.0 / self.q1 - 1.0 / self.q2;
        if gap_p.abs() > 1e-12 || gap_q.abs() > 1e-12 {
            return Err(LabError::ExponentMismatch(format!(
                "1/p − 1/p1 − 1/p2 = {gap_p:e}, 1/q − 1/q1 − 1/q2 = {gap_q:e}"
            )));
        }
        Ok(())
    }
}

/// `(‖D^α(e^{iF} g)‖_{L^p_x L^q_T}, ‖f‖‖g‖ + ‖⟨D⟩^α g‖)` with `F = ∫_{−L/2}^x f`.
pub fn gauge_leibniz_sample(
    f: &SpacetimeField,
    g: &SpacetimeField,
    alpha: f64,
    exps: &LeibnizExponents,
) -> Result<Sample> {
    exps.validate()?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::InvalidParameter(format!("α = {alpha} must lie in (0, 1)")));
    }
    if !f.grid().same_as(g.grid()) || f.times() != g.times() {
        return Err(LabError::GridMismatch);
    }
    if f.values().iter().any(|z| z.im != 0.0) {
        return Err(LabError::InvalidParameter("f must be real-valued".into()));
    }
    let grid = g.grid();
    let mut product = Vec::with_capacity(g.values().len());
    for n in 0..f.levels() {
        let big_f = f.field(n).primitive()?;
        for (a, z) in big_f.values().iter().zip(g.slice(n)) {
            product.push(Complex64::from_polar(1.0, a.re) * z);
        }
    }
    let product = SpacetimeField::new(Arc::clone(grid), g.times().to_vec(), product)?;
    let outer = MixedNormSpec::space_outer(exps.p, exps.q)?;
    let lhs = mixed_norm(
        &product.apply_multiplier(&grid.fractional_multiplier(alpha, DerivativeKind::Homogeneous)),
        &outer,
    );
    let rhs = mixed_norm(f, &MixedNormSpec::space_outer(exps.p1, exps.q1)?)
        * mixed_norm(g, &MixedNormSpec::space_outer(exps.p2, exps.q2)?)
        + mixed_norm(
            &g.apply_multiplier(&grid.fractional_multiplier(alpha, DerivativeKind::Inhomogeneous)),
            &outer,
        );
    Ok(Sample::new(lhs, rhs))
}

/// Gauge Leibniz rule with `g = S(t)φ` and the real density `f = |S(t)φ|²`.
pub fn verify_gauge_leibniz(
    suite: &Suite,
    family: &TestFamily,
    alpha: f64,
    exps: LeibnizExponents,
) -> Result<EstimateReport> {
    exps.validate()?;
    let id = format!("gauge_leibniz_alpha{}", theta_tag(alpha));
    let reports = ladder(suite, &[id], &family.members(), |g, m| {
        let phi = build(m, g)?;
        let u = free_flow(&phi, g);
        let density = u.map(|z| Complex64::new(z.norm_sqr(), 0.0));
        Ok(vec![gauge_leibniz_sample(&density, &u, alpha, &exps)?])
    })?;
    Ok(single(reports))
}
