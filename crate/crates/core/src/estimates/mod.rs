//! Numerical certification of the linear, bilinear, nonlinear and a priori
//! estimates.
//!
//! Every verifier evaluates `LHS/RHS` for each member of a [`TestFamily`] on a
//! [`SuiteGrid`], repeats the evaluation after one refinement step (`nx → 2nx`,
//! `dt → dt/2`, same storage stride so the snapshot spacing halves too), and
//! reports the growth of the maximal ratio. "≲" is never tested against a
//! specific constant: a report passes when the maximal ratio is finite and
//! grows by less than [`GROWTH_TOLERANCE`] under refinement.

mod apriori;
mod commutator;
mod linear;
mod nonlinear;

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{LabError, Result};
use crate::littlewood_paley::{DyadicIndex, Relation, WindowFamily, WindowProfile};
use crate::solver::InitialData;
use crate::spectral::{Grid, GridSpec, Multiplier, SpacetimeField};

pub use apriori::{verify_apriori, verify_data_gauge};
pub use commutator::{commutator_scaling, commutator_sample, verify_commutator, CommutatorSample, QuadratureConfig};
pub use linear::{
    gauge_leibniz_sample, p_theta, q_theta, verify_gauge_leibniz, verify_inhomogeneous, verify_smoothing_maximal,
    verify_strichartz, InhomogeneousEstimate, LeibnizExponents, SmoothingKind,
};
pub use nonlinear::{k_tilde, verify_bilinear, verify_nonlinear, NonlinearRhs};

/// Right-hand sides below this are treated as zero.
pub const ZERO_RHS: f64 = 1e-14;
/// A member with a zero right-hand side is excluded when its LHS is at most this.
pub const NEGLIGIBLE_LHS: f64 = 1e-10;
/// Allowed relative growth of the maximal ratio under one refinement step.
pub const GROWTH_TOLERANCE: f64 = 0.05;
/// Families used for statistical reports must have at least this many members.
pub const MIN_STATISTICAL_CARDINALITY: usize = 20;
/// Version of the JSON summary layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    GaussianSweep,
    ModulatedSweep,
    RandomBand,
    /// Gaussian data on an amplitude × width lattice, meant to be evolved by the solver.
    SolverTrajectory,
}

/// Ranges sampled by the family generators. `carrier` bounds `|ξ_0|` for
/// modulated data and the band `[k_min, k_max]` for random-band data; centers
/// are drawn from `[−center, center]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterRanges {
    pub amp: (f64, f64),
    pub width: (f64, f64),
    pub carrier: (f64, f64),
    pub center: f64,
}

impl Default for ParameterRanges {
    fn default() -> Self {
        Self {
            amp: (0.2, 1.0),
            width: (1.0, 3.0),
            carrier: (1.0, 4.0),
            center: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub kind: FamilyKind,
    pub cardinality: usize,
    pub seed: u64,
    #[serde(default)]
    pub ranges: ParameterRanges,
}

/// One sampled datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub id: usize,
    pub data: InitialData,
}

impl FamilyMember {
    /// `key=value` pairs separated by `;`, safe inside a CSV field.
    pub fn label(&self) -> String {
        match &self.data {
            InitialData::Gaussian { amp, width, center } => {
                format!("gaussian;amp={amp:.6};width={width:.6};center={center:.6}")
            }
            InitialData::ModulatedGaussian {
                amp,
                width,
                center,
                carrier,
            } => format!("modulated;amp={amp:.6};width={width:.6};center={center:.6};carrier={carrier:.6}"),
            InitialData::RandomBand {
                amp,
                width,
                k_min,
                k_max,
                packets,
                seed,
            } => format!(
                "random_band;amp={amp:.6};width={width:.6};kmin={k_min:.6};kmax={k_max:.6};packets={packets};seed={seed}"
            ),
            InitialData::File { path } => format!("file;path={}", path.display()),
        }
    }

    /// `(amp, width, center)` of the envelope, where the datum has one.
    pub fn envelope(&self) -> Option<(f64, f64, f64)> {
        match self.data {
            InitialData::Gaussian { amp, width, center } => Some((amp, width, center)),
            InitialData::ModulatedGaussian { amp, width, center, .. } => Some((amp, width, center)),
            InitialData::RandomBand { amp, width, .. } => Some((amp, width, 0.0)),
            InitialData::File { .. } => None,
        }
    }

    /// Member-specific generator, independent of evaluation order.
    pub fn rng(&self, family_seed: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(family_seed);
        rng.set_stream(self.id as u64 + 1);
        rng
    }
}

fn lerp((a, b): (f64, f64), s: f64) -> f64 {
    a + (b - a) * s
}

impl TestFamily {
    pub fn new(kind: FamilyKind, cardinality: usize, seed: u64) -> Self {
        Self {
            kind,
            cardinality,
            seed,
            ranges: ParameterRanges::default(),
        }
    }

    pub fn with_ranges(mut self, ranges: ParameterRanges) -> Self {
        self.ranges = ranges;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `statistical` additionally demands at least [`MIN_STATISTICAL_CARDINALITY`] members.
    pub fn validate(&self, statistical: bool) -> Result<()> {
        if self.cardinality == 0 {
            return Err(LabError::InvalidParameter("a family needs at least one member".into()));
        }
        if statistical && self.cardinality < MIN_STATISTICAL_CARDINALITY {
            return Err(LabError::InvalidParameter(format!(
                "statistical reports need >= {MIN_STATISTICAL_CARDINALITY} members, got {}",
                self.cardinality
            )));
        }
        let r = &self.ranges;
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !(ordered(r.amp) && ordered(r.width) && ordered(r.carrier)) || r.width.0 <= 0.0 || r.carrier.0 < 0.0 {
            return Err(LabError::InvalidParameter(format!("bad parameter ranges {r:?}")));
        }
        if !(r.center.is_finite() && r.center >= 0.0) {
            return Err(LabError::InvalidParameter(format!("center spread {} must be >= 0", r.center)));
        }
        Ok(())
    }

    /// The members, identical for identical `(kind, cardinality, seed, ranges)`.
    pub fn members(&self) -> Vec<FamilyMember> {
        let r = self.ranges;
        if self.kind == FamilyKind::SolverTrajectory {
            const WIDTHS: usize = 4;
            let amps = self.cardinality.div_ceil(WIDTHS);
            let frac = |i: usize, n: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            return (0..self.cardinality)
                .map(|id| FamilyMember {
                    id,
                    data: InitialData::gaussian(lerp(r.amp, frac(id / WIDTHS, amps)), lerp(r.width, frac(id % WIDTHS, WIDTHS))),
                })
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.cardinality)
            .map(|id| {
                let amp = lerp(r.amp, rng.gen::<f64>());
                let width = lerp(r.width, rng.gen::<f64>());
                let center = r.center * (2.0 * rng.gen::<f64>() - 1.0);
                let data = match self.kind {
                    FamilyKind::GaussianSweep => InitialData::Gaussian { amp, width, center },
                    FamilyKind::ModulatedSweep => {
                        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        InitialData::ModulatedGaussian {
                            amp,
                            width,
                            center,
                            carrier: sign * lerp(r.carrier, rng.gen::<f64>()),
                        }
                    }
                    FamilyKind::RandomBand => InitialData::RandomBand {
                        amp,
                        width,
                        k_min: r.carrier.0,
                        k_max: r.carrier.1,
                        packets: 3,
                        seed: rng.gen::<u64>(),
                    },
                    FamilyKind::SolverTrajectory => unreachable!(),
                };
                FamilyMember { id, data }
            })
            .collect()
    }
}

/// `<kind>:<cardinality>`, e.g. `gaussian:20`; the seed defaults to 0.
impl std::str::FromStr for TestFamily {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, count) = s
            .split_once(':')
            .ok_or_else(|| LabError::Parse(format!("family `{s}` is not <kind>:<cardinality>")))?;
        let kind = match kind.trim() {
            "gaussian" | "gaussian_sweep" => FamilyKind::GaussianSweep,
            "modulated" | "modulated_sweep" => FamilyKind::ModulatedSweep,
            "random_band" | "random" => FamilyKind::RandomBand,
            "solver_trajectory" | "trajectory" => FamilyKind::SolverTrajectory,
            other => return Err(LabError::Parse(format!("unknown family kind `{other}`"))),
        };
        let cardinality = count
            .trim()
            .parse()
            .map_err(|_| LabError::Parse(format!("bad cardinality `{count}`")))?;
        Ok(Self::new(kind, cardinality, 0))
    }
}

/// Resolution of one rung of the refinement ladder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteGrid {
    pub nx: usize,
    pub length: f64,
    pub dt: f64,
    pub horizon: f64,
    /// Every `store_every`-th step is a stored level.
    pub store_every: usize,
}

impl SuiteGrid {
    pub fn new(nx: usize, length: f64, dt: f64, horizon: f64, store_every: usize) -> Result<Self> {
        if store_every == 0 {
            return Err(LabError::InvalidParameter("store_every must be >= 1".into()));
        }
        let g = Self {
            nx,
            length,
            dt,
            horizon,
            store_every,
        };
        g.spec()?;
        Ok(g)
    }

    /// `nx → 2nx`, `dt → dt/2`; the stride is kept so stored levels double as well.
    pub fn refine(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            dt: self.dt / 2.0,
            ..*self
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.nx, self.length, self.dt, self.horizon)
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.spec()?)
    }

    /// Stored times of a run with this resolution: every stride, plus the final step.
    pub fn times(&self) -> Vec<f64> {
        let steps = (self.horizon / self.dt).round().max(1.0) as usize;
        let mut levels: Vec<usize> = (0..=steps).step_by(self.store_every).collect();
        if *levels.last().unwrap() != steps {
            levels.push(steps);
        }
        levels.into_iter().map(|n| n as f64 * self.dt).collect()
    }

    pub fn levels(&self) -> usize {
        self.times().len()
    }
}

/// Physics of solver-backed suites.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub lambda: f64,
    pub k: f64,
    /// Accept `4 ≤ k < 5` (the nonlinear lemmas are stated for `k ≥ 4`).
    #[serde(default)]
    pub relaxed_k: bool,
}

impl Physics {
    pub fn new(lambda: f64, k: f64) -> Self {
        Self {
            lambda,
            k,
            relaxed_k: false,
        }
    }

    pub fn relaxed(mut self) -> Self {
        self.relaxed_k = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(LabError::InvalidParameter(format!("λ = {} must be finite", self.lambda)));
        }
        let k_min = if self.relaxed_k { 4.0 } else { 5.0 };
        if !(self.k.is_finite() && self.k >= k_min) {
            return Err(LabError::InvalidParameter(format!("k = {} must be >= {k_min}", self.k)));
        }
        Ok(())
    }

    pub(crate) fn gauge_params(&self, band: DyadicIndex) -> Result<crate::gauge::GaugeParams> {
        use crate::gauge::GaugeParams;
        if self.lambda == 0.0 {
            GaugeParams::linear(self.k, band)
        } else if self.relaxed_k {
            GaugeParams::relaxed(self.lambda, self.k, band)
        } else {
            GaugeParams::new(self.lambda, self.k, band)
        }
    }
}

/// Shared settings of a verification run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub grid: SuiteGrid,
    /// Evaluate on the refined grid as well and gate on the growth.
    pub refine: bool,
    pub profile: WindowProfile,
    /// Whether the low block enters the `X_T` dyadic sums.
    pub include_low: bool,
    /// Smallest dyadic `N` counted as `N ≫ 1`.
    pub high_from: f64,
}

impl Suite {
    pub fn new(grid: SuiteGrid) -> Self {
        Self {
            grid,
            refine: true,
            profile: WindowProfile::SmoothBump,
            include_low: true,
            high_from: 4.0,
        }
    }

    pub fn without_refinement(mut self) -> Self {
        self.refine = false;
        self
    }

    pub(crate) fn windows(&self, grid: &Arc<Grid>) -> Result<WindowFamily> {
        WindowFamily::build(grid, self.profile)
    }

    /// Usable bands with `N ≥ high_from`.
    pub(crate) fn high_bands(&self, windows: &WindowFamily) -> Vec<DyadicIndex> {
        windows
            .indices()
            .into_iter()
            .filter(|i| i.value() >= self.high_from)
            .collect()
    }

    /// `P_{≫1}` as the sum of the high blocks (zero when none is usable).
    pub(crate) fn high_multiplier(&self, windows: &WindowFamily) -> Result<Multiplier> {
        let mut acc = windows.grid().real_multiplier(|_| 0.0);
        for b in self.high_bands(windows) {
            acc = acc.sum(windows.multiplier(b)?);
        }
        Ok(acc)
    }

    pub(crate) fn low_multiplier(&self, windows: &WindowFamily) -> Result<Multiplier> {
        windows.region_multiplier(Relation::Lesssim, 1.0)
    }

    pub(crate) fn check_unit_horizon(&self) -> Result<()> {
        let t = self.grid.horizon;
        if t > 0.0 && t < 1.0 {
            Ok(())
        } else {
            Err(LabError::HypothesisViolated(format!("the linear estimates assume T ∈ (0, 1), got {t}")))
        }
    }
}

/// One `(LHS, RHS)` evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sample {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs }
    }

    /// `None` when both sides vanish; `ZeroRhs` when only the RHS does.
    pub fn ratio(&self) -> Result<Option<f64>> {
        if self.rhs.abs() < ZERO_RHS {
            if self.lhs.abs() <= NEGLIGIBLE_LHS {
                Ok(None)
            } else {
                Err(LabError::ZeroRhs)
            }
        } else {
            Ok(Some(self.lhs / self.rhs))
        }
    }

    /// Keeps the sample with the larger ratio (zero-RHS samples lose).
    pub(crate) fn max_by_ratio(self, other: Sample) -> Sample {
        let r = |s: &Sample| if s.rhs.abs() < ZERO_RHS { f64::NEG_INFINITY } else { s.lhs / s.rhs };
        if r(&other) > r(&self) || r(&other).is_nan() {
            other
        } else {
            self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberRatio {
    pub id: usize,
    pub params: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` for members excluded because both sides vanish.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrend {
    pub nx: [usize; 2],
    pub dt: [f64; 2],
    pub max_ratio: [f64; 2],
    /// `fine/coarse − 1`.
    pub growth: f64,
}

impl RefinementTrend {
    fn new(coarse: &SuiteGrid, fine: &SuiteGrid, a: f64, b: f64) -> Self {
        let growth = if a == b { 0.0 } else { b / a - 1.0 };
        Self {
            nx: [coarse.nx, fine.nx],
            dt: [coarse.dt, fine.dt],
            max_ratio: [a, b],
            growth,
        }
    }
}

/// Additional named acceptance condition `value ≤ limit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            value,
            limit,
            pass: value <= limit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub id: String,
    pub members: Vec<MemberRatio>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub refinement: Option<RefinementTrend>,
    pub checks: Vec<Check>,
    pub sub_reports: Vec<EstimateReport>,
    pub pass: bool,
}

fn max_ratio(ratios: &[f64]) -> f64 {
    // NaN propagates so that a single broken member fails the report
    ratios.iter().fold(0.0, |m, &r| if r.is_nan() || m.is_nan() { f64::NAN } else { m.max(r) })
}

fn median(ratios: &[f64]) -> f64 {
    if ratios.is_empty() {
        return 0.0;
    }
    let mut v = ratios.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl EstimateReport {
    /// Report over members; excluded members keep their row with an empty ratio.
    pub fn from_members(id: &str, rows: Vec<(usize, String, Sample)>) -> Result<Self> {
        let mut members = Vec::with_capacity(rows.len());
        for (mid, params, s) in rows {
            members.push(MemberRatio {
                id: mid,
                params,
                lhs: s.lhs,
                rhs: s.rhs,
                ratio: s.ratio()?,
            });
        }
        let ratios: Vec<f64> = members.iter().filter_map(|m| m.ratio).collect();
        let mut r = Self {
            id: id.to_string(),
            max_ratio: max_ratio(&ratios),
            median_ratio: median(&ratios),
            members,
            refinement: None,
            checks: Vec::new(),
            sub_reports: Vec::new(),
            pass: false,
        };
        r.update_pass();
        Ok(r)
    }

    /// Report aggregating sub-reports without members of its own; its
    /// `max_ratio` and refinement growth are the worst over the parts.
    pub fn composite(id: &str, sub_reports: Vec<EstimateReport>, checks: Vec<Check>) -> Self {
        let maxima: Vec<f64> = sub_reports.iter().map(|r| r.max_ratio).collect();
        let medians: Vec<f64> = sub_reports.iter().map(|r| r.median_ratio).collect();
        let refinement = sub_reports
            .iter()
            .filter_map(|r| r.refinement.clone())
            .reduce(|a, b| if b.growth > a.growth || b.growth.is_nan() { b } else { a });
        let mut r = Self {
            id: id.to_string(),
            members: Vec::new(),
            max_ratio: max_ratio(&maxima),
            median_ratio: median(&medians),
            refinement,
            checks,
            sub_reports,
            pass: false,
        };
        r.update_pass();
        r
    }

    pub fn with_refinement(mut self, trend: RefinementTrend) -> Self {
        self.refinement = Some(trend);
        self.update_pass();
        self
    }

    pub fn with_check(mut self, check: Check) -> Self {
        self.checks.push(check);
        self.update_pass();
        self
    }

    pub fn with_sub_reports(mut self, subs: Vec<EstimateReport>) -> Self {
        self.sub_reports.extend(subs);
        self.update_pass();
        self
    }

    /// Finite maximum, at least one ratio (for member reports), growth below
    /// tolerance (when refined), every check and sub-report passing.
    fn update_pass(&mut self) {
        let gated = self
            .refinement
            .as_ref()
            .map_or(true, |t| t.growth.is_finite() && t.growth < GROWTH_TOLERANCE);
        let certified = self.members.is_empty() || self.members.iter().any(|m| m.ratio.is_some());
        self.pass = self.max_ratio.is_finite()
            && certified
            && gated
            && self.checks.iter().all(|c| c.pass)
            && self.sub_reports.iter().all(|r| r.pass);
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.members.iter().filter_map(|m| m.ratio).collect()
    }

    /// Finds a report by id in this tree.
    pub fn find(&self, id: &str) -> Option<&EstimateReport> {
        if self.id == id {
            return Some(self);
        }
        self.sub_reports.iter().find_map(|r| r.find(id))
    }

    /// Per-member CSV with header `member_id,params,lhs,rhs,ratio`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["member_id", "params", "lhs", "rhs", "ratio"])?;
        for m in &self.members {
            w.write_record([
                m.id.to_string(),
                m.params.clone(),
                format!("{:e}", m.lhs),
                format!("{:e}", m.rhs),
                m.ratio.map(|r| format!("{r:e}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary without the member rows.
    pub fn summary(&self) -> serde_json::Value {
        json!({
            "id": self.id,
            "members": self.members.len(),
            "excluded": self.members.iter().filter(|m| m.ratio.is_none()).count(),
            "max_ratio": finite_or_string(self.max_ratio),
            "median_ratio": finite_or_string(self.median_ratio),
            "refinement": self.refinement.as_ref().map(|t| json!({
                "nx": t.nx,
                "dt": t.dt,
                "max_ratio": [finite_or_string(t.max_ratio[0]), finite_or_string(t.max_ratio[1])],
                "growth": finite_or_string(t.growth),
            })),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "value": finite_or_string(c.value),
                "limit": finite_or_string(c.limit),
                "pass": c.pass,
            })).collect::<Vec<_>>(),
            "pass": self.pass,
            "sub_reports": self.sub_reports.iter().map(|r| r.summary()).collect::<Vec<_>>(),
        })
    }

    /// Versioned JSON summary.
    pub fn summary_json(&self) -> serde_json::Value {
        let mut v = self.summary();
        v["schema"] = json!(SCHEMA_VERSION);
        v
    }

    /// One line per report in the tree, indented by depth.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_into(&mut out, 0);
        out
    }

    fn render_into(&self, out: &mut String, depth: usize) {
        let growth = self
            .refinement
            .as_ref()
            .map_or("-".to_string(), |t| format!("{:+.2}%", 100.0 * t.growth));
        out.push_str(&format!(
            "{:indent$}{} {}  max={:.4e} median={:.4e} growth={}\n",
            "",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.max_ratio,
            self.median_ratio,
            growth,
            indent = 2 * depth
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "{:indent$}  {} {} = {:.4e} (limit {:.1e})\n",
                "",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.value,
                c.limit,
                indent = 2 * depth
            ));
        }
        for r in &self.sub_reports {
            r.render_into(out, depth + 1);
        }
    }
}

/// JSON has no NaN/∞; they are written as strings.
fn finite_or_string(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

/// Evaluates every member on `grid`; rows are member-major, one sample per quantity.
fn evaluate<F>(grid: &SuiteGrid, members: &[FamilyMember], quantities: usize, eval: &F) -> Result<Vec<Vec<Sample>>>
where
    F: Fn(&SuiteGrid, &FamilyMember) -> Result<Vec<Sample>> + Sync,
{
    let rows: Vec<Vec<Sample>> = members.par_iter().map(|m| eval(grid, m)).collect::<Result<_>>()?;
    if rows.iter().any(|r| r.len() != quantities) {
        return Err(LabError::InvalidParameter("evaluator returned the wrong number of quantities".into()));
    }
    Ok(rows)
}

/// Runs `eval` on the suite grid (and its refinement) and builds one report per
/// quantity id.
pub(crate) fn ladder<F>(suite: &Suite, ids: &[String], members: &[FamilyMember], eval: F) -> Result<Vec<EstimateReport>>
where
    F: Fn(&SuiteGrid, &FamilyMember) -> Result<Vec<Sample>> + Sync,
{
    let coarse = evaluate(&suite.grid, members, ids.len(), &eval)?;
    let fine_grid = suite.grid.refine();
    let fine = if suite.refine {
        Some(evaluate(&fine_grid, members, ids.len(), &eval)?)
    } else {
        None
    };
    ids.iter()
        .enumerate()
        .map(|(q, id)| {
            let rows = members
                .iter()
                .zip(&coarse)
                .map(|(m, s)| (m.id, m.label(), s[q]))
                .collect();
            let report = EstimateReport::from_members(id, rows)?;
            match &fine {
                None => Ok(report),
                Some(fine) => {
                    let fine_ratios: Vec<f64> = fine
                        .iter()
                        .map(|s| s[q].ratio())
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .flatten()
                        .collect();
                    let trend = RefinementTrend::new(&suite.grid, &fine_grid, report.max_ratio, max_ratio(&fine_ratios));
                    Ok(report.with_refinement(trend))
                }
            }
        })
        .collect()
}

pub(crate) fn single(reports: Vec<EstimateReport>) -> EstimateReport {
    reports.into_iter().next().expect("one quantity requested")
}

/// `⟨N⟩ = (1 + N²)^{1/2}`, with `N = 0` for the low block.
pub fn japanese(n: f64) -> f64 {
    (1.0 + n * n).sqrt()
}

/// `u(t) = S(t) φ` on the suite's stored times.
pub(crate) fn free_flow(phi: &crate::spectral::Field, grid: &SuiteGrid) -> SpacetimeField {
    SpacetimeField::free_evolution(phi, grid.times())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn members_are_reproducible_and_seeded() {
        let f = TestFamily::new(FamilyKind::ModulatedSweep, 20, 7);
        assert_eq!(f.members(), f.members());
        assert_ne!(f.members(), f.clone().with_seed(8).members());
        assert_eq!(f.members().len(), 20);
    }

    #[test]
    fn lattice_family_spans_the_ranges() {
        let f = TestFamily::new(FamilyKind::SolverTrajectory, 20, 0);
        let m = f.members();
        assert_eq!(m[0].envelope(), Some((0.2, 1.0, 0.0)));
        assert_eq!(m[19].envelope(), Some((1.0, 3.0, 0.0)));
    }

    #[test]
    fn family_parsing() {
        let f: TestFamily = "gaussian:20".parse().unwrap();
        assert_eq!((f.kind, f.cardinality), (FamilyKind::GaussianSweep, 20));
        assert!("gaussian".parse::<TestFamily>().is_err());
        assert!("blob:3".parse::<TestFamily>().is_err());
        assert!(TestFamily::new(FamilyKind::GaussianSweep, 5, 0).validate(true).is_err());
    }

    #[test]
    fn zero_rhs_handling() {
        assert_eq!(Sample::new(0.0, 0.0).ratio().unwrap(), None);
        assert!(matches!(Sample::new(1.0, 0.0).ratio(), Err(LabError::ZeroRhs)));
        assert_eq!(Sample::new(1.0, 2.0).ratio().unwrap(), Some(0.5));
    }

    #[test]
    fn gate_and_median() {
        let rows = (0..4).map(|i| (i, String::new(), Sample::new(i as f64, 1.0))).collect();
        let r = EstimateReport::from_members("x", rows).unwrap();
        assert_eq!((r.max_ratio, r.median_ratio), (3.0, 1.5));
        let g = SuiteGrid::new(64, 10.0, 0.01, 0.1, 1).unwrap();
        let ok = r.clone().with_refinement(RefinementTrend::new(&g, &g.refine(), 3.0, 3.1));
        assert!(ok.pass);
        let bad = r.with_refinement(RefinementTrend::new(&g, &g.refine(), 3.0, 3.2));
        assert!(!bad.pass);
    }

    #[test]
    fn suite_times_include_the_end() {
        let g = SuiteGrid::new(64, 10.0, 0.01, 0.11, 4).unwrap();
        let t = g.times();
        assert_eq!(t.len(), 4);
        assert!((t[3] - 0.11).abs() < 1e-12);
        assert_eq!(g.refine().levels(), 7);
    }
}
