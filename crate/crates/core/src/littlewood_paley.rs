//! Smooth dyadic windows and the Littlewood–Paley projector algebra.
//!
//! `ψ` equals one on `|ξ| ≤ 1` and vanishes for `|ξ| ≥ 2`; `φ(ξ) = ψ(ξ) − ψ(2ξ)`.
//! The block `P_N` (for `N = 2^j`, `j ≥ 0`) has symbol `φ(ξ/N)` and the low
//! block `P_0` has symbol `ψ(2ξ)`, so that on a ladder truncated at `N_max`
//!
//! ```text
//! ψ(2ξ) + Σ_{1 ≤ N ≤ N_max} φ(ξ/N) = ψ(ξ/N_max),
//! ```
//!
//! which is one on `|ξ| ≤ N_max`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{
    lp_norm, DerivativeKind, Field, Grid, Multiplier, SpacetimeField, SpectralSlices,
};

/// Shape of the transition of `ψ` between `|ξ| = 1` and `|ξ| = 2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowProfile {
    /// `χ(2−|ξ|) / (χ(2−|ξ|) + χ(|ξ|−1))` with `χ(t) = e^{−1/t}` for `t > 0`.
    #[default]
    SmoothBump,
    /// Linear ramp; only Lipschitz, kept for comparison runs.
    PiecewiseLinear,
}

fn bump(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl WindowProfile {
    pub fn psi(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= 1.0 {
            return 1.0;
        }
        if a >= 2.0 {
            return 0.0;
        }
        match self {
            WindowProfile::SmoothBump => {
                let up = bump(2.0 - a);
                up / (up + bump(a - 1.0))
            }
            WindowProfile::PiecewiseLinear => 2.0 - a,
        }
    }

    pub fn phi(&self, xi: f64) -> f64 {
        self.psi(xi) - self.psi(2.0 * xi)
    }

    /// Low-block symbol `φ_0(ξ) = ψ(2ξ)`.
    pub fn phi0(&self, xi: f64) -> f64 {
        self.psi(2.0 * xi)
    }
}

/// Frequency-block label: the low block `P_0` or `P_N` with `N = 2^j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyadicIndex {
    Low,
    Band(u32),
}

impl DyadicIndex {
    /// `N`, with `0` for the low block.
    pub fn value(&self) -> f64 {
        match self {
            DyadicIndex::Low => 0.0,
            DyadicIndex::Band(j) => 2f64.powi(*j as i32),
        }
    }

    /// Position on the ladder, `-1` for the low block.
    pub fn level(&self) -> i64 {
        match self {
            DyadicIndex::Low => -1,
            DyadicIndex::Band(j) => *j as i64,
        }
    }

    /// Index for the dyadic number `n = 2^j`; `n = 0` gives the low block.
    pub fn from_value(n: f64) -> Result<Self> {
        if n == 0.0 {
            return Ok(DyadicIndex::Low);
        }
        let j = n.log2().round();
        if n < 1.0 || !n.is_finite() || (2f64.powf(j) - n).abs() > 1e-12 * n {
            return Err(LabError::InvalidParameter(format!(
                "{n} is not a dyadic number 2^j with j >= 0"
            )));
        }
        Ok(DyadicIndex::Band(j as u32))
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DyadicIndex::Low => write!(f, "low"),
            DyadicIndex::Band(j) => write!(f, "{}", 1u64 << j),
        }
    }
}

impl FromStr for DyadicIndex {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("low") {
            return Ok(DyadicIndex::Low);
        }
        let n: f64 = s
            .parse()
            .map_err(|_| LabError::Parse(format!("dyadic index '{s}'")))?;
        DyadicIndex::from_value(n)
    }
}

/// Comparability relations between dyadic numbers `M` and `N`.
///
/// `M ≪ N` iff `M ≤ N/4`, `M ∼ N` iff `N/2 ≤ M ≤ 2N`, `M ≲ N` iff `M ≤ 2N`;
/// the other two are the complements read from the other side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    MuchLess,
    Lesssim,
    Sim,
    Gtrsim,
    MuchGreater,
}

impl Relation {
    /// Whether block value `m` (0 for the low block) stands in this relation to `n`.
    pub fn holds(&self, m: f64, n: f64) -> bool {
        match self {
            Relation::MuchLess => m <= n / 4.0,
            Relation::Lesssim => m <= 2.0 * n,
            Relation::Sim => n / 2.0 <= m && m <= 2.0 * n,
            Relation::Gtrsim => m >= n / 2.0,
            Relation::MuchGreater => m >= 4.0 * n,
        }
    }
}

impl FromStr for Relation {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "much_less" | "<<" => Ok(Relation::MuchLess),
            "lesssim" | "<~" => Ok(Relation::Lesssim),
            "sim" | "~" => Ok(Relation::Sim),
            "gtrsim" | ">~" => Ok(Relation::Gtrsim),
            "much_greater" | ">>" => Ok(Relation::MuchGreater),
            _ => Err(LabError::Parse(format!("relation '{s}'"))),
        }
    }
}

/// Window widths for `P̃_N`: `Width1` is `P_{N/2} + P_N + P_{2N}`,
/// `Width2` is `Σ_{|j| ≤ 2} P_{2^j N}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TildeWidth {
    Width1,
    #[default]
    Width2,
}

/// The sampled window symbols for one grid.
#[derive(Clone, Debug)]
pub struct WindowFamily {
    grid: Arc<Grid>,
    profile: WindowProfile,
    cap_level: u32,
    low: Multiplier,
    bands: Vec<Multiplier>,
}

impl WindowFamily {
    pub fn build(grid: &Arc<Grid>, profile: WindowProfile) -> Result<Self> {
        let cap = nyquist_cap(grid);
        if cap < 2.0 {
            return Err(LabError::ResolutionTooCoarse { cap });
        }
        let cap_level = cap.log2().round() as u32;
        let low = grid.real_multiplier(|k| profile.phi0(k));
        let bands = (0..=cap_level)
            .map(|j| {
                let n = 2f64.powi(j as i32);
                grid.real_multiplier(|k| profile.phi(k / n))
            })
            .collect();
        Ok(Self {
            grid: Arc::clone(grid),
            profile,
            cap_level,
            low,
            bands,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn profile(&self) -> WindowProfile {
        self.profile
    }

    /// Largest usable dyadic `N`.
    pub fn nyquist_cap(&self) -> f64 {
        2f64.powi(self.cap_level as i32)
    }

    /// `Low, 1, 2, …, N_max`.
    pub fn indices(&self) -> Vec<DyadicIndex> {
        std::iter::once(DyadicIndex::Low)
            .chain((0..=self.cap_level).map(DyadicIndex::Band))
            .collect()
    }

    pub fn check_usable(&self, idx: DyadicIndex) -> Result<()> {
        match idx {
            DyadicIndex::Band(j) if j > self.cap_level => Err(LabError::BandAboveNyquist {
                n: idx.value(),
                cap: self.nyquist_cap(),
            }),
            _ => Ok(()),
        }
    }

    pub fn multiplier(&self, idx: DyadicIndex) -> Result<&Multiplier> {
        self.check_usable(idx)?;
        Ok(match idx {
            DyadicIndex::Low => &self.low,
            DyadicIndex::Band(j) => &self.bands[j as usize],
        })
    }

    fn sum_of(&self, set: &[DyadicIndex]) -> Multiplier {
        let mut acc = Multiplier(vec![Complex64::new(0.0, 0.0); self.grid.nx()]);
        for &idx in set {
            acc = acc.sum(self.multiplier(idx).expect("index from usable set"));
        }
        acc
    }

    /// Blocks `M` with `M rel N`, restricted to the usable ladder.
    pub fn region_indices(&self, relation: Relation, n: f64) -> Result<Vec<DyadicIndex>> {
        self.check_usable(DyadicIndex::from_value(n)?)?;
        Ok(self
            .indices()
            .into_iter()
            .filter(|m| relation.holds(m.value(), n))
            .collect())
    }

    pub fn region_multiplier(&self, relation: Relation, n: f64) -> Result<Multiplier> {
        Ok(self.sum_of(&self.region_indices(relation, n)?))
    }

    /// Blocks making up `P̃_N`; terms with `2^j N < 1` collapse to the low block.
    pub fn tilde_indices(&self, idx: DyadicIndex, width: TildeWidth) -> Result<Vec<DyadicIndex>> {
        self.check_usable(idx)?;
        let reach: i64 = match width {
            TildeWidth::Width1 => 1,
            TildeWidth::Width2 => 2,
        };
        let centre = idx.level();
        let mut out = Vec::new();
        for l in (centre - reach)..=(centre + reach) {
            let m = if l < 0 {
                DyadicIndex::Low
            } else {
                DyadicIndex::Band(l as u32)
            };
            if l <= self.cap_level as i64 && !out.contains(&m) {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn tilde_multiplier(&self, idx: DyadicIndex, width: TildeWidth) -> Result<Multiplier> {
        Ok(self.sum_of(&self.tilde_indices(idx, width)?))
    }

    /// `P_{1<·≪N}`: the much-less region with the low block and band 1 removed.
    pub fn intermediate_indices(&self, n: f64) -> Result<Vec<DyadicIndex>> {
        Ok(self
            .region_indices(Relation::MuchLess, n)?
            .into_iter()
            .filter(|m| m.value() > 1.0)
            .collect())
    }

    pub fn intermediate_multiplier(&self, n: f64) -> Result<Multiplier> {
        Ok(self.sum_of(&self.intermediate_indices(n)?))
    }

    pub fn project(&self, f: &Field, idx: DyadicIndex) -> Result<Field> {
        self.check_grid(f.grid())?;
        Ok(f.apply_multiplier(self.multiplier(idx)?))
    }

    pub fn project_region(&self, f: &Field, relation: Relation, n: f64) -> Result<Field> {
        self.check_grid(f.grid())?;
        Ok(f.apply_multiplier(&self.region_multiplier(relation, n)?))
    }

    pub fn project_tilde(&self, f: &Field, idx: DyadicIndex, width: TildeWidth) -> Result<Field> {
        self.check_grid(f.grid())?;
        Ok(f.apply_multiplier(&self.tilde_multiplier(idx, width)?))
    }

    pub fn project_spacetime(&self, u: &SpacetimeField, idx: DyadicIndex) -> Result<SpacetimeField> {
        self.check_grid(u.grid())?;
        Ok(u.apply_multiplier(self.multiplier(idx)?))
    }

    pub fn project_region_spacetime(
        &self,
        u: &SpacetimeField,
        relation: Relation,
        n: f64,
    ) -> Result<SpacetimeField> {
        self.check_grid(u.grid())?;
        Ok(u.apply_multiplier(&self.region_multiplier(relation, n)?))
    }

    /// Block of a trajectory from cached spectra.
    pub fn project_cached(&self, spectra: &SpectralSlices, idx: DyadicIndex) -> Result<SpacetimeField> {
        self.check_grid(spectra.grid())?;
        Ok(spectra.synthesize(self.multiplier(idx)?))
    }

    /// `‖D_x^s P_N f‖_{L^p} / (N^s ‖P_N f‖_{L^p})`; the low block uses `N = 1`.
    pub fn bernstein_ratio(&self, f: &Field, idx: DyadicIndex, s: f64, p: f64) -> Result<f64> {
        let block = self.project(f, idx)?;
        let den_norm = block.lp_norm(p);
        if den_norm < 1e-14 {
            return Err(LabError::ZeroBand);
        }
        let n = idx.value().max(1.0);
        let num = block.apply_multiplier(
            &self
                .grid
                .fractional_multiplier(s, DerivativeKind::Homogeneous),
        );
        Ok(lp_norm(num.values(), p, self.grid.dx()) / (n.powf(s) * den_norm))
    }

    fn check_grid(&self, other: &Arc<Grid>) -> Result<()> {
        if self.grid.same_as(other) {
            Ok(())
        } else {
            Err(LabError::GridMismatch)
        }
    }
}

/// Largest `2^j` (possibly below one) not exceeding half the Nyquist frequency.
pub fn nyquist_cap(grid: &Grid) -> f64 {
    let half = grid.spec().nyquist_frequency() / 2.0;
    2f64.powf(half.log2().floor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use std::f64::consts::PI;

    fn family(nx: usize, length: f64) -> WindowFamily {
        let g = Grid::new(GridSpec::new(nx, length, 0.01, 1.0).unwrap()).unwrap();
        WindowFamily::build(&g, WindowProfile::SmoothBump).unwrap()
    }

    #[test]
    fn psi_and_phi_reference_values() {
        let p = WindowProfile::SmoothBump;
        assert_eq!(p.psi(0.5), 1.0);
        assert_eq!(p.psi(2.5), 0.0);
        assert_eq!(p.phi(1.0), 1.0);
        assert!((p.psi(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(p.psi(-1.3), p.psi(1.3));
    }

    #[test]
    fn cap_and_ladder() {
        // π·256/(2·2π) = 64
        let w = family(256, 2.0 * PI);
        assert_eq!(w.nyquist_cap(), 64.0);
        assert_eq!(w.indices().len(), 8);
        assert!(matches!(
            w.multiplier(DyadicIndex::Band(7)),
            Err(LabError::BandAboveNyquist { .. })
        ));
        let g = Grid::new(GridSpec::new(16, 100.0, 0.01, 1.0).unwrap()).unwrap();
        assert!(matches!(
            WindowFamily::build(&g, WindowProfile::SmoothBump),
            Err(LabError::ResolutionTooCoarse { .. })
        ));
    }

    #[test]
    fn dyadic_index_parsing() {
        assert_eq!("low".parse::<DyadicIndex>().unwrap(), DyadicIndex::Low);
        assert_eq!("16".parse::<DyadicIndex>().unwrap(), DyadicIndex::Band(4));
        assert_eq!("0".parse::<DyadicIndex>().unwrap(), DyadicIndex::Low);
        assert!("12".parse::<DyadicIndex>().is_err());
        assert_eq!(DyadicIndex::Band(3).to_string(), "8");
    }

    #[test]
    fn plane_wave_is_fixed_by_its_band() {
        let w = family(512, 2.0 * PI);
        let g = Arc::clone(w.grid());
        let f = Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, 16.0 * x)).unwrap();
        let p = w.project(&f, DyadicIndex::Band(4)).unwrap();
        assert!(p.sub(&f).unwrap().sup_norm() < 1e-13);
        // band 16 is not ≪ 16
        let low = w.project_region(&f, Relation::MuchLess, 16.0).unwrap();
        assert!(low.sup_norm() < 1e-13);
    }

    #[test]
    fn constant_lives_in_low_block() {
        let w = family(256, 2.0 * PI);
        let g = Arc::clone(w.grid());
        let c = Field::from_fn(Arc::clone(&g), |_| Complex64::new(2.0, -1.0)).unwrap();
        assert!(w.project(&c, DyadicIndex::Low).unwrap().sub(&c).unwrap().sup_norm() < 1e-14);
        for idx in w.indices().into_iter().skip(1) {
            assert!(w.project(&c, idx).unwrap().sup_norm() < 1e-14);
        }
    }

    #[test]
    fn region_sets_follow_conventions() {
        let w = family(1024, 2.0 * PI);
        let b = |v: &[DyadicIndex]| v.iter().map(|i| i.value()).collect::<Vec<_>>();
        assert_eq!(b(&w.region_indices(Relation::MuchLess, 16.0).unwrap()), vec![0.0, 1.0, 2.0, 4.0]);
        assert_eq!(b(&w.region_indices(Relation::Sim, 16.0).unwrap()), vec![8.0, 16.0, 32.0]);
        assert_eq!(b(&w.region_indices(Relation::Lesssim, 1.0).unwrap()), vec![0.0, 1.0, 2.0]);
        assert_eq!(b(&w.region_indices(Relation::MuchGreater, 64.0).unwrap()), vec![256.0]);
        assert_eq!(b(&w.intermediate_indices(16.0).unwrap()), vec![2.0, 4.0]);
        assert_eq!(
            w.tilde_indices(DyadicIndex::Band(0), TildeWidth::Width2).unwrap(),
            vec![DyadicIndex::Low, DyadicIndex::Band(0), DyadicIndex::Band(1), DyadicIndex::Band(2)]
        );
        assert_eq!(
            w.tilde_indices(DyadicIndex::Band(8), TildeWidth::Width1).unwrap(),
            vec![DyadicIndex::Band(7), DyadicIndex::Band(8)]
        );
    }

    #[test]
    fn much_less_symbol_is_rescaled_psi() {
        let w = family(1024, 2.0 * PI);
        let m = w.region_multiplier(Relation::MuchLess, 32.0).unwrap();
        let g = Arc::clone(w.grid());
        for (i, &k) in g.xi().iter().enumerate() {
            if i == g.nyquist_slot() {
                continue;
            }
            let expect = WindowProfile::SmoothBump.psi(4.0 * k / 32.0);
            assert!((m.as_slice()[i].re - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn bernstein_single_mode_is_one() {
        let w = family(512, 2.0 * PI);
        let g = Arc::clone(w.grid());
        let f = Field::from_fn(Arc::clone(&g), |x| Complex64::from_polar(1.0, 8.0 * x)).unwrap();
        let r = w.bernstein_ratio(&f, DyadicIndex::Band(3), 1.0, 2.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let zero = Field::zeros(Arc::clone(&g));
        assert!(matches!(
            w.bernstein_ratio(&zero, DyadicIndex::Band(3), 1.0, 2.0),
            Err(LabError::ZeroBand)
        ));
    }
}
