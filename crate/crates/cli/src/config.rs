//! Run configuration: a JSON file whose keys mirror the command-line flags.
//! Flags override file values; anything still unset takes the command default.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use dnlslab_core::estimates::{
    FamilyKind, InhomogeneousEstimate, LeibnizExponents, Physics, Suite, SuiteGrid, TestFamily,
};
use dnlslab_core::littlewood_paley::DyadicIndex;
use dnlslab_core::solver::InitialData;
use dnlslab_core::spectral::GridSpec;

/// Default output directory when neither a flag, the environment nor the file names one.
pub const DEFAULT_OUT: &str = "dnlslab-out";
pub const OUT_ENV: &str = "DNLSLAB_OUT";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<dnlslab_core::LabError> for ConfigError {
    fn from(e: dnlslab_core::LabError) -> Self {
        ConfigError(e.to_string())
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

fn invalid<T>(msg: impl Into<String>) -> ConfigResult<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    GaugeCheck,
    Estimates,
    Decompose,
    Norms,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridArgs {
    /// Number of grid points (even).
    #[arg(long)]
    pub nx: Option<usize>,
    /// Period of the box.
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    /// Store every n-th step.
    #[arg(long)]
    pub store_every: Option<usize>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Power of the nonlinearity (k ≥ 5).
    #[arg(long)]
    pub k: Option<f64>,
    /// Accept 4 ≤ k < 5.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub relaxed_k: Option<bool>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataArgs {
    /// Initial datum, e.g. `gaussian:amp=0.5,width=2` or `file:u0.csv`.
    #[arg(long)]
    pub ic: Option<String>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeArgs {
    /// Dyadic frequency of the gauged block.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub band: Option<f64>,
    /// Repeat on the grid with nx doubled and dt halved.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateArgs {
    /// Estimate to verify (see `--help` of the subcommand).
    #[arg(long)]
    pub which: Option<String>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Family `<kind>:<members>`, kinds gaussian, modulated, random_band, trajectory.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fractional order of the gauge Leibniz rule.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Comma-separated `p,p1,p2,q,q1,q2` for the gauge Leibniz rule.
    #[arg(long)]
    pub leibniz: Option<String>,
    /// Space exponent of the bilinear estimate.
    #[arg(long)]
    pub p: Option<f64>,
    /// High-frequency size of the rescaled data.
    #[arg(long)]
    pub c_high: Option<f64>,
    /// Commutator bands.
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N")]
    pub bands: Option<Vec<f64>>,
    /// Nonlinear terms to report separately.
    #[arg(long, value_delimiter = ',')]
    pub terms: Option<Vec<usize>>,
    /// Gate on one refinement step (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub refine: Option<bool>,
    /// Drop the low block from the X_T sums.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub exclude_low: Option<bool>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputArgs {
    /// Output directory (overrides DNLSLAB_OUT and the config file).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for family evaluation.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Trajectory export: csv, binary or none.
    #[arg(long)]
    pub format: Option<String>,
}

/// Everything a run may be configured with. Unset fields take command defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub grid: GridArgs,
    pub physics: PhysicsArgs,
    pub data: DataArgs,
    pub gauge: GaugeArgs,
    pub estimates: EstimateArgs,
    pub output: OutputArgs,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr; $($f:ident),+) => {
        $( if $hi.$f.is_none() { $hi.$f = $lo.$f.clone(); } )+
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> ConfigResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("config {}: {e}", path.display())))
    }

    /// Fills every unset field of `self` from `file`.
    pub fn over(mut self, file: &RunConfig) -> Self {
        if self.command.is_none() {
            self.command = file.command;
        }
        overlay!(self.grid, file.grid; nx, length, dt, horizon, store_every);
        overlay!(self.physics, file.physics; lambda, k, relaxed_k);
        overlay!(self.data, file.data; ic);
        overlay!(self.gauge, file.gauge; band, refine);
        overlay!(self.estimates, file.estimates;
            which, theta, family, seed, alpha, leibniz, p, c_high, bands, terms, refine, exclude_low);
        overlay!(self.output, file.output; out, jobs, format);
        self
    }

    /// Output directory: `--out`, then `DNLSLAB_OUT`, then the file value, then the default.
    /// `self` must not hold the flag value yet.
    pub fn resolve_out(&mut self, flag: Option<&PathBuf>) {
        let env = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        self.output.out = flag.cloned().or(env).or(self.output.out.take()).or(Some(PathBuf::from(DEFAULT_OUT)));
    }

    /// Fills the remaining fields with the defaults of the command.
    pub fn with_defaults(self) -> ConfigResult<Self> {
        let Some(cmd) = self.command else {
            return invalid("no command given");
        };
        let defaults = match cmd {
            Command::Estimates => self.estimate_defaults()?,
            _ => trajectory_defaults(cmd),
        };
        Ok(self.over(&defaults))
    }

    fn estimate_defaults(&self) -> ConfigResult<RunConfig> {
        let which = self.estimates.which.clone().unwrap_or_else(|| "strichartz".into());
        let grid = match Target::parse(&which)? {
            Target::Commutator => grid(2048, 100.0, 0.01, 0.1, 1),
            Target::Bilinear | Target::Nonlinear => grid(512, 50.0, 1e-3, 0.25, 2),
            Target::Apriori => {
                let c = self.estimates.c_high.unwrap_or(0.5);
                let t = self.grid.horizon.unwrap_or(c.powi(4));
                grid(512, 50.0, t / 64.0, t, 1)
            }
            _ => grid(512, 50.0, 0.005, 0.5, 2),
        };
        let family = match Target::parse(&which)? {
            Target::Bilinear | Target::Nonlinear => "trajectory:20",
            _ => "gaussian:20",
        };
        Ok(RunConfig {
            grid,
            physics: physics_defaults(),
            estimates: EstimateArgs {
                which: Some(which),
                theta: Some(0.0),
                family: Some(family.into()),
                seed: Some(0),
                alpha: Some(0.5),
                leibniz: Some("4,8,8,2,4,4".into()),
                p: Some(4.0),
                c_high: Some(0.5),
                bands: Some(vec![8.0, 16.0, 32.0]),
                terms: Some(vec![1, 2, 3, 4, 5]),
                refine: Some(true),
                exclude_low: Some(false),
            },
            output: OutputArgs {
                jobs: Some(0),
                ..OutputArgs::default()
            },
            ..RunConfig::default()
        })
    }
}

fn grid(nx: usize, length: f64, dt: f64, horizon: f64, store_every: usize) -> GridArgs {
    GridArgs {
        nx: Some(nx),
        length: Some(length),
        dt: Some(dt),
        horizon: Some(horizon),
        store_every: Some(store_every),
    }
}

fn physics_defaults() -> PhysicsArgs {
    PhysicsArgs {
        lambda: Some(1.0),
        k: Some(5.0),
        relaxed_k: Some(false),
    }
}

fn trajectory_defaults(cmd: Command) -> RunConfig {
    RunConfig {
        grid: grid(2048, 100.0, 1e-4, 0.1, 10),
        physics: physics_defaults(),
        data: DataArgs {
            ic: Some("gaussian:amp=0.5,width=2".into()),
        },
        gauge: GaugeArgs {
            band: Some(8.0),
            refine: Some(false),
        },
        output: OutputArgs {
            jobs: Some(0),
            format: Some(if cmd == Command::Simulate { "csv" } else { "none" }.into()),
            ..OutputArgs::default()
        },
        ..RunConfig::default()
    }
}

/// Estimate selected by `--which`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    Strichartz,
    Smoothing(dnlslab_core::estimates::SmoothingKind),
    Inhomogeneous(InhomogeneousEstimate),
    GaugeLeibniz,
    Commutator,
    Bilinear,
    Nonlinear,
    DataGauge,
    Apriori,
}

impl Target {
    pub const NAMES: &'static str = "strichartz, smoothing, maximal_l2, maximal_l4, retarded_strichartz, \
energy_from_dual_smoothing, block_maximal_from_dual_smoothing, maximal_l4_from_dual_smoothing, \
smoothing_from_energy, block_from_energy, maximal_l4_from_energy, double_smoothing, gauge_leibniz, \
commutator, bilinear, nonlinear, data_gauge, apriori";

    pub fn parse(s: &str) -> ConfigResult<Self> {
        Ok(match s {
            "strichartz" => Self::Strichartz,
            "gauge_leibniz" => Self::GaugeLeibniz,
            "commutator" => Self::Commutator,
            "bilinear" => Self::Bilinear,
            "nonlinear" => Self::Nonlinear,
            "data_gauge" => Self::DataGauge,
            "apriori" => Self::Apriori,
            other => {
                if let Ok(k) = other.parse() {
                    Self::Smoothing(k)
                } else if let Ok(e) = other.parse() {
                    Self::Inhomogeneous(e)
                } else {
                    return invalid(format!("unknown estimate `{other}`; expected one of {}", Self::NAMES));
                }
            }
        })
    }

    fn linear(&self) -> bool {
        matches!(
            self,
            Self::Strichartz | Self::Smoothing(_) | Self::Inhomogeneous(_) | Self::GaugeLeibniz
        )
    }
}

/// Validated inputs shared by the trajectory commands.
pub struct TrajectoryPlan {
    pub spec: GridSpec,
    pub store_every: usize,
    pub lambda: f64,
    pub k: f64,
    pub data: InitialData,
}

pub struct GaugePlan {
    pub run: TrajectoryPlan,
    pub band: DyadicIndex,
    pub refine: bool,
}

pub struct EstimatePlan {
    pub target: Target,
    pub suite: Suite,
    pub family: TestFamily,
    pub physics: Physics,
    pub theta: f64,
    pub alpha: f64,
    pub leibniz: LeibnizExponents,
    pub p: f64,
    pub c_high: f64,
    pub bands: Vec<DyadicIndex>,
    pub terms: Vec<usize>,
}

/// Checks `k ≥ 5`, or `k ≥ 4` with `--relaxed-k`.
fn check_k(k: f64, relaxed: bool) -> ConfigResult<()> {
    let min = if relaxed { 4.0 } else { 5.0 };
    if !(k.is_finite() && k >= min) {
        let hint = if relaxed { "" } else { " (pass --relaxed-k to allow k ≥ 4)" };
        return invalid(format!("k = {k} must be at least {min}{hint}"));
    }
    Ok(())
}

fn dyadic(n: f64) -> ConfigResult<DyadicIndex> {
    DyadicIndex::from_value(n).map_err(|e| ConfigError(format!("N = {n}: {e}")))
}

impl RunConfig {
    fn store_every(&self) -> ConfigResult<usize> {
        match self.grid.store_every {
            Some(0) => invalid("store_every must be >= 1"),
            Some(s) => Ok(s),
            None => invalid("store_every unset"),
        }
    }

    fn grid_spec(&self) -> ConfigResult<GridSpec> {
        let g = &self.grid;
        let (Some(nx), Some(l), Some(dt), Some(t)) = (g.nx, g.length, g.dt, g.horizon) else {
            return invalid("grid parameters are incomplete");
        };
        Ok(GridSpec::new(nx, l, dt, t)?)
    }

    fn lambda_k(&self) -> ConfigResult<(f64, f64, bool)> {
        let p = &self.physics;
        let lambda = p.lambda.unwrap_or(1.0);
        let k = p.k.unwrap_or(5.0);
        let relaxed = p.relaxed_k.unwrap_or(false);
        if !lambda.is_finite() {
            return invalid(format!("λ = {lambda} is not finite"));
        }
        check_k(k, relaxed)?;
        Ok((lambda, k, relaxed))
    }

    pub fn jobs(&self) -> usize {
        self.output.jobs.unwrap_or(0)
    }

    pub fn format(&self) -> ConfigResult<&str> {
        match self.output.format.as_deref().unwrap_or("none") {
            f @ ("csv" | "binary" | "none") => Ok(f),
            other => invalid(format!("unknown trajectory format `{other}` (csv, binary, none)")),
        }
    }

    pub fn trajectory_plan(&self) -> ConfigResult<TrajectoryPlan> {
        let spec = self.grid_spec()?;
        let (lambda, k, relaxed) = self.lambda_k()?;
        if relaxed {
            return invalid("--relaxed-k applies only to the nonlinear and commutator suites");
        }
        let ic = self.data.ic.as_deref().unwrap_or_default();
        let data: InitialData = ic.parse().map_err(|e| ConfigError(format!("--ic `{ic}`: {e}")))?;
        if let InitialData::File { path } = &data {
            if !path.is_file() {
                return invalid(format!("initial data file {} does not exist", path.display()));
            }
        }
        self.format()?;
        Ok(TrajectoryPlan {
            spec,
            store_every: self.store_every()?,
            lambda,
            k,
            data,
        })
    }

    pub fn gauge_plan(&self) -> ConfigResult<GaugePlan> {
        let run = self.trajectory_plan()?;
        let band = dyadic(self.gauge.band.unwrap_or(8.0))?;
        if band == DyadicIndex::Low {
            return invalid("the gauge acts on a dyadic block N ≥ 2");
        }
        Ok(GaugePlan {
            run,
            band,
            refine: self.gauge.refine.unwrap_or(false),
        })
    }

    pub fn estimate_plan(&self) -> ConfigResult<EstimatePlan> {
        let e = &self.estimates;
        let target = Target::parse(e.which.as_deref().unwrap_or("strichartz"))?;
        let g = &self.grid;
        let sg = SuiteGrid::new(
            g.nx.unwrap_or_default(),
            g.length.unwrap_or_default(),
            g.dt.unwrap_or_default(),
            g.horizon.unwrap_or_default(),
            self.store_every()?,
        )?;
        sg.spec()?;
        let mut suite = Suite::new(sg);
        suite.refine = e.refine.unwrap_or(true);
        suite.include_low = !e.exclude_low.unwrap_or(false);

        let spec = e.family.as_deref().unwrap_or("gaussian:20");
        let mut family: TestFamily = spec.parse().map_err(|err| ConfigError(format!("--family `{spec}`: {err}")))?;
        family = family.with_seed(e.seed.unwrap_or(0));
        family.validate(true)?;
        let trajectories = family.kind == FamilyKind::SolverTrajectory;
        match target {
            Target::Bilinear | Target::Nonlinear if !trajectories => {
                return invalid("bilinear and nonlinear suites need a trajectory family, e.g. trajectory:20")
            }
            t if t != Target::Bilinear && t != Target::Nonlinear && trajectories => {
                return invalid("trajectory families only feed the bilinear and nonlinear suites")
            }
            _ => {}
        }

        let theta = e.theta.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&theta) {
            return invalid(format!("θ = {theta} must lie in [0, 1]"));
        }
        if target.linear() {
            let t = sg.horizon;
            if !(t > 0.0 && t < 1.0) {
                return invalid(format!("the linear estimates assume T ∈ (0, 1), got {t}"));
            }
        }
        let (lambda, k, relaxed) = self.lambda_k()?;
        if relaxed && !matches!(target, Target::Nonlinear | Target::Commutator) {
            return invalid("--relaxed-k applies only to the nonlinear and commutator suites");
        }
        let mut physics = Physics::new(lambda, k);
        if relaxed {
            physics = physics.relaxed();
        }
        if !target.linear() {
            physics.validate()?;
        }

        let alpha = e.alpha.unwrap_or(0.5);
        if !(alpha > 0.0 && alpha < 1.0) {
            return invalid(format!("α = {alpha} must lie in (0, 1)"));
        }
        let leibniz = parse_leibniz(e.leibniz.as_deref().unwrap_or("4,8,8,2,4,4"))?;
        if target == Target::GaugeLeibniz {
            leibniz.validate()?;
        }
        let p = e.p.unwrap_or(4.0);
        if !(p >= 4.0 && p.is_finite()) {
            return invalid(format!("bilinear exponent p = {p} must be finite and at least 4"));
        }
        let c_high = e.c_high.unwrap_or(0.5);
        if target == Target::Apriori {
            let t = sg.horizon;
            if !(c_high > 0.0) {
                return invalid(format!("C_high = {c_high} must be positive"));
            }
            if t > c_high.powi(4) {
                return invalid(format!("T = {t} exceeds C_high^4 = {}", c_high.powi(4)));
            }
        }
        let bands = e
            .bands
            .clone()
            .unwrap_or_else(|| vec![8.0, 16.0, 32.0])
            .into_iter()
            .map(dyadic)
            .collect::<ConfigResult<Vec<_>>>()?;
        if target == Target::Commutator && (bands.is_empty() || bands.contains(&DyadicIndex::Low)) {
            return invalid("commutator bands must be dyadic N ≥ 2");
        }
        let terms = e.terms.clone().unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
        if terms.is_empty() || terms.iter().any(|j| !(1..=5).contains(j)) {
            return invalid(format!("terms {terms:?} must be a non-empty subset of 1..=5"));
        }
        Ok(EstimatePlan {
            target,
            suite,
            family,
            physics,
            theta,
            alpha,
            leibniz,
            p,
            c_high,
            bands,
            terms,
        })
    }
}

fn parse_leibniz(s: &str) -> ConfigResult<LeibnizExponents> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| match x.trim() {
            "inf" | "∞" => Ok(f64::INFINITY),
            t => t.parse::<f64>(),
        })
        .collect::<Result<_, _>>()
        .map_err(|_| ConfigError(format!("--leibniz `{s}` is not a list of numbers")))?;
    let [p, p1, p2, q, q1, q2] = v[..] else {
        return invalid(format!("--leibniz needs six exponents p,p1,p2,q,q1,q2, got {}", v.len()));
    };
    Ok(LeibnizExponents { p, p1, p2, q, q1, q2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn estimates(which: &str) -> RunConfig {
        RunConfig {
            command: Some(Command::Estimates),
            estimates: EstimateArgs {
                which: Some(which.into()),
                ..EstimateArgs::default()
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn flags_win_over_file_values() {
        let file: RunConfig = serde_json::from_str(r#"{"grid": {"nx": 64, "T": 0.3}, "physics": {"k": 6}}"#).unwrap();
        let flags = RunConfig {
            grid: GridArgs {
                nx: Some(128),
                ..GridArgs::default()
            },
            ..RunConfig::default()
        };
        let merged = flags.over(&file);
        assert_eq!(merged.grid.nx, Some(128));
        assert_eq!(merged.grid.horizon, Some(0.3));
        assert_eq!(merged.physics.k, Some(6.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"grid": {"points": 64}}"#).is_err());
    }

    #[test]
    fn defaults_depend_on_the_estimate() {
        let c = estimates("nonlinear").with_defaults().unwrap();
        assert_eq!(c.grid.dt, Some(1e-3));
        assert_eq!(c.estimates.family.as_deref(), Some("trajectory:20"));
        let c = estimates("apriori").with_defaults().unwrap();
        assert_eq!(c.grid.horizon, Some(0.0625));
    }

    #[test]
    fn k_below_five_needs_the_relaxed_flag() {
        let mut c = estimates("strichartz").with_defaults().unwrap();
        c.physics.k = Some(4.5);
        assert!(c.estimate_plan().is_err());
        c.physics.relaxed_k = Some(true);
        assert!(c.estimate_plan().is_err(), "relaxed mode is not offered for linear suites");
        let mut c = estimates("nonlinear").with_defaults().unwrap();
        c.physics.k = Some(4.5);
        assert!(c.estimate_plan().is_err());
        c.physics.relaxed_k = Some(true);
        assert!(c.estimate_plan().is_ok());
    }

    #[test]
    fn small_families_are_rejected() {
        let mut c = estimates("strichartz").with_defaults().unwrap();
        c.estimates.family = Some("gaussian:5".into());
        assert!(c.estimate_plan().is_err());
    }

    #[test]
    fn leibniz_exponents_parse() {
        let e = parse_leibniz("4, 8, 8, 2, 4, inf").unwrap();
        assert!(e.q2.is_infinite());
        assert!(parse_leibniz("4,8").is_err());
    }
}
