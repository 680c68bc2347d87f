use thiserror::Error;

/// Errors raised by the laboratory's numerical operations.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value encountered in {0}")]
    NonFiniteValue(&'static str),

    #[error("negative homogeneous order {order} requested on a field with nonzero mean")]
    NegativeHomogeneousOnMeanful { order: f64 },

    #[error("integrand not negligible at the domain edge: |f| = {value:e} > {tol:e}")]
    EdgeDecayViolation { value: f64, tol: f64 },

    #[error("resolution too coarse: largest usable dyadic band is {cap}, need at least 2")]
    ResolutionTooCoarse { cap: f64 },

    #[error("dyadic band {n} lies above the usable cap {cap}")]
    BandAboveNyquist { n: f64, cap: f64 },

    #[error("dyadic block is numerically zero")]
    ZeroBand,

    #[error("k = {k} is below 4; |w|^(k-4) is undefined at zeros")]
    KBelowFour { k: f64 },

    #[error("invalid gauge parameters: {0}")]
    InvalidGaugeParams(String),

    #[error("need at least {needed} stored time levels, got {got}")]
    TooFewTimeLevels { needed: usize, got: usize },

    #[error("time {t} is not aligned with a stored level")]
    MisalignedTime { t: f64 },

    #[error("blow-up detected at t = {t}: sup|u| = {sup:e}")]
    BlowupDetected { t: f64, sup: f64 },

    #[error("time step too large: dt * max|xi|^2 = {value} exceeds {limit}")]
    StepTooLarge { value: f64, limit: f64 },

    #[error("target grid does not resolve the rescaled data (tail fraction {tail:e})")]
    TargetGridUnresolved { tail: f64 },

    #[error("right-hand side below threshold for every member")]
    ZeroRhs,

    #[error("Hölder exponent relations violated: {0}")]
    ExponentMismatch(String),

    #[error("quadrature budget exceeded: {points} evaluation points > {budget}")]
    QuadratureBudgetExceeded { points: usize, budget: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
