use std::f64::consts::PI;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spectral::{Field, Grid};

/// Initial profiles `u_0`.
///
/// Gaussians are `amp · exp(−((x − center)/width)²)`; the modulated variant
/// multiplies by `e^{i carrier x}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Gaussian {
        amp: f64,
        width: f64,
        #[serde(default)]
        center: f64,
    },
    ModulatedGaussian {
        amp: f64,
        width: f64,
        #[serde(default)]
        center: f64,
        carrier: f64,
    },
    /// Superposition of `packets` Gaussian wave packets with carriers drawn
    /// from `k_min ≤ |ξ| ≤ k_max`, rescaled to `sup |u_0| = amp`.
    RandomBand {
        amp: f64,
        width: f64,
        k_min: f64,
        k_max: f64,
        packets: usize,
        seed: u64,
    },
    /// CSV with `re` and `im` columns (an `x` column is ignored), one row per grid point.
    File { path: PathBuf },
}

impl InitialData {
    pub fn gaussian(amp: f64, width: f64) -> Self {
        InitialData::Gaussian {
            amp,
            width,
            center: 0.0,
        }
    }

    pub fn modulated(amp: f64, width: f64, carrier: f64) -> Self {
        InitialData::ModulatedGaussian {
            amp,
            width,
            center: 0.0,
            carrier,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(LabError::InvalidParameter(format!("{name} = {v} must be positive")))
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(LabError::InvalidParameter(format!("{name} = {v} must be finite")))
            }
        };
        match self {
            InitialData::Gaussian { amp, width, center } => {
                finite("amp", *amp)?;
                positive("width", *width)?;
                finite("center", *center)
            }
            InitialData::ModulatedGaussian {
                amp,
                width,
                center,
                carrier,
            } => {
                finite("amp", *amp)?;
                positive("width", *width)?;
                finite("center", *center)?;
                finite("carrier", *carrier)
            }
            InitialData::RandomBand {
                amp,
                width,
                k_min,
                k_max,
                packets,
                ..
            } => {
                finite("amp", *amp)?;
                positive("width", *width)?;
                if !(*k_min >= 0.0 && k_max >= k_min && k_max.is_finite()) {
                    return Err(LabError::InvalidParameter(format!(
                        "band [{k_min}, {k_max}] is not a valid range"
                    )));
                }
                if *packets == 0 {
                    return Err(LabError::InvalidParameter("packets must be >= 1".into()));
                }
                Ok(())
            }
            InitialData::File { .. } => Ok(()),
        }
    }

    /// Samples the profile on `grid` and checks edge decay against the grid's tolerance.
    pub fn build(&self, grid: &Arc<Grid>) -> Result<Field> {
        self.validate()?;
        let field = match self {
            InitialData::Gaussian { amp, width, center } => Field::from_fn(Arc::clone(grid), |x| {
                Complex64::new(amp * (-((x - center) / width).powi(2)).exp(), 0.0)
            })?,
            InitialData::ModulatedGaussian {
                amp,
                width,
                center,
                carrier,
            } => Field::from_fn(Arc::clone(grid), |x| {
                Complex64::from_polar(amp * (-((x - center) / width).powi(2)).exp(), carrier * x)
            })?,
            InitialData::RandomBand {
                amp,
                width,
                k_min,
                k_max,
                packets,
                seed,
            } => random_packets(grid, *amp, *width, *k_min, *k_max, *packets, *seed)?,
            InitialData::File { path } => read_profile(grid, path)?,
        };
        check_edge_decay(&field, grid.spec().edge_tol)?;
        Ok(field)
    }
}

pub(crate) fn check_edge_decay(f: &Field, tol: f64) -> Result<()> {
    let v = f.values();
    let edge = v[0].norm().max(v[v.len() - 1].norm());
    if edge > tol {
        Err(LabError::EdgeDecayViolation { value: edge, tol })
    } else {
        Ok(())
    }
}

fn random_packets(
    grid: &Arc<Grid>,
    amp: f64,
    width: f64,
    k_min: f64,
    k_max: f64,
    packets: usize,
    seed: u64,
) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = grid.length() / 8.0;
    let parts: Vec<(f64, f64, Complex64)> = (0..packets)
        .map(|_| {
            let k = rng.gen_range(k_min..=k_max);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let centre = rng.gen_range(-spread..=spread);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (sign * k, centre, Complex64::new(re, im))
        })
        .collect();
    let raw = Field::from_fn(Arc::clone(grid), |x| {
        parts
            .iter()
            .map(|&(k, c, a)| a * (-((x - c) / width).powi(2)).exp() * Complex64::from_polar(1.0, k * x))
            .sum()
    })?;
    let peak = raw.sup_norm();
    if peak == 0.0 {
        return Ok(raw);
    }
    Ok(raw.scale(Complex64::new(amp / peak, 0.0)))
}

fn read_profile(grid: &Arc<Grid>, path: &PathBuf) -> Result<Field> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| LabError::Parse(format!("{}: missing column '{name}'", path.display())))
    };
    let (ire, iim) = (col("re")?, col("im")?);
    let mut values = Vec::with_capacity(grid.nx());
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .map_err(|_| LabError::Parse(format!("{}: bad number in row {}", path.display(), values.len() + 1)))
        };
        values.push(Complex64::new(parse(ire)?, parse(iim)?));
    }
    Field::new(Arc::clone(grid), values)
}

/// Random field with independent Gaussian Fourier coefficients on
/// `|ξ| ≤ k_max` (Nyquist excluded), normalized to unit `L²` norm.
pub fn band_limited_field<R: Rng>(grid: &Arc<Grid>, k_max: f64, rng: &mut R) -> Field {
    let n = grid.nx();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for (i, c) in coeffs.iter_mut().enumerate() {
        if i != grid.nyquist_slot() && grid.xi()[i].abs() <= k_max {
            *c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    grid.fft_inverse(&mut coeffs);
    let f = Field::from_raw(Arc::clone(grid), coeffs);
    let norm = f.l2_norm();
    if norm == 0.0 {
        f
    } else {
        f.scale(Complex64::new(1.0 / norm, 0.0))
    }
}

fn parse_kv(body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| LabError::Parse(format!("expected key=value, got '{kv}'")))?;
            Ok((k.trim().to_ascii_lowercase(), v.trim().to_string()))
        })
        .collect()
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| LabError::Parse(format!("{key}: '{v}' is not a number")))
}

impl FromStr for InitialData {
    type Err = LabError;

    /// `gaussian:amp=0.5,width=2`, `modulated:amp=1,width=1,carrier=8`,
    /// `random_band:kmin=2,kmax=8,seed=3`, `file:path.csv`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s.split_once(':').unwrap_or((s, ""));
        let kind = kind.trim().to_ascii_lowercase();
        if kind == "file" {
            if body.trim().is_empty() {
                return Err(LabError::Parse("file: missing path".into()));
            }
            return Ok(InitialData::File {
                path: PathBuf::from(body.trim()),
            });
        }
        let (mut amp, mut width, mut center, mut carrier) = (1.0, 1.0, 0.0, 0.0);
        let (mut k_min, mut k_max, mut packets, mut seed) = (0.0, 4.0, 4usize, 0u64);
        for (k, v) in parse_kv(body)? {
            match k.as_str() {
                "amp" => amp = num(&k, &v)?,
                "width" => width = num(&k, &v)?,
                "center" | "centre" => center = num(&k, &v)?,
                "carrier" | "k0" => carrier = num(&k, &v)?,
                "kmin" | "k_min" => k_min = num(&k, &v)?,
                "kmax" | "k_max" => k_max = num(&k, &v)?,
                "packets" => {
                    packets = v.parse().map_err(|_| LabError::Parse(format!("packets: '{v}'")))?
                }
                "seed" => seed = v.parse().map_err(|_| LabError::Parse(format!("seed: '{v}'")))?,
                other => return Err(LabError::Parse(format!("unknown key '{other}' for {kind}"))),
            }
        }
        let data = match kind.as_str() {
            "gaussian" => InitialData::Gaussian { amp, width, center },
            "modulated" | "modulated_gaussian" => InitialData::ModulatedGaussian {
                amp,
                width,
                center,
                carrier,
            },
            "random_band" | "random" => InitialData::RandomBand {
                amp,
                width,
                k_min,
                k_max,
                packets,
                seed,
            },
            other => return Err(LabError::Parse(format!("unknown initial data kind '{other}'"))),
        };
        data.validate()?;
        Ok(data)
    }
}

/// Carrier frequency `2π m / L` of mode `m`, handy for exact plane waves.
pub fn mode_frequency(grid: &Grid, m: i64) -> f64 {
    2.0 * PI * m as f64 / grid.length()
}
